#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "fomo/mae.hpp"
#include "fomo/mae_check.hpp"
#include "fomo/optim.hpp"

using namespace fomo;

namespace {

ModelDims small_dims(int n_bands = 4, ProjectionMode mode = ProjectionMode::kShared) {
    ModelDims d;
    d.mode = mode;
    d.patch_size = 2;
    d.width = 8;
    d.encoder_depth = 1;
    d.encoder_heads = 2;
    d.decoder_depth = 1;
    d.decoder_heads = 2;
    d.decoder_width = 8;
    d.n_bands = n_bands;
    d.n_positions = 4;
    return d;
}

std::vector<TokenInfo> flat_info(std::int64_t t) {
    std::vector<TokenInfo> info(static_cast<std::size_t>(t));
    for (std::int64_t i = 0; i < t; ++i) info[static_cast<std::size_t>(i)] = {0, 0, i % 4};
    return info;
}

SampleView<double> random_view(RngStream& rng, const std::vector<int>& bands, int size) {
    SampleView<double> view;
    for (int b : bands) {
        Tensor<double> raster({size, size});
        for (auto& v : raster.data) v = rng.normal();
        view.push_back({b, std::move(raster)});
    }
    return view;
}

MaskPlan explicit_plan(std::vector<char> masked) {
    MaskPlan plan;
    plan.n_masked = std::accumulate(masked.begin(), masked.end(), std::int64_t{0});
    plan.masked = std::move(masked);
    return plan;
}

}  // namespace

TEST_CASE("masked count is round(ratio * tokens)") {
    RngStream rng(1);
    for (const std::int64_t t : {16, 64, 256}) {
        const auto info = flat_info(t);
        CHECK(mask_tokens(info, 0.0, rng).n_masked == 0);
        CHECK(mask_tokens(info, 0.5, rng).n_masked == std::llround(0.5 * static_cast<double>(t)));
        CHECK(mask_tokens(info, 0.75, rng).n_masked == std::llround(0.75 * static_cast<double>(t)));
    }
    // Rounding, not truncation: 0.3 * 16 = 4.8 -> 5.
    CHECK(mask_tokens(flat_info(16), 0.3, rng).n_masked == 5);
    // At least one token always stays visible.
    CHECK(mask_tokens(flat_info(16), 0.99, rng).n_masked == 15);
}

TEST_CASE("mask ratio domain is [0,1) and the batch must be nonempty") {
    RngStream rng(2);
    CHECK_THROWS_AS(mask_tokens(flat_info(8), 1.0, rng), ValidationError);
    CHECK_THROWS_AS(mask_tokens(flat_info(8), -0.1, rng), ValidationError);
    CHECK_THROWS_AS(mask_tokens({}, 0.5, rng), ValidationError);
}

TEST_CASE("each token is masked equally often across draws") {
    RngStream rng(3);
    const auto info = flat_info(16);
    const int draws = 10000;
    std::vector<int> hits(16, 0);
    for (int d = 0; d < draws; ++d) {
        const auto plan = mask_tokens(info, 0.75, rng);
        for (std::size_t i = 0; i < 16; ++i) hits[i] += plan.masked[i];
    }
    // Binomial(10000, 0.75): three sigma is about 130.
    for (int h : hits) {
        CHECK(h > 7500 - 130);
        CHECK(h < 7500 + 130);
    }
}

TEST_CASE("per-band masking stratifies the draw inside each band group") {
    RngStream rng(4);
    std::vector<TokenInfo> info;
    for (int b : {0, 1}) {
        for (std::int64_t pos = 0; pos < 8; ++pos) info.push_back({0, b, pos % 4});
    }
    for (int rep = 0; rep < 50; ++rep) {
        const auto plan = mask_tokens(info, 0.5, rng, true);
        std::int64_t band0 = 0, band1 = 0;
        for (std::size_t i = 0; i < info.size(); ++i) {
            if (plan.masked[i]) (info[i].band == 0 ? band0 : band1) += 1;
        }
        CHECK(band0 == 4);
        CHECK(band1 == 4);
    }
}

TEST_CASE("a zero-weight block is the identity map") {
    const auto dims = small_dims();
    const auto params = ParamStore<double>::zeros(dims);
    Graph<double> g;
    const auto gp = GraphParams<double>::leaf_all(g, params, false);
    RngStream rng(5);
    Tensor<double> x({6, dims.width});
    for (auto& v : x.data) v = rng.normal();
    const Var in = g.leaf(x, false);
    const Var out = transformer_block(g, gp, "enc.0", in, dims.encoder_heads, {{0, 1, 2, 3, 4, 5}});
    CHECK(g.value(out).data == x.data);
}

TEST_CASE("perfect reconstruction gives exactly zero loss") {
    const auto dims = small_dims(2);
    auto params = ParamStore<double>::zeros(dims);
    SampleView<double> view;
    for (int b : {0, 1}) view.push_back({b, Tensor<double>({4, 4}, 0.0)});
    const std::vector<SampleView<double>> views{view};
    const auto batch = build_token_batch(views, dims.patch_size);
    RngStream rng(6);
    const auto plan = mask_tokens(batch.info, 0.5, rng);

    // All-zero parameters and all-zero patches: the head emits zeros and the
    // targets are zeros.
    {
        Graph<double> g;
        const auto gp = GraphParams<double>::leaf_all(g, params, false);
        const auto res = mae_forward(g, gp, dims, batch, plan);
        CHECK(g.value(res.loss).data[0] == 0.0);
        for (double v : g.value(res.reconstructions).data) CHECK(v == 0.0);
    }

    // A constant head bias c against zero targets scores exactly c^2.
    for (auto& v : params.at("dec.head.b").data) v = 3.0;
    {
        Graph<double> g;
        const auto gp = GraphParams<double>::leaf_all(g, params, false);
        const auto res = mae_forward(g, gp, dims, batch, plan);
        CHECK(g.value(res.loss).data[0] == 9.0);
    }
}

TEST_CASE("the loss is the mean squared error over masked patches only") {
    const auto dims = small_dims(3);
    RngStream rng(7);
    const auto params = ParamStore<double>::init(dims, rng);
    const std::vector<SampleView<double>> views{random_view(rng, {0, 2}, 4)};
    const auto batch = build_token_batch(views, dims.patch_size);
    const auto plan = mask_tokens(batch.info, 0.75, rng);

    Graph<double> g;
    const auto gp = GraphParams<double>::leaf_all(g, params, false);
    const auto res = mae_forward(g, gp, dims, batch, plan);

    CHECK(static_cast<std::int64_t>(res.masked_rows.size()) == plan.n_masked);
    CHECK(res.masked_rows.size() + res.visible_rows.size() == batch.info.size());
    const auto& rec = g.value(res.reconstructions);
    REQUIRE(rec.shape == Shape{plan.n_masked, dims.patch_len()});
    REQUIRE(res.targets.shape == rec.shape);

    // Recompute from the reconstruction and target buffers alone: the loss
    // must be a function of masked-position outputs and nothing else.
    double sq = 0.0;
    for (std::size_t i = 0; i < rec.data.size(); ++i) {
        const double d = rec.data[i] - res.targets.data[i];
        sq += d * d;
    }
    const double manual = sq / static_cast<double>(rec.data.size());
    CHECK(g.value(res.loss).data[0] == doctest::Approx(manual).epsilon(1e-12));

    // Masked targets are the original patch rows.
    for (std::size_t i = 0; i < res.masked_rows.size(); ++i) {
        for (std::int64_t j = 0; j < dims.patch_len(); ++j) {
            CHECK(res.targets.at(static_cast<std::int64_t>(i), j) ==
                  batch.patches.at(res.masked_rows[i], j));
        }
    }
}

TEST_CASE("per-patch target normalization zeroes mean and scales variance") {
    const auto dims = small_dims(2);
    RngStream rng(8);
    const auto params = ParamStore<double>::init(dims, rng);
    const std::vector<SampleView<double>> views{random_view(rng, {0, 1}, 4)};
    const auto batch = build_token_batch(views, dims.patch_size);
    const auto plan = mask_tokens(batch.info, 0.5, rng);

    Graph<double> g;
    const auto gp = GraphParams<double>::leaf_all(g, params, false);
    const auto res = mae_forward(g, gp, dims, batch, plan, true);
    const std::int64_t pl = dims.patch_len();
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(res.masked_rows.size()); ++i) {
        double mu = 0.0, var = 0.0;
        for (std::int64_t j = 0; j < pl; ++j) mu += res.targets.at(i, j);
        mu /= static_cast<double>(pl);
        for (std::int64_t j = 0; j < pl; ++j) {
            var += (res.targets.at(i, j) - mu) * (res.targets.at(i, j) - mu);
        }
        var /= static_cast<double>(pl);
        CHECK(mu == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps-regularized rstd
    }
}

TEST_CASE("masked reconstructions depend on visible content") {
    const auto dims = small_dims(2);
    RngStream rng(9);
    const auto params = ParamStore<double>::init(dims, rng);
    auto view = random_view(rng, {0, 1}, 4);
    const std::vector<SampleView<double>> views_a{view};
    view[0].raster.data[0] += 1.0;  // perturb one pixel of a visible token
    const std::vector<SampleView<double>> views_b{view};

    const auto batch_a = build_token_batch(views_a, dims.patch_size);
    const auto batch_b = build_token_batch(views_b, dims.patch_size);
    // Token 0 (the perturbed one) stays visible; half the rest are masked.
    const auto plan = explicit_plan({0, 1, 0, 1, 0, 1, 0, 1});

    Graph<double> ga, gb;
    const auto gpa = GraphParams<double>::leaf_all(ga, params, false);
    const auto gpb = GraphParams<double>::leaf_all(gb, params, false);
    const auto ra = mae_forward(ga, gpa, dims, batch_a, plan);
    const auto rb = mae_forward(gb, gpb, dims, batch_b, plan);
    double delta = 0.0;
    const auto& reca = ga.value(ra.reconstructions);
    const auto& recb = gb.value(rb.reconstructions);
    for (std::size_t i = 0; i < reca.data.size(); ++i) delta += std::abs(reca.data[i] - recb.data[i]);
    CHECK(delta > 1e-8);
}

TEST_CASE("spectral rows of unused bands receive exactly zero gradient") {
    for (const auto mode : {ProjectionMode::kShared, ProjectionMode::kPerBand}) {
        const auto dims = small_dims(4, mode);
        RngStream rng(10);
        const auto params = ParamStore<double>::init(dims, rng);
        const std::vector<SampleView<double>> views{random_view(rng, {0, 2}, 4)};
        const auto batch = build_token_batch(views, dims.patch_size);
        const auto plan = mask_tokens(batch.info, 0.5, rng);

        Graph<double> g;
        const auto gp = GraphParams<double>::leaf_all(g, params, true);
        const auto res = mae_forward(g, gp, dims, batch, plan);
        g.backward(res.loss);

        const auto spec_grad = g.grad(gp.at("embed.spectral"));
        double used = 0.0;
        for (std::int64_t col = 0; col < dims.width; ++col) {
            CHECK(spec_grad.at(1, col) == 0.0);
            CHECK(spec_grad.at(3, col) == 0.0);
            used += std::abs(spec_grad.at(0, col)) + std::abs(spec_grad.at(2, col));
        }
        CHECK(used > 0.0);

        if (mode == ProjectionMode::kPerBand) {
            for (double v : g.grad(gp.at("proj.band1.w")).data) CHECK(v == 0.0);
            bool any = false;
            for (double v : g.grad(gp.at("proj.band0.w")).data) any |= (v != 0.0);
            CHECK(any);
        }
    }
}

TEST_CASE("summing composed tokens sends token counts into the embedding gradients") {
    const auto dims = small_dims(4);
    RngStream rng(11);
    const auto params = ParamStore<double>::init(dims, rng);
    // Two tokens of band 2, one of band 0; positions 1, 1, 3.
    std::vector<TokenInfo> info{{0, 2, 1}, {0, 2, 1}, {0, 0, 3}};
    Tensor<double> patches({3, dims.patch_len()});
    for (auto& v : patches.data) v = rng.normal();

    Graph<double> g;
    const auto gp = GraphParams<double>::leaf_all(g, params, true);
    TokenBatchData<double> batch;
    batch.patches = patches;
    batch.info = info;
    const Var composed = compose_tokens(g, gp, dims, g.leaf(patches, false), info);
    g.backward(g.reduce_sum(composed));

    const auto ds = g.grad(gp.at("embed.spectral"));
    const auto dp = g.grad(gp.at("embed.positional"));
    for (std::int64_t col = 0; col < dims.width; ++col) {
        CHECK(ds.at(0, col) == 1.0);
        CHECK(ds.at(1, col) == 0.0);
        CHECK(ds.at(2, col) == 2.0);
        CHECK(dp.at(1, col) == 2.0);
        CHECK(dp.at(3, col) == 1.0);
        CHECK(dp.at(0, col) == 0.0);
    }
}

TEST_CASE("shared and per-band projections differ exactly as expected") {
    RngStream rng(12);
    std::vector<TokenInfo> info{{0, 0, 0}, {0, 1, 0}};  // same position, two bands
    Tensor<double> patches({2, 4});
    for (std::int64_t j = 0; j < 4; ++j) {
        patches.at(0, j) = patches.at(1, j) = 0.25 * static_cast<double>(j);
    }

    // Shared mode with zero embeddings projects both tokens identically.
    const auto dims_s = small_dims(2, ProjectionMode::kShared);
    auto params_s = ParamStore<double>::init(dims_s, rng);
    for (auto& v : params_s.at("embed.spectral").data) v = 0.0;
    Graph<double> gs;
    const auto gps = GraphParams<double>::leaf_all(gs, params_s, false);
    const auto out_s = gs.value(compose_tokens(gs, gps, dims_s, gs.leaf(patches, false), info));
    for (std::int64_t c = 0; c < dims_s.width; ++c) CHECK(out_s.at(0, c) == out_s.at(1, c));

    // Per-band mode with distinct projections separates them.
    const auto dims_p = small_dims(2, ProjectionMode::kPerBand);
    auto params_p = ParamStore<double>::init(dims_p, rng);
    for (auto& v : params_p.at("embed.spectral").data) v = 0.0;
    Graph<double> gp_;
    const auto gpp = GraphParams<double>::leaf_all(gp_, params_p, false);
    const auto out_p = gp_.value(compose_tokens(gp_, gpp, dims_p, gp_.leaf(patches, false), info));
    double diff = 0.0;
    for (std::int64_t c = 0; c < dims_p.width; ++c) diff += std::abs(out_p.at(0, c) - out_p.at(1, c));
    CHECK(diff > 1e-6);
}

TEST_CASE("encoding is equivariant under token permutation") {
    const auto dims = small_dims(3);
    RngStream rng(13);
    const auto params = ParamStore<double>::init(dims, rng);
    const std::vector<SampleView<double>> views{random_view(rng, {0, 1, 2}, 4)};
    const auto batch = build_token_batch(views, dims.patch_size);
    const std::int64_t t = batch.n_tokens();

    std::vector<std::int64_t> perm(static_cast<std::size_t>(t));
    for (std::int64_t i = 0; i < t; ++i) perm[static_cast<std::size_t>(i)] = (i * 5 + 3) % t;

    TokenBatchData<double> shuffled;
    shuffled.patches = Tensor<double>({t, dims.patch_len()});
    shuffled.info.resize(static_cast<std::size_t>(t));
    for (std::int64_t i = 0; i < t; ++i) {
        const std::int64_t src = perm[static_cast<std::size_t>(i)];
        shuffled.info[static_cast<std::size_t>(i)] = batch.info[static_cast<std::size_t>(src)];
        for (std::int64_t j = 0; j < dims.patch_len(); ++j) {
            shuffled.patches.at(i, j) = batch.patches.at(src, j);
        }
    }

    Graph<double> ga, gb;
    const auto gpa = GraphParams<double>::leaf_all(ga, params, false);
    const auto gpb = GraphParams<double>::leaf_all(gb, params, false);
    const auto ea = ga.value(encode_all_tokens(ga, gpa, dims, batch));
    const auto eb = gb.value(encode_all_tokens(gb, gpb, dims, shuffled));
    for (std::int64_t i = 0; i < t; ++i) {
        const std::int64_t src = perm[static_cast<std::size_t>(i)];
        for (std::int64_t c = 0; c < dims.width; ++c) {
            CHECK(eb.at(i, c) == doctest::Approx(ea.at(src, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("any band subset of a 36-band table runs without shape errors") {
    ModelDims dims = small_dims(36);
    RngStream rng(14);
    const auto params = ParamStore<double>::init(dims, rng);
    RngStream pick(15);
    for (int trial = 0; trial < 8; ++trial) {
        const int k = 1 + static_cast<int>(pick.uniform_int(4));
        const auto chosen = pick.sample_without_replacement(36, static_cast<std::uint64_t>(k));
        std::vector<int> bands;
        for (auto b : chosen) bands.push_back(static_cast<int>(b));
        const std::vector<SampleView<double>> views{random_view(rng, bands, 4)};
        const auto batch = build_token_batch(views, dims.patch_size);
        auto plan = mask_tokens(batch.info, 0.75, rng);
        Graph<double> g;
        const auto gp = GraphParams<double>::leaf_all(g, params, false);
        const auto res = mae_forward(g, gp, dims, batch, plan);
        CHECK(std::isfinite(g.value(res.loss).data[0]));
        CHECK(g.value(res.reconstructions).shape[0] == plan.n_masked);
    }
}

TEST_CASE("an empty mask is rejected by the forward pass") {
    const auto dims = small_dims(2);
    RngStream rng(16);
    const auto params = ParamStore<double>::init(dims, rng);
    const std::vector<SampleView<double>> views{random_view(rng, {0, 1}, 4)};
    const auto batch = build_token_batch(views, dims.patch_size);
    const auto plan = explicit_plan(std::vector<char>(static_cast<std::size_t>(batch.n_tokens()), 0));
    Graph<double> g;
    const auto gp = GraphParams<double>::leaf_all(g, params, false);
    CHECK_THROWS_AS(mae_forward(g, gp, dims, batch, plan), ValidationError);
}

TEST_CASE("training on one fixed micro-batch drives its loss down by ninety percent") {
    ModelDims dims;
    dims.patch_size = 4;
    dims.width = 16;
    dims.encoder_depth = 1;
    dims.encoder_heads = 2;
    dims.decoder_depth = 1;
    dims.decoder_heads = 2;
    dims.decoder_width = 16;
    dims.n_bands = 4;
    dims.n_positions = 4;

    RngStream rng(17);
    auto params = ParamStore<double>::init(dims, rng);
    const std::vector<SampleView<double>> views{random_view(rng, {0, 3}, 8)};
    const auto batch = build_token_batch(views, dims.patch_size);
    const auto plan = mask_tokens(batch.info, 0.5, rng);

    OptimizerConfig ocfg;
    ocfg.weight_decay = 0.0;
    AdamW<double> opt(params, ocfg);
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 200; ++step) {
        Graph<double> g;
        const auto gp = GraphParams<double>::leaf_all(g, params, true);
        const auto res = mae_forward(g, gp, dims, batch, plan);
        const double loss = g.value(res.loss).data[0];
        if (step == 0) first = loss;
        last = loss;
        g.backward(res.loss);
        std::vector<Tensor<double>> grads;
        for (std::size_t i = 0; i < params.count(); ++i) grads.push_back(g.grad(gp.vars[i]));
        opt.step(params, grads, 1e-3);
    }
    CHECK(last < 0.1 * first);
}

TEST_CASE("analytic gradients match finite differences on a small model") {
    MaeCheckSpec spec;
    spec.dims = small_dims(3);
    spec.tile_size = 4;
    spec.n_bands_used = 2;
    spec.ratio = 0.5;
    spec.seed = 18;
    spec.max_coords = 300;
    const auto report = mae_grad_check(spec);
    CHECK(report.coords_checked == 300);
    CHECK(report.max_rel_err <= 1e-4);
}
