#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "fomo/probe.hpp"
#include "fomo/synth.hpp"

using namespace fomo;
namespace fs = std::filesystem;

TEST_CASE("perfect predictions score one everywhere") {
    const std::vector<int> y{0, 1, 2, 1, 0, 2};
    const auto rep = cls_metrics(y, y, 3);
    CHECK(rep.f1_micro == 1.0);
    CHECK(rep.f1_macro == 1.0);
    REQUIRE(rep.per_class.size() == 3);
    for (const auto& c : rep.per_class) {
        CHECK(c.precision == 1.0);
        CHECK(c.recall == 1.0);
        CHECK(c.f1 == 1.0);
    }
    CHECK(rep.excluded_classes == 0);
}

TEST_CASE("a worked confusion example") {
    // Sample 1: predicted 0, is 0 (TP for class 0).
    // Sample 2: predicted 0, is 1 (FP for class 0, FN for class 1).
    const auto rep = cls_metrics({0, 0}, {0, 1}, 2);
    CHECK(rep.per_class[0].precision == doctest::Approx(0.5));
    CHECK(rep.per_class[0].recall == doctest::Approx(1.0));
    CHECK(rep.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
    CHECK(rep.per_class[1].f1 == 0.0);
    CHECK(rep.f1_micro == doctest::Approx(0.5));
    CHECK(rep.f1_macro == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("micro F1 equals accuracy for single-label predictions") {
    RngStream rng(1);
    std::vector<int> pred(200), tgt(200);
    for (int i = 0; i < 200; ++i) {
        pred[i] = static_cast<int>(rng.uniform_int(4));
        tgt[i] = static_cast<int>(rng.uniform_int(4));
    }
    int hits = 0;
    for (int i = 0; i < 200; ++i) hits += (pred[i] == tgt[i]);
    const auto rep = cls_metrics(pred, tgt, 4);
    CHECK(rep.f1_micro == doctest::Approx(hits / 200.0).epsilon(1e-12));
}

TEST_CASE("relabeling classes permutes per-class scores and preserves aggregates") {
    RngStream rng(2);
    std::vector<int> pred(120), tgt(120);
    for (int i = 0; i < 120; ++i) {
        pred[i] = static_cast<int>(rng.uniform_int(3));
        tgt[i] = static_cast<int>(rng.uniform_int(3));
    }
    const auto base = cls_metrics(pred, tgt, 3);
    const int perm[3] = {2, 0, 1};
    std::vector<int> pred2(120), tgt2(120);
    for (int i = 0; i < 120; ++i) {
        pred2[i] = perm[pred[i]];
        tgt2[i] = perm[tgt[i]];
    }
    const auto moved = cls_metrics(pred2, tgt2, 3);
    CHECK(moved.f1_micro == doctest::Approx(base.f1_micro).epsilon(1e-12));
    CHECK(moved.f1_macro == doctest::Approx(base.f1_macro).epsilon(1e-12));
    for (int c = 0; c < 3; ++c) {
        CHECK(moved.per_class[perm[c]].f1 == doctest::Approx(base.per_class[c].f1).epsilon(1e-12));
        CHECK(moved.per_class[perm[c]].support == base.per_class[c].support);
    }
}

TEST_CASE("classes absent from the targets are excluded from the macro average") {
    // Class 2 never appears as a target; one stray prediction of it.
    const auto rep = cls_metrics({0, 1, 2, 1}, {0, 1, 0, 1}, 3);
    CHECK(rep.excluded_classes == 1);
    const double macro = (rep.per_class[0].f1 + rep.per_class[1].f1) / 2.0;
    CHECK(rep.f1_macro == doctest::Approx(macro).epsilon(1e-12));
}

TEST_CASE("metric input validation") {
    CHECK_THROWS_AS(cls_metrics({}, {}, 2), ValidationError);
    CHECK_THROWS_AS(cls_metrics({0, 1}, {0}, 2), DimensionError);
    CHECK_THROWS_AS(cls_metrics({0, 2}, {0, 1}, 2), ValidationError);
    CHECK_THROWS_AS(cls_metrics({0, 1}, {0, -1}, 2), ValidationError);
}

TEST_CASE("multilabel metrics threshold at one half") {
    Tensor<double> pred({3, 2});
    Tensor<double> tgt({3, 2});
    // No positive predictions at all: micro F1 is zero.
    for (auto& v : pred.data) v = 0.1;
    tgt.at(0, 0) = 1.0;
    tgt.at(2, 1) = 1.0;
    CHECK(multilabel_metrics(pred, tgt).f1_micro == 0.0);

    // Perfect thresholded agreement.
    Tensor<double> pred2 = tgt;
    for (auto& v : pred2.data) v = v > 0.5 ? 0.9 : 0.2;
    CHECK(multilabel_metrics(pred2, tgt).f1_micro == 1.0);

    Tensor<double> bad({2, 3});
    CHECK_THROWS_AS(multilabel_metrics(bad, tgt), DimensionError);
}

TEST_CASE("IoU relates to F1 by the matched-pair identity") {
    RngStream rng(3);
    std::vector<int> pred(300), tgt(300);
    for (int i = 0; i < 300; ++i) {
        pred[i] = static_cast<int>(rng.uniform_int(3));
        tgt[i] = static_cast<int>(rng.uniform_int(3));
    }
    const auto rep = seg_metrics(pred, tgt, 3);
    REQUIRE(rep.miou >= 0.0);
    double want = 0.0;
    for (const auto& c : rep.per_class) want += c.f1 / (2.0 - c.f1);
    want /= 3.0;
    CHECK(rep.miou == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("a separable two-class problem is fit nearly perfectly") {
    RngStream rng(4);
    const int n = 100, d = 4;
    Tensor<double> x({n, d});
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = i % 2;
        const double center = y[i] == 0 ? -3.0 : 3.0;
        for (int j = 0; j < d; ++j) x.at(i, j) = center + 0.5 * rng.normal();
    }
    ProbeConfig cfg;
    const auto res = fit_probe(x, y, 2, cfg);
    CHECK(res.n_train == 80);
    CHECK(res.n_eval == 20);
    CHECK(res.train_accuracy >= 0.99);
    CHECK(res.eval_accuracy >= 0.95);
    CHECK(res.eval.f1_micro == res.eval_accuracy);
}

TEST_CASE("random labels stay near chance on held-out data") {
    RngStream rng(5);
    const int n = 500, d = 8;
    Tensor<double> x({n, d});
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = static_cast<int>(rng.uniform_int(2));
        for (int j = 0; j < d; ++j) x.at(i, j) = rng.normal();
    }
    ProbeConfig cfg;
    const auto res = fit_probe(x, y, 2, cfg);
    // Features carry no signal; holdout accuracy must sit in the chance band.
    CHECK(res.eval_accuracy > 0.3);
    CHECK(res.eval_accuracy < 0.7);
}

TEST_CASE("probe fitting rejects degenerate inputs") {
    Tensor<double> x({10, 3});
    std::vector<int> one_class(10, 0);
    ProbeConfig cfg;
    CHECK_THROWS_AS(fit_probe(x, one_class, 2, cfg), ValidationError);

    std::vector<int> short_labels(9, 0);
    CHECK_THROWS_AS(fit_probe(x, short_labels, 2, cfg), DimensionError);

    std::vector<int> ok(10);
    for (int i = 0; i < 10; ++i) ok[i] = i % 2;
    CHECK_THROWS_AS(fit_probe(x, ok, 1, cfg), ValidationError);
    CHECK_THROWS_AS(fit_probe(Tensor<double>({10}), ok, 2, cfg), DimensionError);
}

TEST_CASE("segmentation head replicates patch scores across each patch") {
    RngStream rng(6);
    const int d = 8, classes = 3, hidden = 6;
    // One sample, two bands, 2x2 grid with P=2.
    const PatchGrid grid{4, 4, 2};
    std::vector<TokenInfo> info;
    for (int b : {0, 1}) {
        for (std::int64_t pos = 0; pos < 4; ++pos) info.push_back({0, b, pos});
    }
    Tensor<double> tok({8, d});
    for (auto& v : tok.data) v = rng.normal();
    Tensor<double> w1({d, hidden}), b1({hidden}), w2({hidden, classes}), b2({classes});
    for (auto& v : w1.data) v = rng.normal();
    for (auto& v : w2.data) v = rng.normal();

    Graph<double> g;
    const Var out = seg_head_forward(g, g.leaf(tok, false), info, grid, g.leaf(w1, false),
                                     g.leaf(b1, false), g.leaf(w2, false), g.leaf(b2, false));
    const auto& scores = g.value(out);
    REQUIRE(scores.shape == Shape{16, classes});
    for (std::int64_t y = 0; y < 4; ++y) {
        for (std::int64_t x = 0; x < 4; ++x) {
            const std::int64_t anchor = (y / 2 * 2) * 4 + (x / 2 * 2);
            for (std::int64_t c = 0; c < classes; ++c) {
                CHECK(scores.at(y * 4 + x, c) == scores.at(anchor, c));
            }
        }
    }

    // Multi-sample batches and grid gaps are structural errors.
    auto bad_sample = info;
    bad_sample[1].sample = 1;
    Graph<double> g2;
    CHECK_THROWS_AS(seg_head_forward(g2, g2.leaf(tok, false), bad_sample, grid, g2.leaf(w1, false),
                                     g2.leaf(b1, false), g2.leaf(w2, false), g2.leaf(b2, false)),
                    DimensionError);
    auto gap = info;
    gap.pop_back();
    Tensor<double> tok7({7, d});
    Graph<double> g3;
    CHECK_THROWS_AS(seg_head_forward(g3, g3.leaf(tok7, false), gap, grid, g3.leaf(w1, false),
                                     g3.leaf(b1, false), g3.leaf(w2, false), g3.leaf(b2, false)),
                    DimensionError);
}

TEST_CASE("feature extraction and head fits run against a frozen random backbone") {
    const fs::path dir = fs::temp_directory_path() / "fomo_probe_tests";
    fs::remove_all(dir);
    const auto registry = BandRegistry::canonical();
    SynthSpec spec;
    spec.name = "probe-corpus";
    spec.bands = {3, 4};
    spec.n_samples = 12;
    spec.tile_size = 16;
    spec.n_families = 2;
    spec.seed = 9;
    const auto ds = synth_dataset(spec, registry, (dir / "corpus").string());

    ModelDims dims;
    dims.patch_size = 4;
    dims.width = 16;
    dims.encoder_depth = 1;
    dims.encoder_heads = 2;
    dims.decoder_depth = 1;
    dims.decoder_heads = 2;
    dims.decoder_width = 16;
    dims.n_bands = registry.size();
    dims.n_positions = 16;
    RngStream rng(10);
    const auto params = ParamStore<double>::init(dims, rng);

    const auto feats = extract_features(params, dims, ds, {3, 4}, 16);
    REQUIRE(feats.features.shape == Shape{12, 16});
    for (double v : feats.features.data) CHECK(std::isfinite(v));
    REQUIRE(feats.labels.size() == 12);
    for (int label : feats.labels) {
        CHECK(label >= 0);
        CHECK(label < 2);
    }
    CHECK_THROWS_AS(extract_features(params, dims, ds, {30}, 16), NotFoundError);

    ProbeConfig cfg;
    cfg.epochs = 40;
    const auto probe = fit_probe(feats.features, feats.labels, 2, cfg);
    CHECK(probe.n_train == 10);
    CHECK(probe.n_eval == 2);
    CHECK(probe.train_accuracy >= 0.0);
    CHECK(probe.train_accuracy <= 1.0);

    ProbeConfig seg_cfg;
    seg_cfg.epochs = 3;
    RngStream head_rng(11);
    const auto seg = fit_seg_head(params, dims, ds, {3, 4}, 16, 2, 8, seg_cfg, head_rng);
    CHECK(seg.eval.miou >= 0.0);
    CHECK(seg.eval.miou <= 1.0);
    CHECK(seg.eval.f1_micro >= 0.0);
    CHECK(seg.eval.f1_micro <= 1.0);
    REQUIRE(seg.head.w1.shape == Shape{16, 8});
}
