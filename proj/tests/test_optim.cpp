#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "fomo/optim.hpp"

using namespace fomo;

namespace {

ModelDims tiny_dims() {
    ModelDims d;
    d.patch_size = 2;
    d.width = 8;
    d.encoder_depth = 1;
    d.encoder_heads = 2;
    d.decoder_depth = 1;
    d.decoder_heads = 2;
    d.decoder_width = 8;
    d.n_bands = 2;
    d.n_positions = 4;
    return d;
}

std::vector<Tensor<double>> grads_like(const ParamStore<double>& p, double fill) {
    std::vector<Tensor<double>> g;
    g.reserve(p.count());
    for (std::size_t i = 0; i < p.count(); ++i) g.emplace_back(p.by_index(i).shape, fill);
    return g;
}

std::vector<Tensor<double>> random_grads(const ParamStore<double>& p, RngStream& rng) {
    std::vector<Tensor<double>> g;
    g.reserve(p.count());
    for (std::size_t i = 0; i < p.count(); ++i) {
        Tensor<double> t(p.by_index(i).shape);
        for (auto& v : t.data) v = rng.normal();
        g.push_back(std::move(t));
    }
    return g;
}

bool bitwise_equal(const ParamStore<double>& a, const ParamStore<double>& b) {
    for (std::size_t i = 0; i < a.count(); ++i) {
        const auto& ta = a.by_index(i).data;
        const auto& tb = b.by_index(i).data;
        if (ta.size() != tb.size()) return false;
        if (std::memcmp(ta.data(), tb.data(), ta.size() * sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("one step from fresh state with unit gradient matches the closed form") {
    const auto dims = tiny_dims();
    auto params = ParamStore<double>::zeros(dims);
    OptimizerConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW<double> opt(params, cfg);

    opt.step(params, grads_like(params, 1.0), 1e-3);

    // Bias correction cancels at t=1: mhat = vhat = 1, update = 1/(1+eps).
    const double want = -1e-3 / (1.0 + cfg.eps);
    for (std::size_t i = 0; i < params.count(); ++i) {
        for (double v : params.by_index(i).data) CHECK(v == doctest::Approx(want).epsilon(1e-12));
    }
    for (double v : opt.first_moments()[0].data) CHECK(v == doctest::Approx(0.1).epsilon(1e-12));
    for (double v : opt.second_moments()[0].data) CHECK(v == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("zero gradient with zero decay leaves parameters untouched") {
    const auto dims = tiny_dims();
    RngStream rng(13);
    auto params = ParamStore<double>::init(dims, rng);
    const auto h0 = params.hash();
    OptimizerConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW<double> opt(params, cfg);
    opt.step(params, grads_like(params, 0.0), 1e-2);
    CHECK(params.hash() == h0);
}

TEST_CASE("weight decay is decoupled: applied even when the gradient is zero") {
    const auto dims = tiny_dims();
    RngStream rng(17);
    auto params = ParamStore<double>::init(dims, rng);
    auto before = params;
    OptimizerConfig cfg;
    cfg.weight_decay = 0.1;
    AdamW<double> opt(params, cfg);
    opt.step(params, grads_like(params, 0.0), 1e-3);
    // theta <- theta - lr*wd*theta, a pure multiplicative shrink by 1e-4.
    for (std::size_t i = 0; i < params.count(); ++i) {
        const auto& now = params.by_index(i).data;
        const auto& was = before.by_index(i).data;
        for (std::size_t k = 0; k < now.size(); ++k) {
            CHECK(now[k] == doctest::Approx(was[k] * (1.0 - 1e-4)).epsilon(1e-14));
        }
    }
}

TEST_CASE("bias correction keeps constant-gradient updates at full magnitude") {
    const auto dims = tiny_dims();
    auto params = ParamStore<double>::zeros(dims);
    OptimizerConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW<double> opt(params, cfg);
    // With g=1 throughout, mhat and vhat are exactly 1 at every t, so each
    // step moves by lr/(1+eps) rather than a warmup-damped fraction.
    for (int t = 0; t < 3; ++t) opt.step(params, grads_like(params, 1.0), 1e-3);
    const double want = -3e-3 / (1.0 + cfg.eps);
    CHECK(params.by_index(0).data[0] == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("non-finite gradients are rejected with the parameter name") {
    const auto dims = tiny_dims();
    auto params = ParamStore<double>::zeros(dims);
    OptimizerConfig cfg;
    AdamW<double> opt(params, cfg);
    auto grads = grads_like(params, 0.0);
    grads[2].data[0] = std::nan("");
    try {
        opt.step(params, grads, 1e-3);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find(params.name_of(2)) != std::string::npos);
    }
}

TEST_CASE("learning-rate schedule endpoints and shape") {
    LrSchedule s;
    s.warmup_steps = 10;
    s.total_steps = 110;
    s.base_lr = 1.0;
    s.min_lr = 0.0;
    CHECK(lr_at(0, s) == 0.0);
    CHECK(lr_at(10, s) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lr_at(110, s) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lr_at(60, s) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lr_at(35, s) == doctest::Approx(0.5 * (1.0 + std::cos(0.25 * M_PI))).epsilon(1e-12));
    // Warmup is linear.
    CHECK(lr_at(5, s) == doctest::Approx(0.5).epsilon(1e-15));
    // Decay is monotone nonincreasing.
    double prev = lr_at(10, s);
    for (int t = 11; t <= 110; ++t) {
        const double cur = lr_at(t, s);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
    // Nonzero floor.
    s.min_lr = 0.1;
    CHECK(lr_at(110, s) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("learning-rate schedule rejects out-of-range queries") {
    LrSchedule s;
    s.warmup_steps = 5;
    s.total_steps = 5;
    CHECK_THROWS_AS(lr_at(0, s), ValidationError);
    s.total_steps = 10;
    CHECK_THROWS_AS(lr_at(-1, s), ValidationError);
    CHECK_THROWS_AS(lr_at(11, s), ValidationError);
}

TEST_CASE("accumulation of one window equals the gradient itself") {
    const auto dims = tiny_dims();
    auto params = ParamStore<double>::zeros(dims);
    RngStream rng(23);
    const auto g = random_grads(params, rng);
    AccumulationBuffer<double> buf(params);
    buf.add(g);
    CHECK(buf.count() == 1);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(buf.sums()[i].data == g[i].data);
}

TEST_CASE("opposite gradients cancel exactly") {
    const auto dims = tiny_dims();
    auto params = ParamStore<double>::zeros(dims);
    RngStream rng(29);
    const auto g = random_grads(params, rng);
    auto neg = g;
    for (auto& t : neg)
        for (auto& v : t.data) v = -v;
    AccumulationBuffer<double> buf(params);
    buf.add(g);
    buf.add(neg);
    for (const auto& t : buf.sums())
        for (double v : t.data) CHECK(v == 0.0);
}

TEST_CASE("four accumulated micro-gradients step bit-identically to their precomputed sum") {
    const auto dims = tiny_dims();
    RngStream init_rng(31);
    auto pa = ParamStore<double>::init(dims, init_rng);
    auto pb = pa;
    REQUIRE(bitwise_equal(pa, pb));

    RngStream rng(37);
    std::vector<std::vector<Tensor<double>>> micro;
    for (int v = 0; v < 4; ++v) micro.push_back(random_grads(pa, rng));

    AccumulationBuffer<double> buf_a(pa);
    for (const auto& g : micro) buf_a.add(g);

    // The reference sum folds in the same arrival order the buffer used.
    auto summed = micro[0];
    for (int v = 1; v < 4; ++v) {
        for (std::size_t i = 0; i < summed.size(); ++i) {
            for (std::size_t k = 0; k < summed[i].data.size(); ++k) {
                summed[i].data[k] += micro[static_cast<std::size_t>(v)][i].data[k];
            }
        }
    }
    AccumulationBuffer<double> buf_b(pb);
    buf_b.add(summed);

    OptimizerConfig cfg;
    AdamW<double> opt_a(pa, cfg);
    AdamW<double> opt_b(pb, cfg);
    opt_a.step(pa, buf_a.sums(), 1e-3);
    opt_b.step(pb, buf_b.sums(), 1e-3);
    CHECK(bitwise_equal(pa, pb));
    CHECK(pa.hash() == pb.hash());
}

TEST_CASE("buffer scale, reset, and norm behave") {
    const auto dims = tiny_dims();
    auto params = ParamStore<double>::zeros(dims);
    AccumulationBuffer<double> buf(params);
    auto g = grads_like(params, 0.0);
    g[0].data[0] = 3.0;
    g[0].data[1] = 4.0;
    buf.add(g);
    CHECK(buf.global_norm() == doctest::Approx(5.0).epsilon(1e-15));
    buf.scale(0.5);
    CHECK(buf.sums()[0].data[0] == 1.5);
    buf.reset();
    CHECK(buf.count() == 0);
    CHECK(buf.global_norm() == 0.0);

    auto wrong = grads_like(params, 0.0);
    wrong.pop_back();
    CHECK_THROWS_AS(buf.add(wrong), ContractError);
}
