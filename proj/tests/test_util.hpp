#pragma once

#include <functional>
#include <vector>

#include "fomo/gradcheck.hpp"
#include "fomo/graph.hpp"
#include "fomo/rng.hpp"
#include "fomo/tensor.hpp"

namespace fomo::testutil {

inline Tensor<double> random_tensor(RngStream& rng, Shape shape, double scale = 1.0) {
    Tensor<double> t(shape);
    for (auto& v : t.data) v = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

// Finite-difference check of an n-ary graph expression. `build` receives one
// leaf per input shape; the loss is sum(output .* W) with a fixed random W so
// every output entry carries a distinct weight.
struct FdResult {
    double max_rel_err;
};

inline FdResult fd_check(const std::function<Var(Graph<double>&, const std::vector<Var>&)>& build,
                         const std::vector<Shape>& input_shapes, std::uint64_t seed,
                         double eps = 1e-5) {
    RngStream rng(seed);
    std::vector<Tensor<double>> inputs;
    std::size_t total = 0;
    for (const auto& s : input_shapes) {
        inputs.push_back(random_tensor(rng, s));
        total += inputs.back().size();
    }

    // Discover the output shape once to size W.
    Shape out_shape;
    {
        Graph<double> g;
        std::vector<Var> vars;
        for (const auto& t : inputs) vars.push_back(g.leaf(t, false));
        out_shape = g.value(build(g, vars)).shape;
    }
    const Tensor<double> w = random_tensor(rng, out_shape);

    auto run = [&](const std::vector<double>& theta, std::vector<double>* analytic) {
        Graph<double> g;
        std::vector<Var> vars;
        std::size_t off = 0;
        for (const auto& proto : inputs) {
            Tensor<double> t(proto.shape);
            std::copy(theta.begin() + static_cast<std::ptrdiff_t>(off),
                      theta.begin() + static_cast<std::ptrdiff_t>(off + t.size()), t.data.begin());
            off += t.size();
            vars.push_back(g.leaf(std::move(t), analytic != nullptr));
        }
        Var y = build(g, vars);
        Var loss = g.reduce_sum(g.mul(y, g.leaf(w, false)));
        if (analytic) {
            g.backward(loss);
            analytic->clear();
            for (Var v : vars) {
                const Tensor<double> gv = g.grad(v);
                analytic->insert(analytic->end(), gv.data.begin(), gv.data.end());
            }
        }
        return g.value(loss).data[0];
    };

    std::vector<double> theta;
    theta.reserve(total);
    for (const auto& t : inputs) theta.insert(theta.end(), t.data.begin(), t.data.end());
    std::vector<double> analytic;
    run(theta, &analytic);

    auto rep = grad_check([&](const std::vector<double>& th) { return run(th, nullptr); }, theta,
                          analytic, eps);
    return FdResult{rep.max_rel_err};
}

}  // namespace fomo::testutil
