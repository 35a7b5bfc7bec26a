#pragma once

#include <cstdint>
#include <vector>

#include "fomo/gradcheck.hpp"
#include "fomo/mae.hpp"
#include "fomo/model.hpp"
#include "fomo/rng.hpp"

namespace fomo {

// Finite-difference verification of the full MAE loss gradient on a random
// micro-batch. Always 64-bit; every parameter coordinate is perturbed unless
// max_coords caps it.
struct MaeCheckSpec {
    ModelDims dims;
    int tile_size = 8;
    int n_bands_used = 2;
    int n_samples = 1;
    double ratio = 0.75;
    double eps = 1e-5;
    std::uint64_t seed = 0;
    std::size_t max_coords = 0;  // 0: all
};

inline GradCheckReport mae_grad_check(const MaeCheckSpec& spec) {
    RngStream rng(spec.seed, "mae-check");
    ParamStore<double> params = ParamStore<double>::init(spec.dims, rng);

    std::vector<SampleView<double>> views;
    for (int s = 0; s < spec.n_samples; ++s) {
        SampleView<double> view;
        for (int b = 0; b < spec.n_bands_used; ++b) {
            Tensor<double> raster({spec.tile_size, spec.tile_size});
            for (auto& v : raster.data) v = rng.normal();
            view.push_back({b, std::move(raster)});
        }
        views.push_back(std::move(view));
    }
    const TokenBatchData<double> batch = build_token_batch(views, spec.dims.patch_size);
    const MaskPlan plan = mask_tokens(batch.info, spec.ratio, rng);

    const auto loss_at = [&](const ParamStore<double>& p) {
        Graph<double> g;
        GraphParams<double> gp = GraphParams<double>::leaf_all(g, p, false);
        return g.value(mae_forward(g, gp, spec.dims, batch, plan).loss).data[0];
    };

    std::vector<double> analytic;
    {
        Graph<double> g;
        GraphParams<double> gp = GraphParams<double>::leaf_all(g, params, true);
        const MaeResult<double> res = mae_forward(g, gp, spec.dims, batch, plan);
        g.backward(res.loss);
        for (std::size_t i = 0; i < params.count(); ++i) {
            const Tensor<double> gr = g.grad(gp.vars[i]);
            analytic.insert(analytic.end(), gr.data.begin(), gr.data.end());
        }
    }

    ParamStore<double> scratch = params;
    const auto f = [&](const std::vector<double>& theta) {
        unpack_params(scratch, theta);
        return loss_at(scratch);
    };
    RngStream pick(spec.seed, "mae-check-coords");
    return grad_check(f, pack_params(params), analytic, spec.eps, spec.max_coords,
                      spec.max_coords ? &pick : nullptr);
}

}  // namespace fomo
