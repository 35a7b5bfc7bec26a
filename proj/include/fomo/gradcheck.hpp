#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fomo/error.hpp"
#include "fomo/rng.hpp"

namespace fomo {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t coords_checked = 0;

    bool pass(double tol) const { return max_rel_err <= tol; }
};

// Central-difference check of an analytic gradient. `f` evaluates the scalar
// objective at a parameter vector; coordinates are perturbed one at a time.
// Relative error uses max(|analytic|, |numeric|, 1e-6) as denominator: below
// the floor the comparison turns absolute, since central differences on a
// unit-scale objective carry ~1e-11 of roundoff noise that would swamp any
// ratio against a vanishing gradient. When max_coords is smaller
// than the parameter count, a uniform subset is drawn from `rng`.
inline GradCheckReport grad_check(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> theta, const std::vector<double>& analytic,
                                  double eps, std::size_t max_coords = 0, RngStream* rng = nullptr) {
    if (theta.size() != analytic.size()) {
        throw DimensionError("grad_check: analytic gradient length mismatch");
    }
    if (!(eps >= 1e-6 && eps <= 1e-3)) {
        throw ValidationError("grad_check: eps must lie in [1e-6, 1e-3]");
    }
    std::vector<std::size_t> coords;
    if (max_coords == 0 || max_coords >= theta.size()) {
        coords.resize(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) coords[i] = i;
    } else {
        if (!rng) throw ContractError("grad_check: coordinate subsampling needs an RngStream");
        auto idx = rng->sample_without_replacement(static_cast<std::uint64_t>(theta.size()),
                                                   static_cast<std::uint64_t>(max_coords));
        coords.assign(idx.begin(), idx.end());
    }
    GradCheckReport rep;
    rep.coords_checked = coords.size();
    for (std::size_t i : coords) {
        const double save = theta[i];
        theta[i] = save + eps;
        const double fp = f(theta);
        theta[i] = save - eps;
        const double fm = f(theta);
        theta[i] = save;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        const double rel = std::abs(a - numeric) / denom;
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst_index = i;
            rep.analytic_at_worst = a;
            rep.numeric_at_worst = numeric;
        }
    }
    return rep;
}

}  // namespace fomo
