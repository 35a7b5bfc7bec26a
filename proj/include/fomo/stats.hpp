#pragma once

#include <cstdint>
#include <vector>

namespace fomo {

// Regularized incomplete gamma functions: P(a,x) lower, Q(a,x) upper,
// P + Q = 1. Series expansion below a+1, continued fraction above.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Pearson statistic against expected probabilities. Zero-probability cells
// must have zero observations and are excluded from both the statistic and
// the degrees of freedom.
double chi_square_stat(const std::vector<std::int64_t>& observed,
                       const std::vector<double>& expected_probs);

// Upper-tail p-value Q(dof/2, stat/2). dof <= 0 (a single live category)
// degenerates to p = 1.
double chi_square_p_value(double stat, int dof);

// Convenience: stat + p in one call; dof = live categories - 1.
double chi_square_test(const std::vector<std::int64_t>& observed,
                       const std::vector<double>& expected_probs);

}  // namespace fomo
