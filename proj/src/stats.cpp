#include "fomo/stats.hpp"

#include <cmath>
#include <limits>

#include "fomo/error.hpp"

namespace fomo {

namespace {

// Lower series: P(a,x) = x^a e^-x / Gamma(a) * sum x^n / (a)_{n+1}.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper continued fraction (modified Lentz): Q(a,x).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
    if (!(a > 0.0)) throw ValidationError("gamma_p: a must be positive");
    if (x < 0.0) throw ValidationError("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw ValidationError("gamma_q: a must be positive");
    if (x < 0.0) throw ValidationError("gamma_q: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_stat(const std::vector<std::int64_t>& observed,
                       const std::vector<double>& expected_probs) {
    if (observed.size() != expected_probs.size()) {
        throw DimensionError("chi_square_stat: observed/expected length mismatch");
    }
    if (observed.empty()) throw ValidationError("chi_square_stat: empty input");
    std::int64_t n = 0;
    for (std::int64_t o : observed) {
        if (o < 0) throw ValidationError("chi_square_stat: negative count");
        n += o;
    }
    if (n == 0) throw ValidationError("chi_square_stat: zero total count");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double p = expected_probs[i];
        if (p < 0.0) throw ValidationError("chi_square_stat: negative expected probability");
        if (p == 0.0) {
            if (observed[i] != 0) return std::numeric_limits<double>::infinity();
            continue;
        }
        const double e = p * static_cast<double>(n);
        const double d = static_cast<double>(observed[i]) - e;
        stat += d * d / e;
    }
    return stat;
}

double chi_square_p_value(double stat, int dof) {
    if (std::isinf(stat)) return 0.0;  // impossible observation under H0
    if (stat < 0.0) throw ValidationError("chi_square_p_value: negative statistic");
    if (dof <= 0) return 1.0;
    return gamma_q(0.5 * static_cast<double>(dof), 0.5 * stat);
}

double chi_square_test(const std::vector<std::int64_t>& observed,
                       const std::vector<double>& expected_probs) {
    int live = 0;
    for (double p : expected_probs) {
        if (p > 0.0) ++live;
    }
    return chi_square_p_value(chi_square_stat(observed, expected_probs), live - 1);
}

}  // namespace fomo
