#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fomo/error.hpp"
#include "fomo/stats.hpp"

using namespace fomo;

// Reference values frozen from an independent high-precision implementation
// of the regularized incomplete gamma function and the chi-square survival
// function.
TEST_CASE("regularized incomplete gamma against frozen references") {
    struct Case {
        double a, x, p, q;
    };
    const std::vector<Case> cases = {
        {0.5, 0.5, 6.8268949213708585e-01, 3.1731050786291115e-01},
        {1.0, 1.0, 6.3212055882855767e-01, 3.6787944117144245e-01},
        {2.5, 1.0, 1.5085496391539038e-01, 8.4914503608460956e-01},
        {2.5, 7.0, 9.8439058389973311e-01, 1.5609416100266910e-02},
        {10.0, 3.0, 1.1024881301154815e-03, 9.9889751186988451e-01},
        {10.0, 25.0, 9.9977852336175121e-01, 2.2147663824878349e-04},
        {0.5, 20.0, 9.9999999974603715e-01, 2.5396285894708634e-10},
    };
    for (const auto& c : cases) {
        CHECK(gamma_p(c.a, c.x) == doctest::Approx(c.p).epsilon(1e-12));
        CHECK(gamma_q(c.a, c.x) == doctest::Approx(c.q).epsilon(1e-12));
        CHECK(gamma_p(c.a, c.x) + gamma_q(c.a, c.x) == doctest::Approx(1.0).epsilon(1e-13));
    }
    CHECK(gamma_p(1.0, 0.0) == 0.0);
    CHECK(gamma_q(1.0, 0.0) == 1.0);
    CHECK_THROWS_AS(gamma_p(0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(gamma_q(1.0, -1.0), ValidationError);
}

TEST_CASE("chi-square survival values against frozen references") {
    struct Case {
        double stat;
        int dof;
        double p;
    };
    const std::vector<Case> cases = {
        {0.0, 5, 1.0},
        {4.351, 5, 5.0006306486732255e-01},
        {11.07, 5, 5.0009618622405425e-02},
        {2.706, 1, 9.9971378125258831e-02},
        {23.685, 14, 4.9997124661224877e-02},
        {100.0, 5, 5.2851483609432189e-20},
    };
    for (const auto& c : cases) {
        CHECK(chi_square_p_value(c.stat, c.dof) == doctest::Approx(c.p).epsilon(1e-10));
    }
}

TEST_CASE("pearson statistic on a worked example") {
    const std::vector<std::int64_t> obs = {2100, 1950, 2050, 980, 1940, 980};
    const std::vector<double> probs = {0.2, 0.2, 0.2, 0.1, 0.2, 0.1};
    const double stat = chi_square_stat(obs, probs);
    CHECK(stat == doctest::Approx(1.0100000000000001e+01).epsilon(1e-12));
    CHECK(chi_square_test(obs, probs) == doctest::Approx(7.2450871272463857e-02).epsilon(1e-10));
}

TEST_CASE("degenerate and guard cases") {
    // Single live category: dof 0, p = 1 by convention.
    CHECK(chi_square_test({50}, {1.0}) == 1.0);
    // Zero-probability cell with observations: impossible under H0.
    CHECK(chi_square_test({10, 10}, {1.0, 0.0}) == 0.0);
    // Zero-probability cell without observations: excluded cleanly.
    CHECK(chi_square_test({10, 0, 10}, {0.5, 0.0, 0.5}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(chi_square_stat({}, {}), ValidationError);
    CHECK_THROWS_AS(chi_square_stat({1}, {0.5, 0.5}), DimensionError);
    CHECK_THROWS_AS(chi_square_stat({-1}, {1.0}), ValidationError);
    CHECK_THROWS_AS(chi_square_p_value(-1.0, 3), ValidationError);
}

TEST_CASE("extreme skew is flagged far below any working threshold") {
    // Everything lands in one cell of a uniform 4-way split.
    const std::vector<std::int64_t> obs = {1000, 0, 0, 0};
    const std::vector<double> probs = {0.25, 0.25, 0.25, 0.25};
    CHECK(chi_square_test(obs, probs) < 1e-6);
}
