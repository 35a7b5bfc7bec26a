#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "fomo/rng.hpp"

using namespace fomo;

TEST_CASE("same seed gives identical streams; different seeds diverge") {
    RngStream a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_diff = any_diff || (x != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform lies in [0,1); uniform_int covers its range without bias artifacts") {
    RngStream rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) counts[static_cast<std::size_t>(rng.uniform_int(5))]++;
    for (int c : counts) {
        CHECK(c > 9500);
        CHECK(c < 10500);
    }
}

TEST_CASE("normal has roughly standard moments") {
    RngStream rng(2);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("truncated normal respects the cut") {
    RngStream rng(3);
    for (int i = 0; i < 20000; ++i) {
        CHECK(std::abs(rng.truncated_normal(0.02)) <= 0.04 + 1e-12);
    }
}

TEST_CASE("weighted_index follows the weights") {
    RngStream rng(4);
    const std::vector<double> w = {0.2, 0.2, 0.2, 0.1, 0.2, 0.1};
    std::vector<int> counts(w.size(), 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) counts[rng.weighted_index(w)]++;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double freq = static_cast<double>(counts[i]) / n;
        const double sigma = std::sqrt(w[i] * (1 - w[i]) / n);
        CHECK(std::abs(freq - w[i]) < 4 * sigma);
    }
}

TEST_CASE("sample_without_replacement: distinct, in range, exhaustive when k=n") {
    RngStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = rng.sample_without_replacement(13, 4);
        REQUIRE(s.size() == 4);
        std::set<std::uint64_t> uniq(s.begin(), s.end());
        CHECK(uniq.size() == 4);
        for (auto v : s) CHECK(v < 13);
    }
    const auto all = rng.sample_without_replacement(6, 6);
    std::set<std::uint64_t> uniq(all.begin(), all.end());
    CHECK(uniq.size() == 6);
}

TEST_CASE("serialize/deserialize resumes the exact stream") {
    RngStream rng(99);
    for (int i = 0; i < 137; ++i) rng.next_u64();
    const std::string state = rng.serialize();
    std::vector<std::uint64_t> ahead;
    for (int i = 0; i < 50; ++i) ahead.push_back(rng.next_u64());

    RngStream resumed(0);
    resumed.deserialize(state);
    for (int i = 0; i < 50; ++i) CHECK(resumed.next_u64() == ahead[static_cast<std::size_t>(i)]);
}
