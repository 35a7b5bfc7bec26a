#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fomo/error.hpp"

namespace fomo {

// Seeded random stream. Draw primitives are implemented on top of the raw
// mt19937_64 output instead of std::*_distribution so sequences do not depend
// on the standard library implementation, and so the full stream state
// round-trips through checkpoints.
class RngStream {
  public:
    RngStream() : engine_(0) {}
    explicit RngStream(std::uint64_t seed, std::string id = "")
        : id_(std::move(id)), engine_(seed) {}

    const std::string& id() const { return id_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection keeps the draw exactly uniform.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw ContractError("uniform_int: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    // Standard normal via Box-Muller. Both uniforms are drawn fresh each call
    // so there is no hidden cache state to serialize.
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Normal(0, stddev) resampled until |z| <= cut * stddev.
    double truncated_normal(double stddev, double cut = 2.0) {
        double z = normal();
        while (std::abs(z) > cut) z = normal();
        return z * stddev;
    }

    // Index drawn proportionally to the given nonnegative weights.
    std::size_t weighted_index(const std::vector<double>& weights) {
        if (weights.empty()) throw ContractError("weighted_index: empty weight vector");
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw ValidationError("weighted_index: weights sum to zero");
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

    // k distinct values from [0, n), uniform without replacement.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
        if (k > n) throw ContractError("sample_without_replacement: k exceeds n");
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        // Partial Fisher-Yates: the first k slots become the sample.
        for (std::uint32_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::uint32_t>(uniform_int(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void deserialize(const std::string& state) {
        std::istringstream is(state);
        is >> engine_;
        if (!is) throw FormatError("RngStream: malformed engine state");
    }

  private:
    std::string id_;
    std::mt19937_64 engine_;
};

}  // namespace fomo
