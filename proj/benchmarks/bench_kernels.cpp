// Compares the OpenMP kernels against the serial reference implementation.
// Usage: bench_kernels [size]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include "fomo/kernels.hpp"
#include "fomo/reference.hpp"
#include "fomo/rng.hpp"

using namespace fomo;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<float> random_vec(RngStream& rng, std::size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(2.0 * rng.uniform() - 1.0);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 256;
    const int reps = 5;
    RngStream rng(0);

    std::printf("threads: %d, size: %d\n", omp_get_max_threads(), n);
    std::printf("%-28s %12s %12s %8s\n", "kernel", "omp (ms)", "serial (ms)", "speedup");

    {
        auto a = random_vec(rng, static_cast<std::size_t>(n) * n);
        auto b = random_vec(rng, static_cast<std::size_t>(n) * n);
        std::vector<float> out(static_cast<std::size_t>(n) * n);
        const double omp_ms = time_ms([&] { kernels::matmul(a.data(), b.data(), out.data(), n, n, n); }, reps);
        const double ser_ms = time_ms([&] { ref::matmul(a.data(), b.data(), out.data(), n, n, n); }, reps);
        std::printf("%-28s %12.3f %12.3f %8.2fx\n", "matmul", omp_ms, ser_ms, ser_ms / omp_ms);
    }
    {
        const int rows = n * 8, cols = n;
        auto x = random_vec(rng, static_cast<std::size_t>(rows) * cols);
        std::vector<float> out(x.size());
        const double omp_ms = time_ms([&] { kernels::softmax_rows(x.data(), out.data(), rows, cols); }, reps);
        const double ser_ms = time_ms([&] { ref::softmax_rows(x.data(), out.data(), rows, cols); }, reps);
        std::printf("%-28s %12.3f %12.3f %8.2fx\n", "softmax_rows", omp_ms, ser_ms, ser_ms / omp_ms);
    }
    {
        const int rows = n * 8, cols = n;
        auto x = random_vec(rng, static_cast<std::size_t>(rows) * cols);
        auto gamma = random_vec(rng, static_cast<std::size_t>(cols));
        auto beta = random_vec(rng, static_cast<std::size_t>(cols));
        std::vector<float> out(x.size()), mean(static_cast<std::size_t>(rows)), rstd(static_cast<std::size_t>(rows));
        const double omp_ms = time_ms(
            [&] {
                kernels::layer_norm_rows(x.data(), gamma.data(), beta.data(), 1e-6f, out.data(),
                                         mean.data(), rstd.data(), rows, cols);
            },
            reps);
        const double ser_ms = time_ms(
            [&] { ref::layer_norm_rows(x.data(), gamma.data(), beta.data(), 1e-6f, out.data(), rows, cols); },
            reps);
        std::printf("%-28s %12.3f %12.3f %8.2fx\n", "layer_norm_rows", omp_ms, ser_ms, ser_ms / omp_ms);
    }
    {
        const int t = n, heads = 8, d = 64 * heads;
        auto q = random_vec(rng, static_cast<std::size_t>(t) * d);
        auto k = random_vec(rng, static_cast<std::size_t>(t) * d);
        auto v = random_vec(rng, static_cast<std::size_t>(t) * d);
        std::vector<float> out(q.size()), probs(static_cast<std::size_t>(heads) * t * t);
        const double omp_ms = time_ms(
            [&] { kernels::attention_forward(q.data(), k.data(), v.data(), out.data(), probs.data(), t, d, heads); },
            reps);
        const double ser_ms =
            time_ms([&] { ref::attention(q.data(), k.data(), v.data(), out.data(), t, d, heads); }, reps);
        std::printf("%-28s %12.3f %12.3f %8.2fx\n", "attention", omp_ms, ser_ms, ser_ms / omp_ms);
    }
    {
        auto x = random_vec(rng, static_cast<std::size_t>(n) * n * 64);
        std::vector<float> out(x.size());
        const double omp_ms =
            time_ms([&] { kernels::gelu(x.data(), out.data(), static_cast<std::int64_t>(x.size())); }, reps);
        const double ser_ms =
            time_ms([&] { ref::gelu(x.data(), out.data(), static_cast<std::int64_t>(x.size())); }, reps);
        std::printf("%-28s %12.3f %12.3f %8.2fx\n", "gelu", omp_ms, ser_ms, ser_ms / omp_ms);
    }
    return 0;
}
