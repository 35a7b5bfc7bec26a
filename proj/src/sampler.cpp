#include "fomo/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "fomo/error.hpp"
#include "fomo/stats.hpp"

namespace fomo {

Tensor<float> fit_to_size(const RasterTile& tile, int out_size, double oy, double ox) {
    const std::int64_t s = out_size;
    const std::int64_t h = tile.height, w = tile.width;
    Tensor<float> out({s, s});
    if (h >= s && w >= s) {
        const std::int64_t top = static_cast<std::int64_t>(oy * static_cast<double>(h - s + 1));
        const std::int64_t left = static_cast<std::int64_t>(ox * static_cast<double>(w - s + 1));
        for (std::int64_t r = 0; r < s; ++r) {
            const float* src = tile.values.data() + (top + r) * w + left;
            std::copy(src, src + s, out.data.data() + r * s);
        }
        return out;
    }
    // Undersized native grid: nearest-neighbor over the full extent.
    for (std::int64_t r = 0; r < s; ++r) {
        const std::int64_t sr = std::min<std::int64_t>(h - 1, r * h / s);
        for (std::int64_t c = 0; c < s; ++c) {
            const std::int64_t sc = std::min<std::int64_t>(w - 1, c * w / s);
            out.data[r * s + c] = tile.values[sr * w + sc];
        }
    }
    return out;
}

ModalitySampler::ModalitySampler(std::vector<DatasetSpec> datasets, SamplerSettings settings,
                                 std::uint64_t seed)
    : datasets_(std::move(datasets)), settings_(settings), rng_(seed, "sampler") {
    if (datasets_.empty()) throw ValidationError("sampler: no datasets");
    if (settings_.k_max < 1) throw ValidationError("sampler: k_max must be at least 1");
    for (const auto& d : datasets_) {
        if (d.samples.empty()) {
            throw ValidationError("sampler: dataset " + d.name + " has no samples");
        }
        if (d.bands.empty()) {
            throw ValidationError("sampler: dataset " + d.name + " declares no bands");
        }
        weights_.push_back(d.weight);
    }
}

MicroBatchPlan ModalitySampler::draw_plan() {
    MicroBatchPlan plan;
    plan.dataset = rng_.weighted_index(weights_);
    const DatasetSpec& ds = datasets_[plan.dataset];

    const int k_cap = std::min<int>(settings_.k_max, static_cast<int>(ds.bands.size()));
    const int k = 1 + static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(k_cap)));
    const auto picks = rng_.sample_without_replacement(static_cast<std::uint32_t>(ds.bands.size()),
                                                       static_cast<std::uint32_t>(k));
    for (auto i : picks) plan.band_ids.push_back(ds.bands[i]);

    for (int s = 0; s < settings_.micro_batch_size; ++s) {
        plan.samples.push_back(static_cast<std::size_t>(
            rng_.uniform_int(static_cast<std::uint64_t>(ds.samples.size()))));
        const double oy = rng_.uniform();
        const double ox = rng_.uniform();
        plan.origins.emplace_back(oy, ox);
    }
    return plan;
}

SamplerReport empirical_check(const std::vector<DatasetSpec>& datasets,
                              const SamplerSettings& settings, std::uint64_t seed, int n_draws) {
    if (n_draws < 1000) {
        throw ValidationError("empirical_check: need at least 1000 draws, got " +
                              std::to_string(n_draws));
    }
    ModalitySampler sampler(datasets, settings, seed);

    SamplerReport rep;
    rep.n_draws = n_draws;
    std::vector<std::int64_t> ds_counts(datasets.size(), 0);
    std::vector<std::int64_t> k_counts(static_cast<std::size_t>(settings.k_max), 0);
    for (int i = 0; i < n_draws; ++i) {
        const MicroBatchPlan plan = sampler.draw_plan();
        ds_counts[plan.dataset] += 1;
        k_counts[plan.band_ids.size() - 1] += 1;
    }

    double wsum = 0.0;
    for (const auto& d : datasets) wsum += d.weight;
    std::vector<double> k_expected(static_cast<std::size_t>(settings.k_max), 0.0);
    for (const auto& d : datasets) {
        rep.dataset_names.push_back(d.name);
        rep.dataset_expected.push_back(d.weight / wsum);
        const int cap = std::min<int>(settings.k_max, static_cast<int>(d.bands.size()));
        for (int j = 0; j < cap; ++j) {
            k_expected[static_cast<std::size_t>(j)] += (d.weight / wsum) / cap;
        }
    }
    for (auto c : ds_counts) rep.dataset_freq.push_back(static_cast<double>(c) / n_draws);
    for (auto c : k_counts) rep.k_freq.push_back(static_cast<double>(c) / n_draws);
    rep.k_expected = k_expected;

    rep.chi_square_p_dataset = chi_square_test(ds_counts, rep.dataset_expected);
    rep.chi_square_p_k = chi_square_test(k_counts, k_expected);
    return rep;
}

}  // namespace fomo
