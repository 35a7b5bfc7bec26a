#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fomo/config.hpp"
#include "fomo/mae.hpp"
#include "fomo/raster.hpp"
#include "fomo/rng.hpp"

namespace fomo {

// Everything random about one micro-batch, decided before any file IO. The
// draw order is fixed: dataset, band count, band subset, then per sample the
// index and the fractional crop origin.
struct MicroBatchPlan {
    std::size_t dataset = 0;
    std::vector<int> band_ids;
    std::vector<std::size_t> samples;
    std::vector<std::pair<double, double>> origins;  // fractional, one per sample
};

template <typename T>
struct MicroBatch {
    std::string dataset;
    std::vector<int> band_ids;
    std::vector<std::string> sample_ids;
    std::vector<SampleView<T>> samples;  // [micro_batch_size][k] normalized SxS rasters
};

struct SamplerReport {
    std::vector<std::string> dataset_names;
    std::vector<double> dataset_freq;
    std::vector<double> dataset_expected;
    std::vector<double> k_freq;      // index 0 <-> k=1
    std::vector<double> k_expected;
    double chi_square_p_dataset = 0.0;
    double chi_square_p_k = 0.0;
    int n_draws = 0;
};

// Crops a window of out_size at the fractional origin when the native raster
// is large enough, otherwise nearest-neighbor resamples the full extent.
Tensor<float> fit_to_size(const RasterTile& tile, int out_size, double oy, double ox);

class ModalitySampler {
  public:
    ModalitySampler(std::vector<DatasetSpec> datasets, SamplerSettings settings,
                    std::uint64_t seed);

    MicroBatchPlan draw_plan();

    // draw_plan + tile IO + normalization.
    template <typename T>
    MicroBatch<T> next() {
        return materialize<T>(draw_plan());
    }

    template <typename T>
    MicroBatch<T> materialize(const MicroBatchPlan& plan) const {
        const DatasetSpec& ds = datasets_[plan.dataset];
        MicroBatch<T> mb;
        mb.dataset = ds.name;
        mb.band_ids = plan.band_ids;
        for (std::size_t s = 0; s < plan.samples.size(); ++s) {
            const SampleRef& ref = ds.samples[plan.samples[s]];
            mb.sample_ids.push_back(ref.id);
            SampleView<T> view;
            for (int band : plan.band_ids) {
                const RasterTile tile = read_tile(ds.tile_path(ref, band));
                Tensor<float> fitted = fit_to_size(tile, settings_.train_size,
                                                   plan.origins[s].first, plan.origins[s].second);
                const BandStats st = ds.stats.at(band);
                Tensor<T> out(fitted.shape);
                for (std::size_t i = 0; i < fitted.data.size(); ++i) {
                    out.data[i] = static_cast<T>(normalize_value(fitted.data[i], st));
                }
                view.push_back({band, std::move(out)});
            }
            mb.samples.push_back(std::move(view));
        }
        return mb;
    }

    RngStream& rng() { return rng_; }
    const RngStream& rng() const { return rng_; }
    const std::vector<DatasetSpec>& datasets() const { return datasets_; }
    const SamplerSettings& settings() const { return settings_; }

  private:
    std::vector<DatasetSpec> datasets_;
    SamplerSettings settings_;
    std::vector<double> weights_;
    RngStream rng_;
};

// Draws n plans (no IO) and tests dataset and band-count frequencies against
// the configured distribution.
SamplerReport empirical_check(const std::vector<DatasetSpec>& datasets,
                              const SamplerSettings& settings, std::uint64_t seed, int n_draws);

}  // namespace fomo
