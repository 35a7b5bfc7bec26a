#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fomo/raster.hpp"
#include "fomo/registry.hpp"

namespace fomo {

// Desk-scale corpus generator. Each sample draws one spatial pattern family
// (the class label) shared by all of its bands; bands differ by amplitude
// and offset so cross-band structure is learnable but not degenerate.
struct SynthSpec {
    std::string name = "synth";
    double weight = 1.0;
    std::vector<int> bands;
    int n_samples = 100;
    int tile_size = 64;
    int n_families = 4;  // 1..4: h-stripes, v-stripes, rings, checkerboard
    std::uint64_t seed = 0;
    double value_min = 0.0;
    double value_max = 10000.0;
    bool with_seg = true;  // also emit per-pixel foreground/background masks
};

// Writes tiles plus manifest.json under out_dir and returns the loaded spec.
// Deterministic per seed. Labels are stratified: sample i gets family
// i mod n_families.
DatasetSpec synth_dataset(const SynthSpec& spec, const BandRegistry& registry,
                          const std::string& out_dir);

// Band id used for label tiles; outside any registry.
constexpr int kSegBandId = 65535;

}  // namespace fomo
