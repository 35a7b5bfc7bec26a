#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fomo/registry.hpp"

namespace fomo {

// One band's pixels at native resolution. Payload is float32 row-major to
// match the on-disk layout exactly.
struct RasterTile {
    int band_id = 0;
    std::int64_t height = 0;
    std::int64_t width = 0;
    float gsd = 0.0f;
    std::vector<float> values;

    float at(std::int64_t r, std::int64_t c) const { return values[static_cast<std::size_t>(r * width + c)]; }
};

// Tile file layout (little-endian), 24-byte header then H*W float32:
//   magic "FMTL" | version u16=1 | band_id u16 | H u32 | W u32 | gsd f32 | reserved u32=0
void write_tile(const RasterTile& tile, const std::string& path);
RasterTile read_tile(const std::string& path);

struct BandStats {
    double mean = 0.0;
    double std = 1.0;
};

struct SampleRef {
    std::string id;
    std::map<int, std::string> tiles;  // band_id -> path relative to manifest dir
    std::optional<int> label;          // pattern-family class id, when labeled
    std::optional<std::string> seg;    // per-pixel label tile, when present
};

// One weighted dataset: the manifest plus resolved tile locations.
struct DatasetSpec {
    std::string name;
    double weight = 0.0;
    std::vector<int> bands;
    std::vector<SampleRef> samples;
    std::map<int, BandStats> stats;
    std::string base_dir;  // directory the manifest was loaded from

    std::string tile_path(const SampleRef& s, int band_id) const;
    std::string seg_path(const SampleRef& s) const;
    bool has_band(int band_id) const;
};

// Manifest: JSON {name, weight, bands, samples:[{id, tiles:{band: path},
// label?, seg?}], stats:{band:{mean,std}}}.
DatasetSpec load_manifest(const std::string& path);
void save_manifest(const DatasetSpec& spec, const std::string& path);

// Population statistics over every pixel of each band; std floored at 1e-6.
std::map<int, BandStats> band_stats(const DatasetSpec& spec);

// Validates a dataset group as used for training: weights sum to 1 (1e-9),
// each weight in (0,1], samples reference only declared bands, every tile at
// least min_tile_px on both axes, stats present for all declared bands.
void validate_datasets(const std::vector<DatasetSpec>& datasets, const BandRegistry& registry,
                       int min_tile_px);

inline double normalize_value(double x, const BandStats& s) { return (x - s.mean) / s.std; }
inline double denormalize_value(double z, const BandStats& s) { return z * s.std + s.mean; }

}  // namespace fomo
