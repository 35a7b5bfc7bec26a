#include "fomo/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fomo/error.hpp"

namespace fomo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'F', 'M', 'T', 'L'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 24;

// All multi-byte fields little-endian; this code assumes a little-endian
// host, which the build asserts via a static check below.
static_assert(std::endian::native == std::endian::little, "tile format requires little-endian host");

template <typename T>
void put(std::string& buf, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));
}

template <typename T>
T take(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

}  // namespace

void write_tile(const RasterTile& tile, const std::string& path) {
    if (tile.height < 1 || tile.width < 1) {
        throw ValidationError("write_tile: height and width must be >= 1");
    }
    const std::size_t n = static_cast<std::size_t>(tile.height * tile.width);
    if (tile.values.size() != n) {
        throw DimensionError("write_tile: payload length " + std::to_string(tile.values.size()) +
                             " != H*W = " + std::to_string(n));
    }
    for (float v : tile.values) {
        if (!std::isfinite(v)) throw ValidationError("write_tile: non-finite pixel value");
    }
    std::string buf;
    buf.reserve(kHeaderBytes + n * sizeof(float));
    buf.append(kMagic, 4);
    put<std::uint16_t>(buf, kVersion);
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(tile.band_id));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(tile.height));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(tile.width));
    put<float>(buf, tile.gsd);
    put<std::uint32_t>(buf, 0u);
    buf.append(reinterpret_cast<const char*>(tile.values.data()), n * sizeof(float));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("write_tile: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw StorageError("write_tile: write failed for " + path);
}

RasterTile read_tile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("read_tile: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < kHeaderBytes) {
        throw FormatError("read_tile: file shorter than 24-byte header: " + path);
    }
    if (std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw FormatError("read_tile: bad magic (want FMTL): " + path);
    }
    const auto version = take<std::uint16_t>(buf.data() + 4);
    if (version != kVersion) {
        throw FormatError("read_tile: unsupported version " + std::to_string(version) + ": " + path);
    }
    RasterTile t;
    t.band_id = take<std::uint16_t>(buf.data() + 6);
    t.height = take<std::uint32_t>(buf.data() + 8);
    t.width = take<std::uint32_t>(buf.data() + 12);
    t.gsd = take<float>(buf.data() + 16);
    const auto reserved = take<std::uint32_t>(buf.data() + 20);
    if (reserved != 0) {
        throw FormatError("read_tile: nonzero reserved field: " + path);
    }
    if (t.height < 1 || t.width < 1) {
        throw FormatError("read_tile: invalid extents in header: " + path);
    }
    const std::size_t n = static_cast<std::size_t>(t.height * t.width);
    if (buf.size() != kHeaderBytes + n * sizeof(float)) {
        throw FormatError("read_tile: payload length mismatch (truncated or oversized): " + path);
    }
    t.values.resize(n);
    std::memcpy(t.values.data(), buf.data() + kHeaderBytes, n * sizeof(float));
    return t;
}

std::string DatasetSpec::tile_path(const SampleRef& s, int band_id) const {
    auto it = s.tiles.find(band_id);
    if (it == s.tiles.end()) {
        throw NotFoundError("dataset " + name + ": sample " + s.id + " has no tile for band " +
                            std::to_string(band_id));
    }
    return (fs::path(base_dir) / it->second).string();
}

std::string DatasetSpec::seg_path(const SampleRef& s) const {
    if (!s.seg) throw NotFoundError("dataset " + name + ": sample " + s.id + " has no label tile");
    return (fs::path(base_dir) / *s.seg).string();
}

bool DatasetSpec::has_band(int band_id) const {
    return std::find(bands.begin(), bands.end(), band_id) != bands.end();
}

DatasetSpec load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("load_manifest: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("load_manifest: invalid JSON: ") + e.what());
    }
    DatasetSpec d;
    d.base_dir = fs::path(path).parent_path().string();
    try {
        d.name = j.at("name").get<std::string>();
        d.weight = j.at("weight").get<double>();
        for (const auto& b : j.at("bands")) d.bands.push_back(b.get<int>());
        for (const auto& s : j.at("samples")) {
            SampleRef ref;
            ref.id = s.at("id").get<std::string>();
            for (const auto& [k, v] : s.at("tiles").items()) {
                ref.tiles[std::stoi(k)] = v.get<std::string>();
            }
            if (s.contains("label") && !s.at("label").is_null()) ref.label = s.at("label").get<int>();
            if (s.contains("seg") && !s.at("seg").is_null()) ref.seg = s.at("seg").get<std::string>();
            d.samples.push_back(std::move(ref));
        }
        if (j.contains("stats")) {
            for (const auto& [k, v] : j.at("stats").items()) {
                BandStats st;
                st.mean = v.at("mean").get<double>();
                st.std = v.at("std").get<double>();
                d.stats[std::stoi(k)] = st;
            }
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("load_manifest: schema violation: ") + e.what());
    }
    return d;
}

void save_manifest(const DatasetSpec& spec, const std::string& path) {
    json j;
    j["name"] = spec.name;
    j["weight"] = spec.weight;
    j["bands"] = spec.bands;
    j["samples"] = json::array();
    for (const auto& s : spec.samples) {
        json js;
        js["id"] = s.id;
        json tiles = json::object();
        for (const auto& [band, rel] : s.tiles) tiles[std::to_string(band)] = rel;
        js["tiles"] = std::move(tiles);
        if (s.label) js["label"] = *s.label;
        if (s.seg) js["seg"] = *s.seg;
        j["samples"].push_back(std::move(js));
    }
    json stats = json::object();
    for (const auto& [band, st] : spec.stats) {
        stats[std::to_string(band)] = {{"mean", st.mean}, {"std", st.std}};
    }
    j["stats"] = std::move(stats);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("save_manifest: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw StorageError("save_manifest: write failed for " + path);
}

std::map<int, BandStats> band_stats(const DatasetSpec& spec) {
    if (spec.samples.empty() || spec.bands.empty()) {
        throw ValidationError("band_stats: dataset " + spec.name + " has no samples or bands");
    }
    // Two-pass population statistics: exact mean first, then variance about
    // it, so constant bands come out at exactly std = floor.
    std::map<int, double> sum, count;
    for (const auto& s : spec.samples) {
        for (const auto& [band, rel] : s.tiles) {
            const RasterTile t = read_tile(spec.tile_path(s, band));
            for (float v : t.values) sum[band] += v;
            count[band] += static_cast<double>(t.values.size());
        }
    }
    std::map<int, BandStats> out;
    for (int band : spec.bands) {
        if (!count.count(band) || count[band] == 0.0) {
            throw NotFoundError("band_stats: no pixels for band " + std::to_string(band) +
                                " in dataset " + spec.name);
        }
        out[band].mean = sum[band] / count[band];
    }
    std::map<int, double> ss;
    for (const auto& s : spec.samples) {
        for (const auto& [band, rel] : s.tiles) {
            if (!out.count(band)) continue;
            const RasterTile t = read_tile(spec.tile_path(s, band));
            const double mu = out[band].mean;
            for (float v : t.values) {
                const double d = static_cast<double>(v) - mu;
                ss[band] += d * d;
            }
        }
    }
    for (auto& [band, st] : out) {
        st.std = std::max(std::sqrt(ss[band] / count[band]), 1e-6);
    }
    return out;
}

void validate_datasets(const std::vector<DatasetSpec>& datasets, const BandRegistry& registry,
                       int min_tile_px) {
    if (datasets.empty()) throw ValidationError("dataset validation: no datasets configured");
    double total = 0.0;
    for (const auto& d : datasets) {
        if (!(d.weight > 0.0 && d.weight <= 1.0)) {
            throw ValidationError("dataset " + d.name + ": weight " + std::to_string(d.weight) +
                                  " outside (0,1]");
        }
        total += d.weight;
        if (d.samples.empty()) {
            throw ValidationError("dataset " + d.name + ": zero samples");
        }
        for (int band : d.bands) {
            if (!registry.has_id(band)) {
                throw NotFoundError("dataset " + d.name + ": band " + std::to_string(band) +
                                    " not in registry");
            }
            if (!d.stats.count(band)) {
                throw ValidationError("dataset " + d.name + ": missing stats for band " +
                                      std::to_string(band));
            }
        }
        for (const auto& s : d.samples) {
            if (s.tiles.empty()) {
                throw ValidationError("dataset " + d.name + ": sample " + s.id + " has no tiles");
            }
            for (const auto& [band, rel] : s.tiles) {
                if (!d.has_band(band)) {
                    throw ValidationError("dataset " + d.name + ": sample " + s.id +
                                          " references undeclared band " + std::to_string(band));
                }
                const RasterTile t = read_tile(d.tile_path(s, band));
                if (t.band_id != band) {
                    throw ValidationError("dataset " + d.name + ": tile " + rel + " header band " +
                                          std::to_string(t.band_id) + " != manifest band " +
                                          std::to_string(band));
                }
                if (t.height < min_tile_px || t.width < min_tile_px) {
                    throw ValidationError("dataset " + d.name + ": tile " + rel + " is " +
                                          std::to_string(t.height) + "x" + std::to_string(t.width) +
                                          ", below the " + std::to_string(min_tile_px) +
                                          "px minimum");
                }
            }
        }
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("dataset weights must sum to 1, got " + std::to_string(total));
    }
}

}  // namespace fomo
