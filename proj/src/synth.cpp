#include "fomo/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "fomo/error.hpp"
#include "fomo/rng.hpp"

namespace fomo {

namespace fs = std::filesystem;

namespace {

// Base pattern in [0,1]; (fx, fy) is a per-sample frequency, phase shifts
// the structure so samples within a family differ.
double pattern_value(int family, double x, double y, double size, double freq, double phase) {
    constexpr double tau = 2.0 * std::numbers::pi;
    switch (family) {
        case 0:  // horizontal stripes
            return 0.5 + 0.5 * std::sin(tau * freq * y / size + phase);
        case 1:  // vertical stripes
            return 0.5 + 0.5 * std::sin(tau * freq * x / size + phase);
        case 2: {  // concentric rings
            const double cx = x - size / 2.0, cy = y - size / 2.0;
            const double r = std::sqrt(cx * cx + cy * cy);
            return 0.5 + 0.5 * std::sin(tau * freq * r / size + phase);
        }
        case 3: {  // checkerboard
            const double cell = size / (2.0 * freq);
            const int ix = static_cast<int>(std::floor((x + phase) / cell));
            const int iy = static_cast<int>(std::floor((y + phase) / cell));
            return ((ix + iy) & 1) ? 1.0 : 0.0;
        }
        default:
            throw ValidationError("synth: unsupported pattern family " + std::to_string(family));
    }
}

}  // namespace

DatasetSpec synth_dataset(const SynthSpec& spec, const BandRegistry& registry,
                          const std::string& out_dir) {
    if (spec.bands.empty()) throw ValidationError("synth: at least one band required");
    for (int b : spec.bands) {
        if (!registry.has_id(b)) throw NotFoundError("synth: band " + std::to_string(b) + " not in registry");
    }
    if (spec.n_families < 1 || spec.n_families > 4) {
        throw ValidationError("synth: n_families must be in 1..4");
    }
    if (spec.n_samples < 1) throw ValidationError("synth: n_samples must be >= 1");
    if (spec.tile_size < 1) throw ValidationError("synth: tile_size must be >= 1");
    if (!(spec.value_max > spec.value_min)) {
        throw ValidationError("synth: value_max must exceed value_min");
    }

    fs::create_directories(out_dir);
    RngStream rng(spec.seed);
    const double range = spec.value_max - spec.value_min;
    const int sz = spec.tile_size;

    // Per-band gain so the same spatial pattern shows up at band-specific
    // scales; fixed for the whole corpus.
    std::vector<double> band_amp(spec.bands.size()), band_off(spec.bands.size());
    for (std::size_t i = 0; i < spec.bands.size(); ++i) {
        band_amp[i] = range * (0.15 + 0.25 * rng.uniform());
        band_off[i] = spec.value_min + range * (0.2 + 0.3 * rng.uniform());
    }

    DatasetSpec ds;
    ds.name = spec.name;
    ds.weight = spec.weight;
    ds.bands = spec.bands;
    ds.base_dir = out_dir;

    for (int i = 0; i < spec.n_samples; ++i) {
        const int family = i % spec.n_families;
        const double freq = 2.0 + 3.0 * rng.uniform();
        const double phase = rng.uniform() * 6.283185307179586;

        SampleRef ref;
        ref.id = "s" + std::to_string(i);
        ref.label = family;

        std::vector<double> base(static_cast<std::size_t>(sz) * sz);
        for (int y = 0; y < sz; ++y) {
            for (int x = 0; x < sz; ++x) {
                base[static_cast<std::size_t>(y) * sz + x] =
                    pattern_value(family, x, y, sz, freq, phase);
            }
        }

        for (std::size_t bi = 0; bi < spec.bands.size(); ++bi) {
            const int band = spec.bands[bi];
            RasterTile t;
            t.band_id = band;
            t.height = sz;
            t.width = sz;
            t.gsd = static_cast<float>(registry.by_id(band).gsd_m);
            t.values.resize(base.size());
            for (std::size_t p = 0; p < base.size(); ++p) {
                double v = band_off[bi] + band_amp[bi] * base[p] + 0.01 * range * rng.normal();
                v = std::min(std::max(v, spec.value_min), spec.value_max);
                t.values[p] = static_cast<float>(v);
            }
            const std::string rel = ref.id + "_b" + std::to_string(band) + ".fmtl";
            write_tile(t, (fs::path(out_dir) / rel).string());
            ref.tiles[band] = rel;
        }

        if (spec.with_seg) {
            RasterTile m;
            m.band_id = kSegBandId;
            m.height = sz;
            m.width = sz;
            m.gsd = 1.0f;
            m.values.resize(base.size());
            for (std::size_t p = 0; p < base.size(); ++p) {
                m.values[p] = base[p] > 0.5 ? 1.0f : 0.0f;
            }
            const std::string rel = ref.id + "_seg.fmtl";
            write_tile(m, (fs::path(out_dir) / rel).string());
            ref.seg = rel;
        }

        ds.samples.push_back(std::move(ref));
    }

    ds.stats = band_stats(ds);
    save_manifest(ds, (fs::path(out_dir) / "manifest.json").string());
    return ds;
}

}  // namespace fomo
