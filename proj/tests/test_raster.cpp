#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "fomo/error.hpp"
#include "fomo/raster.hpp"
#include "fomo/registry.hpp"
#include "fomo/synth.hpp"

using namespace fomo;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("fomo_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RasterTile small_tile() {
    RasterTile t;
    t.band_id = 3;
    t.height = 2;
    t.width = 2;
    t.gsd = 10.0f;
    t.values = {1.5f, -2.25f, 0.0f, 4.75f};
    return t;
}

}  // namespace

TEST_CASE("tile round-trip is bit exact") {
    const auto dir = temp_dir("tile_rt");
    const auto path = (dir / "t.fmtl").string();
    const RasterTile t = small_tile();
    write_tile(t, path);
    const RasterTile back = read_tile(path);
    CHECK(back.band_id == t.band_id);
    CHECK(back.height == t.height);
    CHECK(back.width == t.width);
    CHECK(std::memcmp(&back.gsd, &t.gsd, sizeof(float)) == 0);
    REQUIRE(back.values.size() == t.values.size());
    CHECK(std::memcmp(back.values.data(), t.values.data(), t.values.size() * sizeof(float)) == 0);
    fs::remove_all(dir);
}

TEST_CASE("tile file starts with FMTL and has the documented size") {
    const auto dir = temp_dir("tile_hdr");
    const auto path = (dir / "t.fmtl").string();

    RasterTile t;
    t.band_id = 0;
    t.height = 64;
    t.width = 64;
    t.gsd = 10.0f;
    t.values.assign(64 * 64, 1.0f);
    write_tile(t, path);

    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::memcmp(magic, "FMTL", 4) == 0);
    CHECK(fs::file_size(path) == 24 + 64 * 64 * 4);
    fs::remove_all(dir);
}

TEST_CASE("identical tiles produce byte-identical files") {
    const auto dir = temp_dir("tile_bytes");
    const auto p1 = (dir / "a.fmtl").string();
    const auto p2 = (dir / "b.fmtl").string();
    write_tile(small_tile(), p1);
    write_tile(small_tile(), p2);
    std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    fs::remove_all(dir);
}

TEST_CASE("corrupt tile files raise format errors naming the problem") {
    const auto dir = temp_dir("tile_bad");
    const auto path = (dir / "t.fmtl").string();
    write_tile(small_tile(), path);

    SUBCASE("truncated payload") {
        fs::resize_file(path, fs::file_size(path) - 4);
        CHECK_THROWS_WITH_AS(read_tile(path), doctest::Contains("payload"), FormatError);
    }
    SUBCASE("wrong magic") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_WITH_AS(read_tile(path), doctest::Contains("magic"), FormatError);
    }
    SUBCASE("wrong version") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        const std::uint16_t v = 9;
        f.write(reinterpret_cast<const char*>(&v), 2);
        f.close();
        CHECK_THROWS_WITH_AS(read_tile(path), doctest::Contains("version"), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_tile((dir / "nope.fmtl").string()), StorageError);
    }
    fs::remove_all(dir);
}

TEST_CASE("write rejects invalid tiles") {
    RasterTile t = small_tile();
    t.values.pop_back();
    CHECK_THROWS_AS(write_tile(t, "/tmp/fomo_invalid.fmtl"), DimensionError);
    RasterTile nf = small_tile();
    nf.values[0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(write_tile(nf, "/tmp/fomo_invalid.fmtl"), ValidationError);
}

TEST_CASE("synthetic corpus: determinism, stratified labels, value range") {
    const BandRegistry reg = BandRegistry::canonical();
    SynthSpec spec;
    spec.bands = {3, 4, 5};  // Sentinel-2 10m B02/B03/B04
    spec.n_samples = 100;
    spec.tile_size = 16;
    spec.n_families = 4;
    spec.seed = 7;
    spec.value_min = 0.0;
    spec.value_max = 10000.0;

    const auto d1 = temp_dir("synth_a");
    const auto d2 = temp_dir("synth_b");
    const DatasetSpec a = synth_dataset(spec, reg, d1.string());
    const DatasetSpec b = synth_dataset(spec, reg, d2.string());

    // Determinism: identical corpora from identical seeds.
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        for (const auto& [band, rel] : a.samples[i].tiles) {
            const RasterTile ta = read_tile(a.tile_path(a.samples[i], band));
            const RasterTile tb = read_tile(b.tile_path(b.samples[i], band));
            REQUIRE(ta.values.size() == tb.values.size());
            CHECK(std::memcmp(ta.values.data(), tb.values.data(),
                              ta.values.size() * sizeof(float)) == 0);
        }
    }

    // Labels stratified: 100 samples over 4 families -> exactly 25 each.
    std::map<int, int> counts;
    for (const auto& s : a.samples) {
        REQUIRE(s.label.has_value());
        counts[*s.label]++;
    }
    REQUIRE(counts.size() == 4);
    for (const auto& [fam, n] : counts) CHECK(n == 25);

    // All values inside the configured dynamic range.
    for (const auto& s : a.samples) {
        for (const auto& [band, rel] : s.tiles) {
            const RasterTile t = read_tile(a.tile_path(s, band));
            for (float v : t.values) {
                CHECK(v >= 0.0f);
                CHECK(v <= 10000.0f);
            }
        }
    }

    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("band stats: constant band floors std; two-point band is exact") {
    const BandRegistry reg = BandRegistry::canonical();
    const auto dir = temp_dir("stats");

    DatasetSpec d;
    d.name = "stats";
    d.weight = 1.0;
    d.bands = {0, 1};
    d.base_dir = dir.string();

    RasterTile c;
    c.band_id = 0;
    c.height = 2;
    c.width = 2;
    c.gsd = 10.0f;
    c.values = {3.0f, 3.0f, 3.0f, 3.0f};
    write_tile(c, (dir / "c.fmtl").string());

    RasterTile z;
    z.band_id = 1;
    z.height = 2;
    z.width = 2;
    z.gsd = 10.0f;
    z.values = {0.0f, 2.0f, 0.0f, 2.0f};
    write_tile(z, (dir / "z.fmtl").string());

    SampleRef s;
    s.id = "s0";
    s.tiles[0] = "c.fmtl";
    s.tiles[1] = "z.fmtl";
    d.samples.push_back(s);

    const auto stats = band_stats(d);
    CHECK(stats.at(0).mean == doctest::Approx(3.0));
    CHECK(stats.at(0).std == doctest::Approx(1e-6));
    CHECK(stats.at(1).mean == doctest::Approx(1.0));
    CHECK(stats.at(1).std == doctest::Approx(1.0));

    // Normalize then denormalize is identity within 1e-6 relative.
    const double x = 1.7;
    CHECK(denormalize_value(normalize_value(x, stats.at(1)), stats.at(1)) ==
          doctest::Approx(x).epsilon(1e-6));

    CHECK_THROWS_AS(band_stats(DatasetSpec{}), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("manifest round-trip and validation") {
    const BandRegistry reg = BandRegistry::canonical();
    SynthSpec spec;
    spec.bands = {0, 35};
    spec.n_samples = 8;
    spec.tile_size = 16;
    spec.n_families = 2;
    spec.seed = 9;
    const auto dir = temp_dir("manifest");
    const DatasetSpec d = synth_dataset(spec, reg, dir.string());

    const DatasetSpec back = load_manifest((dir / "manifest.json").string());
    CHECK(back.name == d.name);
    CHECK(back.weight == d.weight);
    CHECK(back.bands == d.bands);
    REQUIRE(back.samples.size() == d.samples.size());
    CHECK(back.stats.at(0).mean == doctest::Approx(d.stats.at(0).mean));

    // Valid as-is (tiles are 16px, validate with matching floor).
    CHECK_NOTHROW(validate_datasets({back}, reg, 16));
    // 64px floor rejects the 16px tiles.
    CHECK_THROWS_WITH_AS(validate_datasets({back}, reg, 64), doctest::Contains("minimum"),
                         ValidationError);
    // Weight must sum to 1 across the group.
    DatasetSpec half = back;
    half.weight = 0.9;
    CHECK_THROWS_WITH_AS(validate_datasets({half}, reg, 16), doctest::Contains("0.9"),
                         ValidationError);

    fs::remove_all(dir);
}
