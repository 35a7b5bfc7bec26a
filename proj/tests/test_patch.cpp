#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fomo/patch.hpp"
#include "fomo/rng.hpp"

using namespace fomo;

namespace {

Tensor<double> numbered(std::int64_t h, std::int64_t w) {
    Tensor<double> t({h, w});
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<double>(i);
    return t;
}

}  // namespace

TEST_CASE("patchify shapes and counts") {
    const auto t64 = numbered(64, 64);
    const auto p = patchify(t64, 16);
    CHECK(p.shape[0] == 16);
    CHECK(p.shape[1] == 256);

    // 60x60 with P=16: only a 48x48 region is covered, 9 patches.
    const auto t60 = numbered(60, 60);
    const auto p60 = patchify(t60, 16);
    CHECK(p60.shape[0] == 9);
    CHECK(p60.shape[1] == 256);
}

TEST_CASE("patch contents are row-major within the patch") {
    const auto t = numbered(8, 8);
    const auto p = patchify(t, 4);
    // Patch 1 is the top-right 4x4 block: starts at column 4 of row 0.
    CHECK(p.at(1, 0) == 4.0);
    CHECK(p.at(1, 1) == 5.0);
    CHECK(p.at(1, 4) == 12.0);  // second patch row begins at (1,4) = 8+4
    // Patch 2 is the bottom-left block: starts at (4,0) = 32.
    CHECK(p.at(2, 0) == 32.0);
}

TEST_CASE("trailing pixels beyond the covered region are dropped") {
    const auto t = numbered(60, 60);
    const auto p = patchify(t, 16);
    for (std::int64_t i = 0; i < p.shape[0]; ++i) {
        for (std::int64_t j = 0; j < p.shape[1]; ++j) {
            const auto v = static_cast<std::int64_t>(p.at(i, j));
            CHECK(v % 60 <= 47);       // column index within source
            CHECK(v / 60 <= 47);       // row index within source
        }
    }
}

TEST_CASE("unpatchify inverts patchify on the covered region") {
    RngStream rng(3);
    Tensor<double> t({64, 64});
    for (auto& v : t.data) v = rng.normal();
    const PatchGrid grid{64, 64, 16};
    const auto back = unpatchify(patchify(t, 16), grid);
    REQUIRE(back.shape == t.shape);
    CHECK(back.data == t.data);

    // Single patch covering the whole tile: identity.
    Tensor<double> small({5, 5});
    for (auto& v : small.data) v = rng.normal();
    const auto round = unpatchify(patchify(small, 5), PatchGrid{5, 5, 5});
    CHECK(round.data == small.data);
}

TEST_CASE("unpatchify of a 60x60 tiling equals the source on the covered region") {
    const auto t = numbered(60, 60);
    const auto back = unpatchify(patchify(t, 16), PatchGrid{60, 60, 16});
    REQUIRE(back.shape[0] == 48);
    REQUIRE(back.shape[1] == 48);
    for (std::int64_t r = 0; r < 48; ++r) {
        for (std::int64_t c = 0; c < 48; ++c) CHECK(back.at(r, c) == t.at(r, c));
    }
}

TEST_CASE("patch size larger than the tile is rejected") {
    const auto t = numbered(8, 8);
    CHECK_THROWS_AS(patchify(t, 9), DimensionError);
    CHECK_THROWS_AS(patchify(t, 0), DimensionError);
    // Count mismatch on the reassembly side.
    const auto p = patchify(t, 4);
    CHECK_THROWS_AS(unpatchify(p, PatchGrid{16, 16, 4}), DimensionError);
}
