#pragma once

#include <cstdint>

#include "fomo/error.hpp"
#include "fomo/tensor.hpp"

namespace fomo {

// Non-overlapping PxP tiling; trailing pixels beyond P*floor(H/P) are
// dropped. Patch order is row-major over the grid, patch contents row-major.
struct PatchGrid {
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::int64_t p = 1;

    std::int64_t rows() const { return h / p; }
    std::int64_t cols() const { return w / p; }
    std::int64_t count() const { return rows() * cols(); }
    std::int64_t patch_len() const { return p * p; }
};

template <typename T>
Tensor<T> patchify(const Tensor<T>& tile, std::int64_t p) {
    if (tile.shape.size() != 2) throw DimensionError("patchify: tile must be rank 2");
    const std::int64_t h = tile.shape[0], w = tile.shape[1];
    if (p < 1 || p > h || p > w) {
        throw DimensionError("patchify: patch size " + std::to_string(p) + " exceeds tile " +
                             std::to_string(h) + "x" + std::to_string(w));
    }
    const PatchGrid grid{h, w, p};
    Tensor<T> out({grid.count(), grid.patch_len()});
    for (std::int64_t gr = 0; gr < grid.rows(); ++gr) {
        for (std::int64_t gc = 0; gc < grid.cols(); ++gc) {
            T* dst = out.data.data() + (gr * grid.cols() + gc) * grid.patch_len();
            for (std::int64_t r = 0; r < p; ++r) {
                const T* src = tile.data.data() + (gr * p + r) * w + gc * p;
                for (std::int64_t c = 0; c < p; ++c) dst[r * p + c] = src[c];
            }
        }
    }
    return out;
}

// Left inverse of patchify on the covered region; uncovered trailing pixels
// do not exist in the output (extent rows()*p by cols()*p).
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, const PatchGrid& grid) {
    if (patches.shape.size() != 2 || patches.shape[0] != grid.count() ||
        patches.shape[1] != grid.patch_len()) {
        throw DimensionError("unpatchify: got " + shape_str(patches.shape) + ", want [" +
                             std::to_string(grid.count()) + "x" + std::to_string(grid.patch_len()) +
                             "]");
    }
    const std::int64_t p = grid.p;
    Tensor<T> out({grid.rows() * p, grid.cols() * p});
    for (std::int64_t gr = 0; gr < grid.rows(); ++gr) {
        for (std::int64_t gc = 0; gc < grid.cols(); ++gc) {
            const T* src = patches.data.data() + (gr * grid.cols() + gc) * grid.patch_len();
            for (std::int64_t r = 0; r < p; ++r) {
                T* dst = out.data.data() + (gr * p + r) * (grid.cols() * p) + gc * p;
                for (std::int64_t c = 0; c < p; ++c) dst[c] = src[r * p + c];
            }
        }
    }
    return out;
}

}  // namespace fomo
