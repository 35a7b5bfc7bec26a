#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>
#include <vector>

#include "fomo/tensor.hpp"

namespace fomo {

// Checkpoint file layout (little-endian):
//   magic "FMCK" | version u16 | config_len u32 | config UTF-8 JSON
//   then blobs until EOF:
//   name_len u16 | name | dtype u8 (0=f32, 1=f64) | rank u8 | extents u32*rank | payload
struct CheckpointBlob {
    std::string name;
    int dtype = 0;  // 0: float32, 1: float64
    Shape shape;
    std::vector<unsigned char> payload;
};

struct CheckpointData {
    std::string config_json;  // config snapshot, counters, rng states
    std::vector<CheckpointBlob> blobs;

    const CheckpointBlob& blob(const std::string& name) const;
    bool has_blob(const std::string& name) const;
};

void save_checkpoint(const CheckpointData& data, const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

// Typed payload packing.
template <typename T>
CheckpointBlob make_blob(const std::string& name, const Tensor<T>& t) {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    CheckpointBlob b;
    b.name = name;
    b.dtype = std::is_same_v<T, float> ? 0 : 1;
    b.shape = t.shape;
    b.payload.resize(t.data.size() * sizeof(T));
    std::memcpy(b.payload.data(), t.data.data(), b.payload.size());
    return b;
}

template <typename T>
Tensor<T> blob_tensor(const CheckpointBlob& b);

}  // namespace fomo
