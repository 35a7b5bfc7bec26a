#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fomo/config.hpp"
#include "fomo/error.hpp"
#include "fomo/hash.hpp"
#include "fomo/rng.hpp"
#include "fomo/tensor.hpp"

namespace fomo {

// Fully resolved architecture: config plus the registry size and the
// positional table extent.
struct ModelDims {
    ProjectionMode mode = ProjectionMode::kShared;
    int patch_size = 4;
    int width = 96;
    int encoder_depth = 4;
    int encoder_heads = 4;
    int decoder_depth = 2;
    int decoder_heads = 4;
    int decoder_width = 128;
    int n_bands = 36;
    std::int64_t n_positions = 256;  // >= (train_size / patch_size)^2

    std::int64_t patch_len() const {
        return static_cast<std::int64_t>(patch_size) * patch_size;
    }

    static ModelDims resolve(const ModelConfig& m, int n_bands, int train_size) {
        ModelDims d;
        d.mode = m.mode;
        d.patch_size = m.patch_size;
        d.width = m.width;
        d.encoder_depth = m.encoder_depth;
        d.encoder_heads = m.encoder_heads;
        d.decoder_depth = m.decoder_depth;
        d.decoder_heads = m.decoder_heads;
        d.decoder_width = m.decoder_width;
        d.n_bands = n_bands;
        const std::int64_t side = train_size / m.patch_size;
        d.n_positions = side * side;
        return d;
    }
};

// Every parameter tensor the model owns, in a fixed enumeration order. The
// order defines checkpoint blob order, optimizer state alignment, and the
// byte stream behind the parameter hash.
std::vector<std::pair<std::string, Shape>> enumerate_param_shapes(const ModelDims& dims);

inline std::int64_t param_count(const ModelDims& dims) {
    std::int64_t total = 0;
    for (const auto& [name, shape] : enumerate_param_shapes(dims)) total += shape_numel(shape);
    return total;
}

template <typename T>
class ParamStore {
  public:
    static ParamStore zeros(const ModelDims& dims) {
        ParamStore s;
        for (auto& [name, shape] : enumerate_param_shapes(dims)) {
            s.names_.push_back(name);
            s.tensors_.emplace_back(shape, T(0));
            s.index_[name] = s.names_.size() - 1;
        }
        return s;
    }

    // Truncated normal (std 0.02, cut at 2 std) for weights and embeddings;
    // layer-norm gains start at 1, every bias and the norm offsets at 0.
    static ParamStore init(const ModelDims& dims, RngStream& rng) {
        ParamStore s = zeros(dims);
        for (std::size_t i = 0; i < s.names_.size(); ++i) {
            const std::string& n = s.names_[i];
            const bool is_bias = n.ends_with(".b") || n.ends_with("bias");
            const bool is_gain = n.ends_with(".g");
            if (is_gain) {
                for (auto& v : s.tensors_[i].data) v = T(1);
            } else if (!is_bias) {
                for (auto& v : s.tensors_[i].data) v = static_cast<T>(rng.truncated_normal(0.02));
            }
        }
        return s;
    }

    std::size_t count() const { return tensors_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    Tensor<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw NotFoundError("params: no tensor named " + name);
        return tensors_[it->second];
    }
    const Tensor<T>& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw NotFoundError("params: no tensor named " + name);
        return tensors_[it->second];
    }
    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Tensor<T>& by_index(std::size_t i) { return tensors_[i]; }
    const Tensor<T>& by_index(std::size_t i) const { return tensors_[i]; }
    const std::string& name_of(std::size_t i) const { return names_[i]; }

    std::int64_t total_params() const {
        std::int64_t n = 0;
        for (const auto& t : tensors_) n += t.size();
        return n;
    }

    // Order-sensitive fingerprint over names and raw value bytes.
    std::uint64_t hash() const {
        Fnv1a h;
        for (std::size_t i = 0; i < tensors_.size(); ++i) {
            h.update_string(names_[i]);
            h.update(tensors_[i].data.data(), tensors_[i].data.size() * sizeof(T));
        }
        return h.digest();
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (std::size_t i = 0; i < tensors_.size(); ++i) {
            out.names_.push_back(names_[i]);
            out.tensors_.push_back(tensors_[i].template cast<U>());
            out.index_[names_[i]] = i;
        }
        return out;
    }

  private:
    template <typename U>
    friend class ParamStore;

    std::vector<std::string> names_;
    std::vector<Tensor<T>> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Flat views in enumeration order, for finite-difference harnesses.
template <typename T>
std::vector<double> pack_params(const ParamStore<T>& s) {
    std::vector<double> theta;
    theta.reserve(static_cast<std::size_t>(s.total_params()));
    for (std::size_t i = 0; i < s.count(); ++i) {
        for (const T v : s.by_index(i).data) theta.push_back(static_cast<double>(v));
    }
    return theta;
}

template <typename T>
void unpack_params(ParamStore<T>& s, const std::vector<double>& theta) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < s.count(); ++i) {
        for (T& v : s.by_index(i).data) v = static_cast<T>(theta[off++]);
    }
    if (off != theta.size()) {
        throw DimensionError("unpack_params: vector length " + std::to_string(theta.size()) +
                             " does not match " + std::to_string(off) + " parameters");
    }
}

}  // namespace fomo
