#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fomo/error.hpp"

namespace fomo {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

// Dense row-major tensor. The scalar type is a template parameter: float for
// training, double for every verification path.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(Shape s, T fill = T(0))
        : shape(std::move(s)), data(static_cast<std::size_t>(shape_numel(shape)), fill) {}

    Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
            throw DimensionError("Tensor: data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
        }
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    bool is_scalar() const { return size() == 1; }

    std::int64_t rows() const {
        if (shape.size() != 2) throw DimensionError("Tensor: rows() requires rank 2, got " + shape_str(shape));
        return shape[0];
    }
    std::int64_t cols() const {
        if (shape.size() != 2) throw DimensionError("Tensor: cols() requires rank 2, got " + shape_str(shape));
        return shape[1];
    }

    T& at(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * shape[1] + c)]; }
    T at(std::int64_t r, std::int64_t c) const { return data[static_cast<std::size_t>(r * shape[1] + c)]; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (const T v : t.data) {
        if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
}

template <typename T>
bool same_shape(const Tensor<T>& a, const Tensor<T>& b) {
    return a.shape == b.shape;
}

}  // namespace fomo
