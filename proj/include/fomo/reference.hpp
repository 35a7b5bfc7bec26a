#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Serial reference implementations, kept deliberately naive. Tests and the
// kernel benchmark compare fomo::kernels against these.

namespace fomo::ref {

using i64 = std::int64_t;

template <typename T>
void matmul(const T* a, const T* b, T* c, i64 m, i64 k, i64 n) {
    for (i64 i = 0; i < m; ++i) {
        for (i64 j = 0; j < n; ++j) {
            T acc = T(0);
            for (i64 p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
    }
}

template <typename T>
void softmax_rows(const T* x, T* y, i64 rows, i64 cols) {
    for (i64 i = 0; i < rows; ++i) {
        T denom = T(0);
        for (i64 j = 0; j < cols; ++j) denom += std::exp(x[i * cols + j]);
        for (i64 j = 0; j < cols; ++j) y[i * cols + j] = std::exp(x[i * cols + j]) / denom;
    }
}

template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T eps, T* y, i64 rows, i64 cols) {
    for (i64 i = 0; i < rows; ++i) {
        T mu = T(0);
        for (i64 j = 0; j < cols; ++j) mu += x[i * cols + j];
        mu /= T(cols);
        T var = T(0);
        for (i64 j = 0; j < cols; ++j) {
            const T d = x[i * cols + j] - mu;
            var += d * d;
        }
        var /= T(cols);
        for (i64 j = 0; j < cols; ++j) {
            y[i * cols + j] = gain[j] * (x[i * cols + j] - mu) / std::sqrt(var + eps) + bias[j];
        }
    }
}

template <typename T>
void gelu(const T* x, T* y, i64 n) {
    const T c = T(0.7978845608028653558798921198687);
    const T a = T(0.044715);
    for (i64 i = 0; i < n; ++i) {
        y[i] = T(0.5) * x[i] * (T(1) + std::tanh(c * (x[i] + a * x[i] * x[i] * x[i])));
    }
}

// Naive three-loop multi-head attention: explicit score matrix, plain
// softmax, explicit weighted sum.
template <typename T>
void attention(const T* q, const T* k, const T* v, T* out, i64 t, i64 d, i64 h) {
    const i64 dh = d / h;
    const T scl = T(1) / std::sqrt(T(dh));
    std::vector<T> scores(static_cast<std::size_t>(t) * t);
    std::vector<T> probs(static_cast<std::size_t>(t) * t);
    for (i64 hh = 0; hh < h; ++hh) {
        for (i64 i = 0; i < t; ++i) {
            for (i64 j = 0; j < t; ++j) {
                T s = T(0);
                for (i64 c = 0; c < dh; ++c) s += q[i * d + hh * dh + c] * k[j * d + hh * dh + c];
                scores[i * t + j] = s * scl;
            }
        }
        softmax_rows(scores.data(), probs.data(), t, t);
        for (i64 i = 0; i < t; ++i) {
            for (i64 c = 0; c < dh; ++c) {
                T acc = T(0);
                for (i64 j = 0; j < t; ++j) acc += probs[i * t + j] * v[j * d + hh * dh + c];
                out[i * d + hh * dh + c] = acc;
            }
        }
    }
}

}  // namespace fomo::ref
