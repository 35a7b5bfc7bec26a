#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

// OpenMP-parallel numeric kernels. Every output element is produced by
// exactly one thread with a serial inner loop, so results are bit-identical
// for any thread count. Floating-point reductions never use the OpenMP
// reduction clause. Small problems stay serial via the if() guards.

namespace fomo::kernels {

using i64 = std::int64_t;

inline constexpr i64 kParallelCutoff = 1 << 13;

// c[m,n] = a[m,k] @ b[k,n]
template <typename T>
void matmul(const T* a, const T* b, T* c, i64 m, i64 k, i64 n) {
#pragma omp parallel for if (m * k * n > kParallelCutoff)
    for (i64 i = 0; i < m; ++i) {
        T* ci = c + i * n;
        for (i64 j = 0; j < n; ++j) ci[j] = T(0);
        const T* ai = a + i * k;
        for (i64 p = 0; p < k; ++p) {
            const T aip = ai[p];
            const T* bp = b + p * n;
            for (i64 j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

// c[m,n] = a[m,k] @ b[n,k]^T
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, i64 m, i64 k, i64 n) {
#pragma omp parallel for if (m * k * n > kParallelCutoff)
    for (i64 i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        T* ci = c + i * n;
        for (i64 j = 0; j < n; ++j) {
            const T* bj = b + j * k;
            T acc = T(0);
            for (i64 p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] = acc;
        }
    }
}

// c[k,n] = a[m,k]^T @ b[m,n]
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, i64 m, i64 k, i64 n) {
#pragma omp parallel for if (m * k * n > kParallelCutoff)
    for (i64 p = 0; p < k; ++p) {
        T* cp = c + p * n;
        for (i64 j = 0; j < n; ++j) cp[j] = T(0);
        for (i64 i = 0; i < m; ++i) {
            const T aip = a[i * k + p];
            const T* bi = b + i * n;
            for (i64 j = 0; j < n; ++j) cp[j] += aip * bi[j];
        }
    }
}

template <typename T>
void add(const T* a, const T* b, T* c, i64 n) {
#pragma omp parallel for if (n > kParallelCutoff)
    for (i64 i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

template <typename T>
void axpy(T alpha, const T* x, T* y, i64 n) {
#pragma omp parallel for if (n > kParallelCutoff)
    for (i64 i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale(const T* x, T s, T* y, i64 n) {
#pragma omp parallel for if (n > kParallelCutoff)
    for (i64 i = 0; i < n; ++i) y[i] = s * x[i];
}

template <typename T>
void hadamard(const T* a, const T* b, T* c, i64 n) {
#pragma omp parallel for if (n > kParallelCutoff)
    for (i64 i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

// y[r,c] = x[r,c] + v[c]
template <typename T>
void add_rowvec(const T* x, const T* v, T* y, i64 rows, i64 cols) {
#pragma omp parallel for if (rows * cols > kParallelCutoff)
    for (i64 i = 0; i < rows; ++i) {
        const T* xi = x + i * cols;
        T* yi = y + i * cols;
        for (i64 j = 0; j < cols; ++j) yi[j] = xi[j] + v[j];
    }
}

// out[c] = sum over rows of x[r,c]; serial accumulation per column.
template <typename T>
void col_sums(const T* x, T* out, i64 rows, i64 cols) {
#pragma omp parallel for if (rows * cols > kParallelCutoff)
    for (i64 j = 0; j < cols; ++j) {
        T acc = T(0);
        for (i64 i = 0; i < rows; ++i) acc += x[i * cols + j];
        out[j] = acc;
    }
}

// Serial sum in index order; callers rely on a fixed reduction order.
template <typename T>
T sum_all(const T* x, i64 n) {
    T acc = T(0);
    for (i64 i = 0; i < n; ++i) acc += x[i];
    return acc;
}

// Numerically stable row softmax (max-shifted).
template <typename T>
void softmax_rows(const T* x, T* y, i64 rows, i64 cols) {
#pragma omp parallel for if (rows * cols > kParallelCutoff)
    for (i64 i = 0; i < rows; ++i) {
        const T* xi = x + i * cols;
        T* yi = y + i * cols;
        T mx = xi[0];
        for (i64 j = 1; j < cols; ++j) mx = xi[j] > mx ? xi[j] : mx;
        T denom = T(0);
        for (i64 j = 0; j < cols; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            denom += yi[j];
        }
        const T inv = T(1) / denom;
        for (i64 j = 0; j < cols; ++j) yi[j] *= inv;
    }
}

// dx = y * (dy - sum(dy * y)) per row.
template <typename T>
void softmax_backward_rows(const T* y, const T* dy, T* dx, i64 rows, i64 cols) {
#pragma omp parallel for if (rows * cols > kParallelCutoff)
    for (i64 i = 0; i < rows; ++i) {
        const T* yi = y + i * cols;
        const T* gi = dy + i * cols;
        T* di = dx + i * cols;
        T dot = T(0);
        for (i64 j = 0; j < cols; ++j) dot += gi[j] * yi[j];
        for (i64 j = 0; j < cols; ++j) di[j] = yi[j] * (gi[j] - dot);
    }
}

// Per-row normalization with affine: y = gain * (x - mean) * rstd + bias.
// mean and rstd are saved for the backward pass.
template <typename T>
void layer_norm_rows(const T* x, const T* gain, const T* bias, T eps, T* y, T* mean, T* rstd,
                     i64 rows, i64 cols) {
#pragma omp parallel for if (rows * cols > kParallelCutoff)
    for (i64 i = 0; i < rows; ++i) {
        const T* xi = x + i * cols;
        T* yi = y + i * cols;
        T mu = T(0);
        for (i64 j = 0; j < cols; ++j) mu += xi[j];
        mu /= T(cols);
        T var = T(0);
        for (i64 j = 0; j < cols; ++j) {
            const T d = xi[j] - mu;
            var += d * d;
        }
        var /= T(cols);
        const T r = T(1) / std::sqrt(var + eps);
        mean[i] = mu;
        rstd[i] = r;
        for (i64 j = 0; j < cols; ++j) yi[j] = gain[j] * (xi[j] - mu) * r + bias[j];
    }
}

template <typename T>
void layer_norm_backward_rows(const T* x, const T* gain, const T* mean, const T* rstd,
                              const T* dy, T* dx, T* dgain, T* dbias, i64 rows, i64 cols) {
#pragma omp parallel for if (rows * cols > kParallelCutoff)
    for (i64 i = 0; i < rows; ++i) {
        const T* xi = x + i * cols;
        const T* gi = dy + i * cols;
        T* di = dx + i * cols;
        const T mu = mean[i];
        const T r = rstd[i];
        T sum_dxhat = T(0);
        T sum_dxhat_xhat = T(0);
        for (i64 j = 0; j < cols; ++j) {
            const T xhat = (xi[j] - mu) * r;
            const T dxhat = gi[j] * gain[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
        }
        const T inv_c = T(1) / T(cols);
        for (i64 j = 0; j < cols; ++j) {
            const T xhat = (xi[j] - mu) * r;
            const T dxhat = gi[j] * gain[j];
            di[j] = r * (dxhat - inv_c * sum_dxhat - xhat * inv_c * sum_dxhat_xhat);
        }
    }
    // Parameter gradients: serial accumulation per column.
#pragma omp parallel for if (rows * cols > kParallelCutoff)
    for (i64 j = 0; j < cols; ++j) {
        T dg = T(0);
        T db = T(0);
        for (i64 i = 0; i < rows; ++i) {
            const T xhat = (x[i * cols + j] - mean[i]) * rstd[i];
            dg += dy[i * cols + j] * xhat;
            db += dy[i * cols + j];
        }
        dgain[j] = dg;
        dbias[j] = db;
    }
}

// tanh-approximation GELU.
template <typename T>
void gelu(const T* x, T* y, i64 n) {
    const T c = T(0.7978845608028653558798921198687);  // sqrt(2/pi)
    const T a = T(0.044715);
#pragma omp parallel for if (n > kParallelCutoff)
    for (i64 i = 0; i < n; ++i) {
        const T xi = x[i];
        const T u = c * (xi + a * xi * xi * xi);
        y[i] = T(0.5) * xi * (T(1) + std::tanh(u));
    }
}

template <typename T>
void gelu_backward(const T* x, const T* dy, T* dx, i64 n) {
    const T c = T(0.7978845608028653558798921198687);
    const T a = T(0.044715);
#pragma omp parallel for if (n > kParallelCutoff)
    for (i64 i = 0; i < n; ++i) {
        const T xi = x[i];
        const T u = c * (xi + a * xi * xi * xi);
        const T th = std::tanh(u);
        const T sech2 = T(1) - th * th;
        const T du = c * (T(1) + T(3) * a * xi * xi);
        dx[i] = dy[i] * (T(0.5) * (T(1) + th) + T(0.5) * xi * sech2 * du);
    }
}

// Multi-head self-attention over one contiguous block of t tokens.
// q,k,v,out are [t,d]; probs is [h,t,t] storage for the backward pass.
template <typename T>
void attention_forward(const T* q, const T* k, const T* v, T* out, T* probs, i64 t, i64 d, i64 h) {
    const i64 dh = d / h;
    const T scl = T(1) / std::sqrt(T(dh));
#pragma omp parallel for collapse(2) if (h * t * t * dh > kParallelCutoff)
    for (i64 hh = 0; hh < h; ++hh) {
        for (i64 i = 0; i < t; ++i) {
            T* p = probs + (hh * t + i) * t;
            const T* qi = q + i * d + hh * dh;
            // scores
            T mx = -std::numeric_limits<T>::infinity();
            for (i64 j = 0; j < t; ++j) {
                const T* kj = k + j * d + hh * dh;
                T s = T(0);
                for (i64 c = 0; c < dh; ++c) s += qi[c] * kj[c];
                s *= scl;
                p[j] = s;
                mx = s > mx ? s : mx;
            }
            T denom = T(0);
            for (i64 j = 0; j < t; ++j) {
                p[j] = std::exp(p[j] - mx);
                denom += p[j];
            }
            const T inv = T(1) / denom;
            for (i64 j = 0; j < t; ++j) p[j] *= inv;
            // weighted value sum
            T* oi = out + i * d + hh * dh;
            for (i64 c = 0; c < dh; ++c) oi[c] = T(0);
            for (i64 j = 0; j < t; ++j) {
                const T pj = p[j];
                const T* vj = v + j * d + hh * dh;
                for (i64 c = 0; c < dh; ++c) oi[c] += pj * vj[c];
            }
        }
    }
}

// Backward for attention_forward. dscores is [h,t,t] scratch.
template <typename T>
void attention_backward(const T* q, const T* k, const T* v, const T* probs, const T* dout,
                        T* dq, T* dk, T* dv, T* dscores, i64 t, i64 d, i64 h) {
    const i64 dh = d / h;
    const T scl = T(1) / std::sqrt(T(dh));
#pragma omp parallel for collapse(2) if (h * t * t * dh > kParallelCutoff)
    for (i64 hh = 0; hh < h; ++hh) {
        for (i64 i = 0; i < t; ++i) {
            const T* p = probs + (hh * t + i) * t;
            T* ds = dscores + (hh * t + i) * t;
            const T* doi = dout + i * d + hh * dh;
            // dp[j] = dout_i . v_j, then softmax backward within the row
            T dot = T(0);
            for (i64 j = 0; j < t; ++j) {
                const T* vj = v + j * d + hh * dh;
                T dp = T(0);
                for (i64 c = 0; c < dh; ++c) dp += doi[c] * vj[c];
                ds[j] = dp;
                dot += dp * p[j];
            }
            for (i64 j = 0; j < t; ++j) ds[j] = p[j] * (ds[j] - dot);
            // dq_i = scl * sum_j ds[j] k_j
            T* dqi = dq + i * d + hh * dh;
            for (i64 c = 0; c < dh; ++c) dqi[c] = T(0);
            for (i64 j = 0; j < t; ++j) {
                const T dsj = ds[j] * scl;
                const T* kj = k + j * d + hh * dh;
                for (i64 c = 0; c < dh; ++c) dqi[c] += dsj * kj[c];
            }
        }
    }
    // dk_j and dv_j accumulate over queries; parallel over j keeps each
    // output element on a single thread.
#pragma omp parallel for collapse(2) if (h * t * t * dh > kParallelCutoff)
    for (i64 hh = 0; hh < h; ++hh) {
        for (i64 j = 0; j < t; ++j) {
            T* dkj = dk + j * d + hh * dh;
            T* dvj = dv + j * d + hh * dh;
            for (i64 c = 0; c < dh; ++c) {
                dkj[c] = T(0);
                dvj[c] = T(0);
            }
            for (i64 i = 0; i < t; ++i) {
                const T pij = probs[(hh * t + i) * t + j];
                const T dsij = dscores[(hh * t + i) * t + j] * scl;
                const T* qi = q + i * d + hh * dh;
                const T* doi = dout + i * d + hh * dh;
                for (i64 c = 0; c < dh; ++c) {
                    dkj[c] += dsij * qi[c];
                    dvj[c] += pij * doi[c];
                }
            }
        }
    }
}

}  // namespace fomo::kernels
