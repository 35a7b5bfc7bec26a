#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "fomo/error.hpp"
#include "fomo/kernels.hpp"
#include "fomo/tensor.hpp"

namespace fomo {

// Handle into a Graph's tape.
struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in construction order, which is also
// a topological order, so backward() is a single reverse sweep visiting each
// node once. Gradients accumulate additively; every parent contribution is
// materialized first and then added with a single vectorized update, which
// keeps accumulation commutative at the bit level.
template <typename T>
class Graph {
  public:
    using i64 = std::int64_t;

    struct Options {
        bool check_finite = false;  // scan every primitive output for NaN/Inf
    };

    Graph() = default;
    explicit Graph(Options opt) : opt_(opt) {}

    std::size_t node_count() const { return nodes_.size(); }

    Var leaf(Tensor<T> value, bool requires_grad = false) {
        return push(std::move(value), requires_grad, {});
    }

    const Tensor<T>& value(Var v) const { return node(v).value; }

    // Gradient of the last backward() root w.r.t. v; zeros if v was not
    // reached.
    Tensor<T> grad(Var v) const {
        const Node& n = node(v);
        if (n.grad.size() == 0) return Tensor<T>(n.value.shape, T(0));
        return n.grad;
    }

    bool requires_grad(Var v) const { return node(v).requires_grad; }

    void backward(Var root) {
        Node& r = node(root);
        if (!r.value.is_scalar()) {
            throw ContractError("backward: root must be scalar, got " + shape_str(r.value.shape));
        }
        ensure_grad(r);
        r.grad.data[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            Node& n = *it;
            if (n.grad.size() == 0 || !n.backward) continue;
            n.backward(n.grad);
        }
    }

    // ---- primitives -------------------------------------------------------

    Var matmul(Var a, Var b) {
        const Tensor<T>& ta = value(a);
        const Tensor<T>& tb = value(b);
        if (ta.shape.size() != 2 || tb.shape.size() != 2 || ta.shape[1] != tb.shape[0]) {
            throw DimensionError("matmul: incompatible shapes " + shape_str(ta.shape) + " and " +
                                 shape_str(tb.shape));
        }
        const i64 m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
        Tensor<T> out({m, n});
        kernels::matmul(ta.data.data(), tb.data.data(), out.data.data(), m, k, n);
        return push(std::move(out), requires_grad(a) || requires_grad(b),
                    [this, a, b, m, k, n](const Tensor<T>& g) {
                        if (requires_grad(a)) {
                            Tensor<T> da({m, k});
                            kernels::matmul_nt(g.data.data(), value(b).data.data(), da.data.data(), m, n, k);
                            accumulate(a, da);
                        }
                        if (requires_grad(b)) {
                            Tensor<T> db({k, n});
                            kernels::matmul_tn(value(a).data.data(), g.data.data(), db.data.data(), m, k, n);
                            accumulate(b, db);
                        }
                    });
    }

    Var add(Var a, Var b) {
        const Tensor<T>& ta = value(a);
        const Tensor<T>& tb = value(b);
        if (!same_shape(ta, tb)) {
            throw DimensionError("add: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
        }
        Tensor<T> out(ta.shape);
        kernels::add(ta.data.data(), tb.data.data(), out.data.data(), ta.size());
        return push(std::move(out), requires_grad(a) || requires_grad(b), [this, a, b](const Tensor<T>& g) {
            if (requires_grad(a)) accumulate(a, g);
            if (requires_grad(b)) accumulate(b, g);
        });
    }

    Var scale(Var x, T s) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out(tx.shape);
        kernels::scale(tx.data.data(), s, out.data.data(), tx.size());
        return push(std::move(out), requires_grad(x), [this, x, s](const Tensor<T>& g) {
            Tensor<T> dx(g.shape);
            kernels::scale(g.data.data(), s, dx.data.data(), g.size());
            accumulate(x, dx);
        });
    }

    Var sub(Var a, Var b) { return add(a, scale(b, T(-1))); }

    Var mul(Var a, Var b) {
        const Tensor<T>& ta = value(a);
        const Tensor<T>& tb = value(b);
        if (!same_shape(ta, tb)) {
            throw DimensionError("mul: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
        }
        Tensor<T> out(ta.shape);
        kernels::hadamard(ta.data.data(), tb.data.data(), out.data.data(), ta.size());
        return push(std::move(out), requires_grad(a) || requires_grad(b), [this, a, b](const Tensor<T>& g) {
            if (requires_grad(a)) {
                Tensor<T> da(g.shape);
                kernels::hadamard(g.data.data(), value(b).data.data(), da.data.data(), g.size());
                accumulate(a, da);
            }
            if (requires_grad(b)) {
                Tensor<T> db(g.shape);
                kernels::hadamard(g.data.data(), value(a).data.data(), db.data.data(), g.size());
                accumulate(b, db);
            }
        });
    }

    // x[r,c] + v[c] broadcast over rows.
    Var add_rowvec(Var x, Var v) {
        const Tensor<T>& tx = value(x);
        const Tensor<T>& tv = value(v);
        if (tx.shape.size() != 2 || tv.shape.size() != 1 || tv.shape[0] != tx.shape[1]) {
            throw DimensionError("add_rowvec: shapes " + shape_str(tx.shape) + " and " + shape_str(tv.shape));
        }
        Tensor<T> out(tx.shape);
        kernels::add_rowvec(tx.data.data(), tv.data.data(), out.data.data(), tx.shape[0], tx.shape[1]);
        return push(std::move(out), requires_grad(x) || requires_grad(v), [this, x, v](const Tensor<T>& g) {
            if (requires_grad(x)) accumulate(x, g);
            if (requires_grad(v)) {
                Tensor<T> dv({g.shape[1]});
                kernels::col_sums(g.data.data(), dv.data.data(), g.shape[0], g.shape[1]);
                accumulate(v, dv);
            }
        });
    }

    Var gelu(Var x) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out(tx.shape);
        kernels::gelu(tx.data.data(), out.data.data(), tx.size());
        return push(std::move(out), requires_grad(x), [this, x](const Tensor<T>& g) {
            Tensor<T> dx(g.shape);
            kernels::gelu_backward(value(x).data.data(), g.data.data(), dx.data.data(), g.size());
            accumulate(x, dx);
        });
    }

    // Softmax along the last axis.
    Var softmax(Var x) {
        const Tensor<T>& tx = value(x);
        if (tx.shape.empty() || tx.shape.back() == 0 || tx.size() == 0) {
            throw DimensionError("softmax: empty last axis in " + shape_str(tx.shape));
        }
        const i64 cols = tx.shape.back();
        const i64 rows = tx.size() / cols;
        Tensor<T> out(tx.shape);
        kernels::softmax_rows(tx.data.data(), out.data.data(), rows, cols);
        const Var self{static_cast<std::int32_t>(nodes_.size())};
        return push(std::move(out), requires_grad(x), [this, x, self, rows, cols](const Tensor<T>& g) {
            Tensor<T> dx(g.shape);
            kernels::softmax_backward_rows(value(self).data.data(), g.data.data(), dx.data.data(), rows, cols);
            accumulate(x, dx);
        });
    }

    Var layer_norm(Var x, Var gain, Var bias, T eps) {
        const Tensor<T>& tx = value(x);
        const Tensor<T>& tg = value(gain);
        const Tensor<T>& tb = value(bias);
        if (tx.shape.empty() || tx.shape.back() == 0 || tx.size() == 0) {
            throw DimensionError("layer_norm: empty last axis in " + shape_str(tx.shape));
        }
        const i64 cols = tx.shape.back();
        if (tg.size() != cols || tb.size() != cols) {
            throw DimensionError("layer_norm: gain/bias length must equal " + std::to_string(cols));
        }
        if (!(eps > T(0))) throw ValidationError("layer_norm: eps must be positive");
        const i64 rows = tx.size() / cols;
        Tensor<T> out(tx.shape);
        auto mean = std::make_shared<std::vector<T>>(rows);
        auto rstd = std::make_shared<std::vector<T>>(rows);
        kernels::layer_norm_rows(tx.data.data(), tg.data.data(), tb.data.data(), eps, out.data.data(),
                                 mean->data(), rstd->data(), rows, cols);
        return push(std::move(out), requires_grad(x) || requires_grad(gain) || requires_grad(bias),
                    [this, x, gain, bias, mean, rstd, rows, cols](const Tensor<T>& g) {
                        Tensor<T> dx(value(x).shape);
                        Tensor<T> dgain({cols});
                        Tensor<T> dbias({cols});
                        kernels::layer_norm_backward_rows(value(x).data.data(), value(gain).data.data(),
                                                          mean->data(), rstd->data(), g.data.data(),
                                                          dx.data.data(), dgain.data.data(), dbias.data.data(),
                                                          rows, cols);
                        if (requires_grad(x)) accumulate(x, dx);
                        if (requires_grad(gain)) accumulate(gain, dgain);
                        if (requires_grad(bias)) accumulate(bias, dbias);
                    });
    }

    Var reshape(Var x, Shape s) {
        const Tensor<T>& tx = value(x);
        if (shape_numel(s) != tx.size()) {
            throw DimensionError("reshape: cannot view " + shape_str(tx.shape) + " as " + shape_str(s));
        }
        Tensor<T> out(std::move(s), tx.data);
        return push(std::move(out), requires_grad(x), [this, x](const Tensor<T>& g) {
            Tensor<T> dx(value(x).shape, g.data);
            accumulate(x, dx);
        });
    }

    Var transpose(Var x) {
        const Tensor<T>& tx = value(x);
        if (tx.shape.size() != 2) throw DimensionError("transpose: rank-2 only, got " + shape_str(tx.shape));
        const i64 r = tx.shape[0], c = tx.shape[1];
        Tensor<T> out({c, r});
        for (i64 i = 0; i < r; ++i)
            for (i64 j = 0; j < c; ++j) out.data[j * r + i] = tx.data[i * c + j];
        return push(std::move(out), requires_grad(x), [this, x, r, c](const Tensor<T>& g) {
            Tensor<T> dx({r, c});
            for (i64 i = 0; i < r; ++i)
                for (i64 j = 0; j < c; ++j) dx.data[i * c + j] = g.data[j * r + i];
            accumulate(x, dx);
        });
    }

    // Select rows of a [r,c] matrix by index; duplicate indices allowed
    // (backward scatter-adds).
    Var gather_rows(Var x, std::vector<i64> idx) {
        const Tensor<T>& tx = value(x);
        if (tx.shape.size() != 2) throw DimensionError("gather_rows: rank-2 only");
        const i64 c = tx.shape[1];
        for (i64 i : idx) {
            if (i < 0 || i >= tx.shape[0]) {
                throw DimensionError("gather_rows: index " + std::to_string(i) + " out of range [0," +
                                     std::to_string(tx.shape[0]) + ")");
            }
        }
        Tensor<T> out({static_cast<i64>(idx.size()), c});
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const T* src = tx.data.data() + idx[r] * c;
            std::copy(src, src + c, out.data.data() + static_cast<i64>(r) * c);
        }
        auto ids = std::make_shared<std::vector<i64>>(std::move(idx));
        return push(std::move(out), requires_grad(x), [this, x, ids, c](const Tensor<T>& g) {
            Tensor<T> dx(value(x).shape, T(0));
            for (std::size_t r = 0; r < ids->size(); ++r) {
                T* dst = dx.data.data() + (*ids)[r] * c;
                const T* src = g.data.data() + static_cast<i64>(r) * c;
                for (i64 j = 0; j < c; ++j) dst[j] += src[j];
            }
            accumulate(x, dx);
        });
    }

    // Place rows of x into a zero [out_rows,c] matrix at distinct indices.
    Var scatter_rows(Var x, std::vector<i64> idx, i64 out_rows) {
        const Tensor<T>& tx = value(x);
        if (tx.shape.size() != 2) throw DimensionError("scatter_rows: rank-2 only");
        if (static_cast<i64>(idx.size()) != tx.shape[0]) {
            throw DimensionError("scatter_rows: index count " + std::to_string(idx.size()) + " != rows " +
                                 std::to_string(tx.shape[0]));
        }
        const i64 c = tx.shape[1];
        std::vector<bool> seen(static_cast<std::size_t>(out_rows), false);
        for (i64 i : idx) {
            if (i < 0 || i >= out_rows) throw DimensionError("scatter_rows: index out of range");
            if (seen[static_cast<std::size_t>(i)]) throw ContractError("scatter_rows: duplicate index");
            seen[static_cast<std::size_t>(i)] = true;
        }
        Tensor<T> out({out_rows, c}, T(0));
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const T* src = tx.data.data() + static_cast<i64>(r) * c;
            std::copy(src, src + c, out.data.data() + idx[r] * c);
        }
        auto ids = std::make_shared<std::vector<i64>>(std::move(idx));
        return push(std::move(out), requires_grad(x), [this, x, ids, c](const Tensor<T>& g) {
            Tensor<T> dx(value(x).shape);
            for (std::size_t r = 0; r < ids->size(); ++r) {
                const T* src = g.data.data() + (*ids)[r] * c;
                std::copy(src, src + c, dx.data.data() + static_cast<i64>(r) * c);
            }
            accumulate(x, dx);
        });
    }

    // Repeat a length-c vector as n rows.
    Var broadcast_row(Var v, i64 n) {
        const Tensor<T>& tv = value(v);
        if (tv.shape.size() != 1) throw DimensionError("broadcast_row: rank-1 only");
        const i64 c = tv.shape[0];
        Tensor<T> out({n, c});
        for (i64 i = 0; i < n; ++i) std::copy(tv.data.begin(), tv.data.end(), out.data.begin() + i * c);
        return push(std::move(out), requires_grad(v), [this, v, c](const Tensor<T>& g) {
            Tensor<T> dv({c});
            kernels::col_sums(g.data.data(), dv.data.data(), g.shape[0], g.shape[1]);
            accumulate(v, dv);
        });
    }

    Var concat_rows(const std::vector<Var>& xs) {
        if (xs.empty()) throw ContractError("concat_rows: empty input list");
        const i64 c = value(xs[0]).shape[1];
        i64 rows = 0;
        bool rg = false;
        for (Var x : xs) {
            const Tensor<T>& tx = value(x);
            if (tx.shape.size() != 2 || tx.shape[1] != c) throw DimensionError("concat_rows: column mismatch");
            rows += tx.shape[0];
            rg = rg || requires_grad(x);
        }
        Tensor<T> out({rows, c});
        i64 off = 0;
        for (Var x : xs) {
            const Tensor<T>& tx = value(x);
            std::copy(tx.data.begin(), tx.data.end(), out.data.begin() + off * c);
            off += tx.shape[0];
        }
        auto parts = std::make_shared<std::vector<Var>>(xs);
        return push(std::move(out), rg, [this, parts, c](const Tensor<T>& g) {
            i64 off = 0;
            for (Var x : *parts) {
                const i64 r = value(x).shape[0];
                if (requires_grad(x)) {
                    Tensor<T> dx({r, c});
                    std::copy(g.data.begin() + off * c, g.data.begin() + (off + r) * c, dx.data.begin());
                    accumulate(x, dx);
                }
                off += r;
            }
        });
    }

    Var reduce_sum(Var x) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out({1});
        out.data[0] = kernels::sum_all(tx.data.data(), tx.size());
        return push(std::move(out), requires_grad(x), [this, x](const Tensor<T>& g) {
            Tensor<T> dx(value(x).shape, g.data[0]);
            accumulate(x, dx);
        });
    }

    Var reduce_mean(Var x) {
        const Tensor<T>& tx = value(x);
        if (tx.size() == 0) throw DimensionError("reduce_mean: empty tensor");
        const T inv = T(1) / T(tx.size());
        Tensor<T> out({1});
        out.data[0] = kernels::sum_all(tx.data.data(), tx.size()) * inv;
        return push(std::move(out), requires_grad(x), [this, x, inv](const Tensor<T>& g) {
            Tensor<T> dx(value(x).shape, g.data[0] * inv);
            accumulate(x, dx);
        });
    }

    // Fused multi-head self-attention. Tokens attend only within their
    // segment (one segment per sample); segments are index lists into the
    // token rows and must partition [0, rows).
    Var attention(Var q, Var k, Var v, i64 heads, const std::vector<std::vector<i64>>& segments) {
        const Tensor<T>& tq = value(q);
        const Tensor<T>& tk = value(k);
        const Tensor<T>& tv = value(v);
        if (!same_shape(tq, tk) || !same_shape(tq, tv) || tq.shape.size() != 2) {
            throw DimensionError("attention: q/k/v must share a rank-2 shape");
        }
        const i64 rows = tq.shape[0];
        const i64 d = tq.shape[1];
        if (heads < 1 || d % heads != 0) {
            throw DimensionError("attention: width " + std::to_string(d) + " not divisible by heads " +
                                 std::to_string(heads));
        }
        validate_partition(segments, rows);
        Tensor<T> out(tq.shape, T(0));
        auto probs = std::make_shared<std::vector<std::vector<T>>>();
        auto segs = std::make_shared<std::vector<std::vector<i64>>>(segments);
        for (const auto& seg : *segs) {
            const i64 t = static_cast<i64>(seg.size());
            if (t == 0) {
                probs->emplace_back();
                continue;
            }
            std::vector<T> bq(t * d), bk(t * d), bv(t * d), bo(t * d);
            gather_block(tq, seg, bq.data(), d);
            gather_block(tk, seg, bk.data(), d);
            gather_block(tv, seg, bv.data(), d);
            std::vector<T> p(static_cast<std::size_t>(heads * t * t));
            kernels::attention_forward(bq.data(), bk.data(), bv.data(), bo.data(), p.data(), t, d, heads);
            scatter_block(bo.data(), seg, out, d);
            probs->push_back(std::move(p));
        }
        const bool rg = requires_grad(q) || requires_grad(k) || requires_grad(v);
        return push(std::move(out), rg, [this, q, k, v, heads, d, probs, segs](const Tensor<T>& g) {
            Tensor<T> dq(value(q).shape, T(0));
            Tensor<T> dk(value(k).shape, T(0));
            Tensor<T> dv(value(v).shape, T(0));
            for (std::size_t si = 0; si < segs->size(); ++si) {
                const auto& seg = (*segs)[si];
                const i64 t = static_cast<i64>(seg.size());
                if (t == 0) continue;
                std::vector<T> bq(t * d), bk(t * d), bv(t * d), bg(t * d);
                gather_block(value(q), seg, bq.data(), d);
                gather_block(value(k), seg, bk.data(), d);
                gather_block(value(v), seg, bv.data(), d);
                gather_block(g, seg, bg.data(), d);
                std::vector<T> bdq(t * d), bdk(t * d), bdv(t * d);
                std::vector<T> ds(static_cast<std::size_t>(heads * t * t));
                kernels::attention_backward(bq.data(), bk.data(), bv.data(), (*probs)[si].data(), bg.data(),
                                            bdq.data(), bdk.data(), bdv.data(), ds.data(), t, d, heads);
                scatter_block(bdq.data(), seg, dq, d);
                scatter_block(bdk.data(), seg, dk, d);
                scatter_block(bdv.data(), seg, dv, d);
            }
            if (requires_grad(q)) accumulate(q, dq);
            if (requires_grad(k)) accumulate(k, dk);
            if (requires_grad(v)) accumulate(v, dv);
        });
    }

    // Mean cross-entropy of row softmax against integer labels.
    Var cross_entropy(Var logits, std::vector<i64> labels) {
        const Tensor<T>& tz = value(logits);
        if (tz.shape.size() != 2) throw DimensionError("cross_entropy: logits must be rank 2");
        const i64 n = tz.shape[0], c = tz.shape[1];
        if (static_cast<i64>(labels.size()) != n) throw DimensionError("cross_entropy: label count mismatch");
        for (i64 y : labels) {
            if (y < 0 || y >= c) throw ValidationError("cross_entropy: label out of range");
        }
        Tensor<T> out({1}, T(0));
        T loss = T(0);
        for (i64 i = 0; i < n; ++i) {
            const T* zi = tz.data.data() + i * c;
            T mx = zi[0];
            for (i64 j = 1; j < c; ++j) mx = zi[j] > mx ? zi[j] : mx;
            T lse = T(0);
            for (i64 j = 0; j < c; ++j) lse += std::exp(zi[j] - mx);
            loss += std::log(lse) + mx - zi[labels[static_cast<std::size_t>(i)]];
        }
        out.data[0] = loss / T(n);
        auto labs = std::make_shared<std::vector<i64>>(std::move(labels));
        return push(std::move(out), requires_grad(logits), [this, logits, labs, n, c](const Tensor<T>& g) {
            const Tensor<T>& z = value(logits);
            Tensor<T> dz({n, c});
            kernels::softmax_rows(z.data.data(), dz.data.data(), n, c);
            const T s = g.data[0] / T(n);
            for (i64 i = 0; i < n; ++i) {
                dz.data[i * c + (*labs)[static_cast<std::size_t>(i)]] -= T(1);
                for (i64 j = 0; j < c; ++j) dz.data[i * c + j] *= s;
            }
            accumulate(logits, dz);
        });
    }

    // Mean binary cross-entropy with logits against {0,1} targets.
    Var bce_with_logits(Var logits, Tensor<T> targets) {
        const Tensor<T>& tz = value(logits);
        if (!same_shape(tz, targets)) throw DimensionError("bce_with_logits: shape mismatch");
        const i64 n = tz.size();
        if (n == 0) throw DimensionError("bce_with_logits: empty input");
        Tensor<T> out({1}, T(0));
        T loss = T(0);
        for (i64 i = 0; i < n; ++i) {
            const T z = tz.data[i];
            const T t = targets.data[i];
            loss += std::max(z, T(0)) - z * t + std::log1p(std::exp(-std::abs(z)));
        }
        out.data[0] = loss / T(n);
        auto tg = std::make_shared<Tensor<T>>(std::move(targets));
        return push(std::move(out), requires_grad(logits), [this, logits, tg, n](const Tensor<T>& g) {
            const Tensor<T>& z = value(logits);
            Tensor<T> dz(z.shape);
            const T s = g.data[0] / T(n);
            for (i64 i = 0; i < n; ++i) {
                const T sig = T(1) / (T(1) + std::exp(-z.data[i]));
                dz.data[i] = s * (sig - tg->data[i]);
            }
            accumulate(logits, dz);
        });
    }

  private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // empty until reached by backward
        bool requires_grad = false;
        std::function<void(const Tensor<T>&)> backward;
    };

    Options opt_;
    std::vector<Node> nodes_;

    Node& node(Var v) {
        if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
            throw ContractError("Graph: invalid Var handle");
        }
        return nodes_[static_cast<std::size_t>(v.id)];
    }
    const Node& node(Var v) const {
        if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
            throw ContractError("Graph: invalid Var handle");
        }
        return nodes_[static_cast<std::size_t>(v.id)];
    }

    Var push(Tensor<T> value, bool requires_grad, std::function<void(const Tensor<T>&)> backward) {
        if (opt_.check_finite && !all_finite(value)) {
            throw TrainingError("Graph: non-finite value produced by primitive");
        }
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        if (requires_grad) n.backward = std::move(backward);
        nodes_.push_back(std::move(n));
        return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    void ensure_grad(Node& n) {
        if (n.grad.size() == 0) n.grad = Tensor<T>(n.value.shape, T(0));
    }

    // One vectorized += per contribution.
    void accumulate(Var v, const Tensor<T>& contribution) {
        Node& n = node(v);
        if (!n.requires_grad) return;
        ensure_grad(n);
        kernels::axpy(T(1), contribution.data.data(), n.grad.data.data(), n.grad.size());
    }

    static void validate_partition(const std::vector<std::vector<i64>>& segments, i64 rows) {
        std::vector<bool> seen(static_cast<std::size_t>(rows), false);
        i64 total = 0;
        for (const auto& seg : segments) {
            for (i64 i : seg) {
                if (i < 0 || i >= rows || seen[static_cast<std::size_t>(i)]) {
                    throw ContractError("attention: segments must partition the token rows");
                }
                seen[static_cast<std::size_t>(i)] = true;
                ++total;
            }
        }
        if (total != rows) throw ContractError("attention: segments must cover every token row");
    }

    static void gather_block(const Tensor<T>& src, const std::vector<i64>& idx, T* dst, i64 c) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const T* s = src.data.data() + idx[r] * c;
            std::copy(s, s + c, dst + static_cast<i64>(r) * c);
        }
    }

    static void scatter_block(const T* src, const std::vector<i64>& idx, Tensor<T>& dst, i64 c) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const T* s = src + static_cast<i64>(r) * c;
            std::copy(s, s + c, dst.data.data() + idx[r] * c);
        }
    }
};

}  // namespace fomo
