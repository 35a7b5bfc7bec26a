#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fomo/config.hpp"
#include "fomo/error.hpp"
#include "fomo/model.hpp"
#include "fomo/tensor.hpp"

namespace fomo {

struct LrSchedule {
    int warmup_steps = 0;
    int total_steps = 1;
    double base_lr = 1.5e-4;
    double min_lr = 0.0;
};

// Linear warmup 0 -> base_lr, then cosine decay base_lr -> min_lr.
inline double lr_at(int step, const LrSchedule& s) {
    if (s.warmup_steps >= s.total_steps) {
        throw ValidationError("lr_at: warmup_steps must be smaller than total_steps");
    }
    if (step < 0 || step > s.total_steps) {
        throw ValidationError("lr_at: step " + std::to_string(step) + " outside [0, " +
                              std::to_string(s.total_steps) + "]");
    }
    if (step < s.warmup_steps) {
        return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
    }
    const double progress = static_cast<double>(step - s.warmup_steps) /
                            static_cast<double>(s.total_steps - s.warmup_steps);
    return s.min_lr + 0.5 * (s.base_lr - s.min_lr) * (1.0 + std::cos(progress * 3.14159265358979323846));
}

// Gradient sums over an accumulation window, aligned with ParamStore order.
// add() performs one ordered elementwise addition per parameter, so the sum
// over V micro-batches is exactly sum_v grad_v in arrival order.
template <typename T>
class AccumulationBuffer {
  public:
    explicit AccumulationBuffer(const ParamStore<T>& params) {
        sums_.reserve(params.count());
        for (std::size_t i = 0; i < params.count(); ++i) {
            sums_.emplace_back(params.by_index(i).shape, T(0));
        }
    }

    void add(const std::vector<Tensor<T>>& grads) {
        if (grads.size() != sums_.size()) {
            throw ContractError("accumulate: got " + std::to_string(grads.size()) +
                                " gradients for " + std::to_string(sums_.size()) + " parameters");
        }
        for (std::size_t i = 0; i < sums_.size(); ++i) {
            if (!same_shape(grads[i], sums_[i])) {
                throw ContractError("accumulate: gradient shape mismatch at parameter " +
                                    std::to_string(i));
            }
            T* dst = sums_[i].data.data();
            const T* src = grads[i].data.data();
            for (std::size_t k = 0; k < sums_[i].data.size(); ++k) dst[k] += src[k];
        }
        ++count_;
    }

    void scale(T factor) {
        for (auto& t : sums_)
            for (auto& v : t.data) v *= factor;
    }

    void reset() {
        for (auto& t : sums_)
            for (auto& v : t.data) v = T(0);
        count_ = 0;
    }

    int count() const { return count_; }
    const std::vector<Tensor<T>>& sums() const { return sums_; }
    std::vector<Tensor<T>>& sums() { return sums_; }

    double global_norm() const {
        double ss = 0.0;
        for (const auto& t : sums_)
            for (const auto& v : t.data) ss += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(ss);
    }

  private:
    std::vector<Tensor<T>> sums_;
    int count_ = 0;
};

// AdamW with decoupled weight decay and bias-corrected moments. Gradient
// buffers are owned by the caller; moments mirror parameter shapes.
template <typename T>
class AdamW {
  public:
    AdamW(const ParamStore<T>& params, const OptimizerConfig& cfg) : cfg_(cfg) {
        m_.reserve(params.count());
        v_.reserve(params.count());
        for (std::size_t i = 0; i < params.count(); ++i) {
            m_.emplace_back(params.by_index(i).shape, T(0));
            v_.emplace_back(params.by_index(i).shape, T(0));
        }
    }

    void step(ParamStore<T>& params, const std::vector<Tensor<T>>& grads, double lr) {
        if (grads.size() != params.count()) {
            throw ContractError("adamw: gradient count mismatch");
        }
        ++t_;
        const double b1 = cfg_.beta1, b2 = cfg_.beta2;
        const double bc1 = 1.0 - std::pow(b1, t_);
        const double bc2 = 1.0 - std::pow(b2, t_);
        for (std::size_t i = 0; i < params.count(); ++i) {
            Tensor<T>& p = params.by_index(i);
            const Tensor<T>& g = grads[i];
            if (!same_shape(p, g)) {
                throw ContractError("adamw: shape mismatch for " + params.name_of(i));
            }
            if (!all_finite(g)) {
                throw TrainingError("adamw: non-finite gradient for " + params.name_of(i));
            }
            T* pm = m_[i].data.data();
            T* pv = v_[i].data.data();
            T* pp = p.data.data();
            const T* pg = g.data.data();
            for (std::size_t k = 0; k < p.data.size(); ++k) {
                pm[k] = static_cast<T>(b1 * pm[k] + (1.0 - b1) * pg[k]);
                pv[k] = static_cast<T>(b2 * pv[k] + (1.0 - b2) * pg[k] * pg[k]);
                const double mhat = static_cast<double>(pm[k]) / bc1;
                const double vhat = static_cast<double>(pv[k]) / bc2;
                const double update = mhat / (std::sqrt(vhat) + cfg_.eps) +
                                      cfg_.weight_decay * static_cast<double>(pp[k]);
                pp[k] = static_cast<T>(pp[k] - lr * update);
            }
        }
    }

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }
    std::vector<Tensor<T>>& first_moments() { return m_; }
    std::vector<Tensor<T>>& second_moments() { return v_; }
    const std::vector<Tensor<T>>& first_moments() const { return m_; }
    const std::vector<Tensor<T>>& second_moments() const { return v_; }

  private:
    OptimizerConfig cfg_;
    std::vector<Tensor<T>> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace fomo
