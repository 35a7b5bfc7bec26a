#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fomo/checkpoint.hpp"
#include "fomo/config.hpp"
#include "fomo/error.hpp"
#include "fomo/log.hpp"
#include "fomo/mae.hpp"
#include "fomo/model.hpp"
#include "fomo/optim.hpp"
#include "fomo/registry.hpp"
#include "fomo/sampler.hpp"

namespace fomo {

// Stable sub-seed per consumer so streams stay independent of each other.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct TrainSummary {
    int steps_run = 0;
    double initial_smoothed = 0.0;
    double final_smoothed = 0.0;
    double last_loss = 0.0;
    std::string checkpoint_path;
};

inline RunConfig config_from_checkpoint(const CheckpointData& ck) {
    try {
        const auto meta = nlohmann::json::parse(ck.config_json);
        return RunConfig::from_json_text(meta.at("config").dump());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad config block: ") + e.what());
    }
}

inline int precision_of_checkpoint(const CheckpointData& ck) {
    try {
        return nlohmann::json::parse(ck.config_json).at("precision").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad config block: ") + e.what());
    }
}

template <typename T>
ParamStore<T> params_from_checkpoint(const CheckpointData& ck, const ModelDims& dims) {
    ParamStore<T> store = ParamStore<T>::zeros(dims);
    for (std::size_t i = 0; i < store.count(); ++i) {
        const std::string& name = store.name_of(i);
        Tensor<T> t = blob_tensor<T>(ck.blob(name));
        if (!same_shape(t, store.by_index(i))) {
            throw FormatError("checkpoint: blob " + name + " has shape " + shape_str(t.shape) +
                              ", model wants " + shape_str(store.by_index(i).shape));
        }
        store.by_index(i) = std::move(t);
    }
    return store;
}

// Pretraining driver: sample V micro-batches, run forward/backward on each,
// sum gradients in arrival order, take one AdamW step at the scheduled lr.
template <typename T>
class Trainer {
  public:
    Trainer(RunConfig cfg, BandRegistry registry, std::vector<DatasetSpec> datasets,
            std::ostream* metrics = nullptr)
        : cfg_(std::move(cfg)),
          registry_(std::move(registry)),
          dims_(ModelDims::resolve(cfg_.model, static_cast<int>(registry_.size()),
                                   cfg_.sampler.train_size)),
          params_(ParamStore<T>::zeros(dims_)),
          optimizer_(params_, cfg_.optimizer),
          sampler_(std::move(datasets), cfg_.sampler, derive_seed(cfg_.seed, 1)),
          mask_rng_(derive_seed(cfg_.seed, 2), "mask"),
          metrics_(metrics) {
        schedule_.warmup_steps = cfg_.warmup_steps();
        schedule_.total_steps = cfg_.total_steps();
        schedule_.base_lr = cfg_.optimizer.base_lr;
        schedule_.min_lr = cfg_.optimizer.min_lr;
    }

    void init_params() {
        RngStream init_rng(derive_seed(cfg_.seed, 0), "params");
        params_ = ParamStore<T>::init(dims_, init_rng);
    }

    TrainSummary run() {
        const int total = cfg_.total_steps();
        const int v_per_step = cfg_.train.accumulation;
        write_header();
        AccumulationBuffer<T> accum(params_);
        std::vector<double> step_losses;
        const int start = step_;
        while (step_ < total) {
            const int s = step_;
            const double lr = lr_at(s, schedule_);
            const std::uint64_t hash_before = params_.hash();
            double loss_sum = 0.0;
            for (int v = 0; v < v_per_step; ++v) {
                loss_sum += micro_step(s, lr, accum);
            }
            if (params_.hash() != hash_before) {
                throw ContractError("trainer: parameters mutated inside accumulation window at step " +
                                    std::to_string(s));
            }
            if (cfg_.train.average_over_v) {
                accum.scale(static_cast<T>(1.0 / static_cast<double>(v_per_step)));
            }
            if (cfg_.optimizer.clip_norm) {
                const double norm = accum.global_norm();
                if (norm > *cfg_.optimizer.clip_norm) {
                    accum.scale(static_cast<T>(*cfg_.optimizer.clip_norm / norm));
                }
            }
            optimizer_.step(params_, accum.sums(), lr);
            accum.reset();
            step_ = s + 1;
            step_losses.push_back(loss_sum / v_per_step);
            if (cfg_.train.checkpoint_every > 0 && step_ % cfg_.train.checkpoint_every == 0 &&
                step_ < total) {
                save(cfg_.out_dir + "/checkpoint_step" + std::to_string(step_) + ".fmck");
            }
        }

        TrainSummary summary;
        summary.steps_run = step_ - start;
        if (!step_losses.empty()) {
            const std::size_t window =
                std::max<std::size_t>(1, std::min<std::size_t>(50, step_losses.size() / 10));
            double first = 0.0, last = 0.0;
            for (std::size_t i = 0; i < window; ++i) first += step_losses[i];
            for (std::size_t i = step_losses.size() - window; i < step_losses.size(); ++i) {
                last += step_losses[i];
            }
            summary.initial_smoothed = first / static_cast<double>(window);
            summary.final_smoothed = last / static_cast<double>(window);
            summary.last_loss = step_losses.back();
        }
        summary.checkpoint_path = cfg_.out_dir + "/checkpoint_final.fmck";
        save(summary.checkpoint_path);
        return summary;
    }

    void save(const std::string& path) const {
        CheckpointData ck;
        nlohmann::ordered_json meta;
        meta["config"] = nlohmann::ordered_json::parse(cfg_.to_json_text());
        meta["step"] = step_;
        meta["adam_t"] = optimizer_.step_count();
        meta["precision"] = sizeof(T) == 4 ? 32 : 64;
        meta["rng_sampler"] = sampler_.rng().serialize();
        meta["rng_mask"] = mask_rng_.serialize();
        ck.config_json = meta.dump();
        for (std::size_t i = 0; i < params_.count(); ++i) {
            ck.blobs.push_back(make_blob(params_.name_of(i), params_.by_index(i)));
        }
        for (std::size_t i = 0; i < params_.count(); ++i) {
            ck.blobs.push_back(
                make_blob("adam.m." + params_.name_of(i), optimizer_.first_moments()[i]));
            ck.blobs.push_back(
                make_blob("adam.v." + params_.name_of(i), optimizer_.second_moments()[i]));
        }
        save_checkpoint(ck, path);
    }

    void restore(const std::string& path) {
        const CheckpointData ck = load_checkpoint(path);
        const int want = sizeof(T) == 4 ? 32 : 64;
        if (precision_of_checkpoint(ck) != want) {
            throw ValidationError("checkpoint precision " +
                                  std::to_string(precision_of_checkpoint(ck)) +
                                  " does not match this run's " + std::to_string(want));
        }
        const RunConfig saved = config_from_checkpoint(ck);
        // out_dir and workers do not affect the math; everything else must match.
        const auto strip = [](const RunConfig& c) {
            auto j = nlohmann::json::parse(c.to_json_text());
            j.erase("out_dir");
            j.erase("workers");
            return j.dump();
        };
        if (strip(saved) != strip(cfg_)) {
            throw ValidationError("checkpoint config does not match the current run config");
        }
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(ck.config_json);
            step_ = meta.at("step").get<int>();
            optimizer_.set_step_count(meta.at("adam_t").get<std::int64_t>());
            sampler_.rng().deserialize(meta.at("rng_sampler").get<std::string>());
            mask_rng_.deserialize(meta.at("rng_mask").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("checkpoint: bad config block: ") + e.what());
        }
        params_ = params_from_checkpoint<T>(ck, dims_);
        for (std::size_t i = 0; i < params_.count(); ++i) {
            optimizer_.first_moments()[i] = blob_tensor<T>(ck.blob("adam.m." + params_.name_of(i)));
            optimizer_.second_moments()[i] =
                blob_tensor<T>(ck.blob("adam.v." + params_.name_of(i)));
        }
    }

    const ParamStore<T>& params() const { return params_; }
    ParamStore<T>& params() { return params_; }
    const ModelDims& dims() const { return dims_; }
    int step() const { return step_; }

  private:
    void write_header() {
        if (!metrics_ || header_written_) return;
        *metrics_ << cfg_.to_json_text() << "\n";
        header_written_ = true;
    }

    double micro_step(int s, double lr, AccumulationBuffer<T>& accum) {
        const auto t0 = std::chrono::steady_clock::now();
        const MicroBatchPlan plan = sampler_.draw_plan();
        const MicroBatch<T> mb = sampler_.template materialize<T>(plan);
        const TokenBatchData<T> batch = build_token_batch(mb.samples, cfg_.model.patch_size);
        const MaskPlan mask =
            mask_tokens(batch.info, cfg_.masking.ratio, mask_rng_, cfg_.masking.per_band);

        Graph<T> g;
        GraphParams<T> gp = GraphParams<T>::leaf_all(g, params_, true);
        const MaeResult<T> res =
            mae_forward(g, gp, dims_, batch, mask, cfg_.masking.per_patch_norm);
        const double loss = static_cast<double>(g.value(res.loss).data[0]);
        if (!std::isfinite(loss)) {
            std::string bands;
            for (int b : mb.band_ids) bands += (bands.empty() ? "" : ",") + std::to_string(b);
            throw TrainingError("non-finite loss at step " + std::to_string(s) + " (dataset " +
                                mb.dataset + ", bands [" + bands + "])");
        }
        g.backward(res.loss);
        std::vector<Tensor<T>> grads;
        grads.reserve(params_.count());
        for (std::size_t i = 0; i < params_.count(); ++i) grads.push_back(g.grad(gp.vars[i]));
        accum.add(grads);

        if (metrics_ && s % cfg_.train.log_every == 0) {
            const auto t1 = std::chrono::steady_clock::now();
            const double wall_ms =
                std::chrono::duration<double, std::milli>(t1 - t0).count();
            write_line(s, loss, lr, mb, batch, res, g, wall_ms);
        }
        return loss;
    }

    void write_line(int s, double loss, double lr, const MicroBatch<T>& mb,
                    const TokenBatchData<T>& batch, const MaeResult<T>& res, const Graph<T>& g,
                    double wall_ms) {
        nlohmann::ordered_json line;
        line["step"] = s;
        line["loss"] = loss;
        line["lr"] = lr;
        line["dataset"] = mb.dataset;
        line["bands"] = mb.band_ids;
        line["k"] = mb.band_ids.size();
        line["wall_ms"] = wall_ms;

        // Masked-patch MSE split by band.
        const Tensor<T>& rec = g.value(res.reconstructions);
        const std::int64_t pl = dims_.patch_len();
        std::map<int, std::pair<double, std::int64_t>> per_band;
        for (std::size_t i = 0; i < res.masked_rows.size(); ++i) {
            const int band = batch.info[static_cast<std::size_t>(res.masked_rows[i])].band;
            auto& [sq, n] = per_band[band];
            for (std::int64_t j = 0; j < pl; ++j) {
                const double d = static_cast<double>(rec.data[i * pl + j]) -
                                 static_cast<double>(res.targets.data[i * pl + j]);
                sq += d * d;
            }
            n += pl;
        }
        nlohmann::ordered_json bl;
        for (const auto& [band, acc] : per_band) {
            bl[std::to_string(band)] = acc.first / static_cast<double>(acc.second);
        }
        line["band_loss"] = bl;
        *metrics_ << line.dump() << "\n";
    }

    RunConfig cfg_;
    BandRegistry registry_;
    ModelDims dims_;
    ParamStore<T> params_;
    AdamW<T> optimizer_;
    ModalitySampler sampler_;
    RngStream mask_rng_;
    LrSchedule schedule_;
    std::ostream* metrics_ = nullptr;
    bool header_written_ = false;
    int step_ = 0;
};

}  // namespace fomo
