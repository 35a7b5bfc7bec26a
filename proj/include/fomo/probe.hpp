#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fomo/config.hpp"
#include "fomo/error.hpp"
#include "fomo/mae.hpp"
#include "fomo/model.hpp"
#include "fomo/patch.hpp"
#include "fomo/raster.hpp"
#include "fomo/sampler.hpp"

namespace fomo {

struct ClassScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct MetricReport {
    double f1_micro = 0.0;
    double f1_macro = 0.0;  // over classes present in targets
    std::vector<ClassScore> per_class;
    int excluded_classes = 0;  // classes absent from targets
    double miou = -1.0;        // segmentation only; -1 when not computed
};

// Single-label multiclass confusion metrics. Micro F1 equals accuracy when
// every sample gets exactly one prediction.
MetricReport cls_metrics(const std::vector<int>& predictions, const std::vector<int>& targets,
                         int n_classes);

// Multi-hot predictions/targets in {0,1}; micro from global TP/FP/FN.
MetricReport multilabel_metrics(const Tensor<double>& predictions, const Tensor<double>& targets);

// Pixel-level metrics plus mean IoU over classes with a nonzero union.
MetricReport seg_metrics(const std::vector<int>& predictions, const std::vector<int>& targets,
                         int n_classes);

struct FeatureBatch {
    Tensor<double> features;  // [n, d] mean-pooled encoder outputs
    std::vector<int> labels;
    std::vector<std::string> sample_ids;
};

// Frozen-backbone feature extraction: r = 0 (nothing masked), every token
// encoded, mean pool over all tokens of a sample. Deterministic center crop.
template <typename T>
FeatureBatch extract_features(const ParamStore<T>& params, const ModelDims& dims,
                              const DatasetSpec& dataset, const std::vector<int>& bands,
                              int train_size, bool require_labels = true) {
    if (bands.empty()) throw ValidationError("extract_features: empty band subset");
    for (int b : bands) {
        if (!dataset.has_band(b)) {
            throw NotFoundError("extract_features: band " + std::to_string(b) +
                                " not in dataset " + dataset.name);
        }
    }
    const std::int64_t n = static_cast<std::int64_t>(dataset.samples.size());
    FeatureBatch out;
    out.features = Tensor<double>({n, static_cast<std::int64_t>(dims.width)});

    // A handful of samples per graph keeps peak memory flat; attention
    // segments keep them independent.
    const std::int64_t chunk = 8;
    for (std::int64_t lo = 0; lo < n; lo += chunk) {
        const std::int64_t hi = std::min(n, lo + chunk);
        std::vector<SampleView<T>> views;
        for (std::int64_t s = lo; s < hi; ++s) {
            const SampleRef& ref = dataset.samples[static_cast<std::size_t>(s)];
            if (require_labels && !ref.label) {
                throw ValidationError("extract_features: sample " + ref.id + " has no label");
            }
            out.sample_ids.push_back(ref.id);
            out.labels.push_back(ref.label.value_or(-1));
            SampleView<T> view;
            for (int b : bands) {
                const RasterTile tile = read_tile(dataset.tile_path(ref, b));
                Tensor<float> fitted = fit_to_size(tile, train_size, 0.5, 0.5);
                const BandStats st = dataset.stats.at(b);
                Tensor<T> norm(fitted.shape);
                for (std::size_t i = 0; i < fitted.data.size(); ++i) {
                    norm.data[i] = static_cast<T>(normalize_value(fitted.data[i], st));
                }
                view.push_back({b, std::move(norm)});
            }
            views.push_back(std::move(view));
        }
        Graph<T> g;
        GraphParams<T> gp = GraphParams<T>::leaf_all(g, params, false);
        const TokenBatchData<T> batch = build_token_batch(views, dims.patch_size);
        const Var enc = encode_all_tokens(g, gp, dims, batch);
        const Tensor<T>& tokens = g.value(enc);
        const std::int64_t d = dims.width;
        for (std::int64_t s = lo; s < hi; ++s) {
            double* dst = out.features.data.data() + s * d;
            std::int64_t count = 0;
            for (std::size_t i = 0; i < batch.info.size(); ++i) {
                if (batch.info[i].sample != static_cast<std::int32_t>(s - lo)) continue;
                const T* row = tokens.data.data() + static_cast<std::int64_t>(i) * d;
                for (std::int64_t j = 0; j < d; ++j) dst[j] += static_cast<double>(row[j]);
                ++count;
            }
            for (std::int64_t j = 0; j < d; ++j) dst[j] /= static_cast<double>(count);
        }
    }
    return out;
}

struct ProbeConfig {
    int epochs = 300;
    double lr = 0.1;
    double l2 = 1e-4;
    double eval_frac = 0.2;  // tail fraction held out
};

struct ProbeResult {
    Tensor<double> w;  // [d, C]
    Tensor<double> b;  // [C]
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;
    MetricReport eval;
    int n_train = 0;
    int n_eval = 0;
};

// Full-batch gradient descent on softmax cross-entropy + L2, head only.
// Features are z-scored with training-split statistics before fitting.
ProbeResult fit_probe(const Tensor<double>& features, const std::vector<int>& labels,
                      int n_classes, const ProbeConfig& cfg);

// Mean-pool tokens per grid position across bands, run two pointwise layers,
// then nearest-neighbor upsample by P. Pointwise maps commute with the
// upsampling, so this matches upsample-first exactly.
template <typename T>
Var seg_head_forward(Graph<T>& g, Var tokens, const std::vector<TokenInfo>& info,
                     const PatchGrid& grid, Var w1, Var b1, Var w2, Var b2) {
    const std::int64_t n = grid.count();
    std::vector<std::vector<std::int64_t>> rows_by_band;  // [band][pos] -> token row
    {
        std::vector<std::int64_t> current(static_cast<std::size_t>(n), -1);
        std::int64_t seen = 0;
        for (std::size_t i = 0; i < info.size(); ++i) {
            if (info[i].sample != 0) {
                throw DimensionError("seg_head_forward: expects a single-sample token batch");
            }
            if (info[i].pos < 0 || info[i].pos >= n) {
                throw DimensionError("seg_head_forward: token position " +
                                     std::to_string(info[i].pos) + " outside grid of " +
                                     std::to_string(n));
            }
            if (current[static_cast<std::size_t>(info[i].pos)] != -1) {
                rows_by_band.push_back(current);
                current.assign(static_cast<std::size_t>(n), -1);
                seen = 0;
            }
            current[static_cast<std::size_t>(info[i].pos)] = static_cast<std::int64_t>(i);
            ++seen;
        }
        if (seen != n) throw DimensionError("seg_head_forward: token count does not cover the grid");
        rows_by_band.push_back(current);
    }
    Var pooled;
    for (std::size_t b = 0; b < rows_by_band.size(); ++b) {
        Var part = g.gather_rows(tokens, rows_by_band[b]);
        pooled = b == 0 ? part : g.add(pooled, part);
    }
    pooled = g.scale(pooled, static_cast<T>(1.0 / static_cast<double>(rows_by_band.size())));

    Var h = g.gelu(g.add_rowvec(g.matmul(pooled, w1), b1));
    Var scores = g.add_rowvec(g.matmul(h, w2), b2);

    const std::int64_t p = grid.p;
    std::vector<std::int64_t> up(static_cast<std::size_t>(grid.rows() * p * grid.cols() * p));
    for (std::int64_t y = 0; y < grid.rows() * p; ++y) {
        for (std::int64_t x = 0; x < grid.cols() * p; ++x) {
            up[static_cast<std::size_t>(y * grid.cols() * p + x)] =
                (y / p) * grid.cols() + (x / p);
        }
    }
    return g.gather_rows(scores, up);
}

struct SegHeadParams {
    Tensor<double> w1, b1, w2, b2;
};

struct SegFitResult {
    SegHeadParams head;
    MetricReport eval;
};

// Head-only segmentation fit on frozen encoder tokens; samples split like
// fit_probe, pixel labels from each sample's mask raster.
template <typename T>
SegFitResult fit_seg_head(const ParamStore<T>& params, const ModelDims& dims,
                          const DatasetSpec& dataset, const std::vector<int>& bands,
                          int train_size, int n_classes, int hidden, const ProbeConfig& cfg,
                          RngStream& rng) {
    if (bands.empty()) throw ValidationError("fit_seg_head: empty band subset");
    for (int b : bands) {
        if (!dataset.has_band(b)) {
            throw NotFoundError("fit_seg_head: band " + std::to_string(b) + " not in dataset " +
                                dataset.name);
        }
    }
    const std::int64_t n = static_cast<std::int64_t>(dataset.samples.size());
    const PatchGrid grid{train_size, train_size, dims.patch_size};

    // Frozen encoder: tokens are computed once per sample and cached.
    std::vector<Tensor<double>> cached_tokens;
    std::vector<std::vector<TokenInfo>> cached_info;
    std::vector<std::vector<std::int64_t>> pixel_labels;
    for (std::int64_t s = 0; s < n; ++s) {
        const SampleRef& ref = dataset.samples[static_cast<std::size_t>(s)];
        if (!ref.seg) throw ValidationError("fit_seg_head: sample " + ref.id + " has no mask");
        SampleView<T> view;
        for (int b : bands) {
            const RasterTile tile = read_tile(dataset.tile_path(ref, b));
            Tensor<float> fitted = fit_to_size(tile, train_size, 0.5, 0.5);
            const BandStats st = dataset.stats.at(b);
            Tensor<T> norm(fitted.shape);
            for (std::size_t i = 0; i < fitted.data.size(); ++i) {
                norm.data[i] = static_cast<T>(normalize_value(fitted.data[i], st));
            }
            view.push_back({b, std::move(norm)});
        }
        Graph<T> g;
        GraphParams<T> gp = GraphParams<T>::leaf_all(g, params, false);
        const std::vector<SampleView<T>> one{std::move(view)};
        const TokenBatchData<T> batch = build_token_batch(one, dims.patch_size);
        const Var enc = encode_all_tokens(g, gp, dims, batch);
        cached_tokens.push_back(g.value(enc).template cast<double>());
        cached_info.push_back(batch.info);

        const RasterTile mask = read_tile(dataset.seg_path(ref));
        const Tensor<float> fitted = fit_to_size(mask, train_size, 0.5, 0.5);
        std::vector<std::int64_t> labels;
        for (float v : fitted.data) {
            const std::int64_t c = std::lround(v);
            if (c < 0 || c >= n_classes) {
                throw ValidationError("fit_seg_head: mask value " + std::to_string(v) +
                                      " outside [0, " + std::to_string(n_classes) + ")");
            }
            labels.push_back(c);
        }
        pixel_labels.push_back(std::move(labels));
    }

    const std::int64_t n_eval =
        static_cast<std::int64_t>(cfg.eval_frac * static_cast<double>(n));
    const std::int64_t n_train = n - n_eval;
    if (n_train < 1) throw ValidationError("fit_seg_head: training split too small");

    SegHeadParams head;
    head.w1 = Tensor<double>({static_cast<std::int64_t>(dims.width), hidden});
    head.b1 = Tensor<double>({static_cast<std::int64_t>(hidden)});
    head.w2 = Tensor<double>({static_cast<std::int64_t>(hidden), n_classes});
    head.b2 = Tensor<double>({static_cast<std::int64_t>(n_classes)});
    for (auto& v : head.w1.data) v = rng.truncated_normal(0.02);
    for (auto& v : head.w2.data) v = rng.truncated_normal(0.02);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::int64_t s = 0; s < n_train; ++s) {
            Graph<double> g;
            Var tokens = g.leaf(cached_tokens[static_cast<std::size_t>(s)], false);
            Var w1 = g.leaf(head.w1, true), b1 = g.leaf(head.b1, true);
            Var w2 = g.leaf(head.w2, true), b2 = g.leaf(head.b2, true);
            Var scores = seg_head_forward(g, tokens, cached_info[static_cast<std::size_t>(s)],
                                          grid, w1, b1, w2, b2);
            Var loss = g.cross_entropy(scores, pixel_labels[static_cast<std::size_t>(s)]);
            if (cfg.l2 > 0.0) {
                Var reg = g.add(g.reduce_sum(g.mul(w1, w1)), g.reduce_sum(g.mul(w2, w2)));
                loss = g.add(loss, g.scale(reg, cfg.l2));
            }
            g.backward(loss);
            const Tensor<double> g1 = g.grad(w1), gb1 = g.grad(b1);
            const Tensor<double> g2 = g.grad(w2), gb2 = g.grad(b2);
            for (std::size_t i = 0; i < head.w1.data.size(); ++i) head.w1.data[i] -= cfg.lr * g1.data[i];
            for (std::size_t i = 0; i < head.b1.data.size(); ++i) head.b1.data[i] -= cfg.lr * gb1.data[i];
            for (std::size_t i = 0; i < head.w2.data.size(); ++i) head.w2.data[i] -= cfg.lr * g2.data[i];
            for (std::size_t i = 0; i < head.b2.data.size(); ++i) head.b2.data[i] -= cfg.lr * gb2.data[i];
        }
    }

    SegFitResult res;
    res.head = head;
    std::vector<int> all_pred, all_tgt;
    const std::int64_t lo = n_eval > 0 ? n_train : 0;  // no holdout: report train fit
    for (std::int64_t s = lo; s < n; ++s) {
        Graph<double> g;
        Var tokens = g.leaf(cached_tokens[static_cast<std::size_t>(s)], false);
        Var scores = seg_head_forward(g, tokens, cached_info[static_cast<std::size_t>(s)], grid,
                                      g.leaf(head.w1, false), g.leaf(head.b1, false),
                                      g.leaf(head.w2, false), g.leaf(head.b2, false));
        const Tensor<double>& z = g.value(scores);
        for (std::int64_t px = 0; px < z.shape[0]; ++px) {
            int best = 0;
            double best_v = z.at(px, 0);
            for (int c = 1; c < n_classes; ++c) {
                if (z.at(px, c) > best_v) {
                    best_v = z.at(px, c);
                    best = c;
                }
            }
            all_pred.push_back(best);
            all_tgt.push_back(
                static_cast<int>(pixel_labels[static_cast<std::size_t>(s)][static_cast<std::size_t>(px)]));
        }
    }
    res.eval = seg_metrics(all_pred, all_tgt, n_classes);
    return res;
}

}  // namespace fomo
