#include "fomo/probe.hpp"

#include <algorithm>
#include <cmath>

#include "fomo/graph.hpp"

namespace fomo {

namespace {

struct Confusion {
    std::vector<std::int64_t> tp, fp, fn;
    explicit Confusion(int c) : tp(c, 0), fp(c, 0), fn(c, 0) {}
};

MetricReport report_from(const Confusion& m, int n_classes, bool with_miou) {
    MetricReport rep;
    std::int64_t tp_all = 0, fp_all = 0, fn_all = 0;
    double macro_sum = 0.0;
    int macro_n = 0;
    double iou_sum = 0.0;
    int iou_n = 0;
    for (int c = 0; c < n_classes; ++c) {
        ClassScore s;
        s.support = m.tp[c] + m.fn[c];
        const std::int64_t pred_n = m.tp[c] + m.fp[c];
        s.precision = pred_n > 0 ? static_cast<double>(m.tp[c]) / pred_n : 0.0;
        s.recall = s.support > 0 ? static_cast<double>(m.tp[c]) / s.support : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
        rep.per_class.push_back(s);
        tp_all += m.tp[c];
        fp_all += m.fp[c];
        fn_all += m.fn[c];
        if (s.support > 0) {
            macro_sum += s.f1;
            ++macro_n;
        } else {
            ++rep.excluded_classes;
        }
        const std::int64_t uni = m.tp[c] + m.fp[c] + m.fn[c];
        if (uni > 0) {
            iou_sum += static_cast<double>(m.tp[c]) / static_cast<double>(uni);
            ++iou_n;
        }
    }
    const double denom = 2.0 * tp_all + fp_all + fn_all;
    rep.f1_micro = denom > 0.0 ? 2.0 * tp_all / denom : 0.0;
    rep.f1_macro = macro_n > 0 ? macro_sum / macro_n : 0.0;
    if (with_miou) rep.miou = iou_n > 0 ? iou_sum / iou_n : 0.0;
    return rep;
}

Confusion confusion_single_label(const std::vector<int>& pred, const std::vector<int>& tgt,
                                 int n_classes) {
    if (pred.empty()) throw ValidationError("metrics: empty input");
    if (pred.size() != tgt.size()) {
        throw DimensionError("metrics: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(tgt.size()) + " targets");
    }
    Confusion m(n_classes);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i], t = tgt[i];
        if (p < 0 || p >= n_classes || t < 0 || t >= n_classes) {
            throw ValidationError("metrics: class id outside [0, " + std::to_string(n_classes) +
                                  ")");
        }
        if (p == t) {
            ++m.tp[static_cast<std::size_t>(p)];
        } else {
            ++m.fp[static_cast<std::size_t>(p)];
            ++m.fn[static_cast<std::size_t>(t)];
        }
    }
    return m;
}

}  // namespace

MetricReport cls_metrics(const std::vector<int>& predictions, const std::vector<int>& targets,
                         int n_classes) {
    return report_from(confusion_single_label(predictions, targets, n_classes), n_classes, false);
}

MetricReport seg_metrics(const std::vector<int>& predictions, const std::vector<int>& targets,
                         int n_classes) {
    return report_from(confusion_single_label(predictions, targets, n_classes), n_classes, true);
}

MetricReport multilabel_metrics(const Tensor<double>& predictions, const Tensor<double>& targets) {
    if (!same_shape(predictions, targets)) {
        throw DimensionError("metrics: prediction shape " + shape_str(predictions.shape) +
                             " vs target shape " + shape_str(targets.shape));
    }
    if (predictions.shape.size() != 2 || predictions.size() == 0) {
        throw ValidationError("metrics: multilabel input must be a nonempty [n, classes] matrix");
    }
    const std::int64_t n = predictions.shape[0], c = predictions.shape[1];
    Confusion m(static_cast<int>(c));
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < c; ++j) {
            const bool p = predictions.data[static_cast<std::size_t>(i * c + j)] > 0.5;
            const bool t = targets.data[static_cast<std::size_t>(i * c + j)] > 0.5;
            if (p && t) ++m.tp[static_cast<std::size_t>(j)];
            if (p && !t) ++m.fp[static_cast<std::size_t>(j)];
            if (!p && t) ++m.fn[static_cast<std::size_t>(j)];
        }
    }
    return report_from(m, static_cast<int>(c), false);
}

ProbeResult fit_probe(const Tensor<double>& features, const std::vector<int>& labels,
                      int n_classes, const ProbeConfig& cfg) {
    if (features.shape.size() != 2) throw DimensionError("fit_probe: features must be [n, d]");
    const std::int64_t n = features.shape[0], d = features.shape[1];
    if (static_cast<std::int64_t>(labels.size()) != n) {
        throw DimensionError("fit_probe: label count mismatch");
    }
    if (n_classes < 2) throw ValidationError("fit_probe: need at least 2 classes");
    const std::int64_t n_eval = static_cast<std::int64_t>(
        std::floor(cfg.eval_frac * static_cast<double>(n)));
    const std::int64_t n_train = n - n_eval;
    if (n_train < 2) throw ValidationError("fit_probe: training split too small");

    std::vector<int> seen(static_cast<std::size_t>(n_classes), 0);
    for (std::int64_t i = 0; i < n_train; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= n_classes) throw ValidationError("fit_probe: label out of range");
        seen[static_cast<std::size_t>(y)] = 1;
    }
    int present = 0;
    for (int s : seen) present += s;
    if (present < 2) {
        throw ValidationError("fit_probe: training split is degenerate (one class present)");
    }

    // z-score with train statistics; a dead dimension stays at zero.
    std::vector<double> mu(static_cast<std::size_t>(d), 0.0), sd(static_cast<std::size_t>(d), 0.0);
    for (std::int64_t i = 0; i < n_train; ++i) {
        for (std::int64_t j = 0; j < d; ++j) mu[static_cast<std::size_t>(j)] += features.at(i, j);
    }
    for (auto& v : mu) v /= static_cast<double>(n_train);
    for (std::int64_t i = 0; i < n_train; ++i) {
        for (std::int64_t j = 0; j < d; ++j) {
            const double dv = features.at(i, j) - mu[static_cast<std::size_t>(j)];
            sd[static_cast<std::size_t>(j)] += dv * dv;
        }
    }
    for (auto& v : sd) v = std::max(std::sqrt(v / static_cast<double>(n_train)), 1e-6);

    auto standardized = [&](std::int64_t lo, std::int64_t hi) {
        Tensor<double> out({hi - lo, d});
        for (std::int64_t i = lo; i < hi; ++i) {
            for (std::int64_t j = 0; j < d; ++j) {
                out.at(i - lo, j) = (features.at(i, j) - mu[static_cast<std::size_t>(j)]) /
                                    sd[static_cast<std::size_t>(j)];
            }
        }
        return out;
    };
    const Tensor<double> f_train = standardized(0, n_train);
    const Tensor<double> f_eval = standardized(n_train, n);
    std::vector<std::int64_t> y_train;
    for (std::int64_t i = 0; i < n_train; ++i) y_train.push_back(labels[static_cast<std::size_t>(i)]);

    ProbeResult res;
    res.n_train = static_cast<int>(n_train);
    res.n_eval = static_cast<int>(n_eval);
    res.w = Tensor<double>({d, n_classes});
    res.b = Tensor<double>({static_cast<std::int64_t>(n_classes)});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Graph<double> g;
        Var f = g.leaf(f_train, false);
        Var w = g.leaf(res.w, true);
        Var b = g.leaf(res.b, true);
        Var logits = g.add_rowvec(g.matmul(f, w), b);
        Var loss = g.cross_entropy(logits, y_train);
        if (cfg.l2 > 0.0) {
            loss = g.add(loss, g.scale(g.reduce_sum(g.mul(w, w)), cfg.l2));
        }
        g.backward(loss);
        const Tensor<double> gw = g.grad(w);
        const Tensor<double> gb = g.grad(b);
        for (std::size_t i = 0; i < res.w.data.size(); ++i) res.w.data[i] -= cfg.lr * gw.data[i];
        for (std::size_t i = 0; i < res.b.data.size(); ++i) res.b.data[i] -= cfg.lr * gb.data[i];
    }

    auto predict = [&](const Tensor<double>& f) {
        std::vector<int> out;
        for (std::int64_t i = 0; i < f.shape[0]; ++i) {
            int best = 0;
            double best_v = -1e300;
            for (int c = 0; c < n_classes; ++c) {
                double z = res.b.data[static_cast<std::size_t>(c)];
                for (std::int64_t j = 0; j < d; ++j) z += f.at(i, j) * res.w.at(j, c);
                if (z > best_v) {
                    best_v = z;
                    best = c;
                }
            }
            out.push_back(best);
        }
        return out;
    };

    const std::vector<int> p_train = predict(f_train);
    std::int64_t correct = 0;
    for (std::int64_t i = 0; i < n_train; ++i) {
        if (p_train[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)]) ++correct;
    }
    res.train_accuracy = static_cast<double>(correct) / static_cast<double>(n_train);

    if (n_eval > 0) {
        const std::vector<int> p_eval = predict(f_eval);
        std::vector<int> y_eval(labels.begin() + n_train, labels.end());
        res.eval = cls_metrics(p_eval, y_eval, n_classes);
        res.eval_accuracy = res.eval.f1_micro;
    }
    return res;
}

}  // namespace fomo
