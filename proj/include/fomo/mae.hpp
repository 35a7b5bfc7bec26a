#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fomo/error.hpp"
#include "fomo/graph.hpp"
#include "fomo/model.hpp"
#include "fomo/patch.hpp"
#include "fomo/rng.hpp"

namespace fomo {

struct TokenInfo {
    std::int32_t sample = 0;  // index within the micro-batch
    std::int32_t band = 0;    // registry band id
    std::int64_t pos = 0;     // patch-grid position within the band's raster
};

template <typename T>
struct BandRaster {
    int band_id = 0;
    Tensor<T> raster;  // [S, S], already normalized
};

template <typename T>
using SampleView = std::vector<BandRaster<T>>;

template <typename T>
struct TokenBatchData {
    Tensor<T> patches;  // [total_tokens, P^2]; encoder input and loss target
    std::vector<TokenInfo> info;

    std::int64_t n_tokens() const { return patches.shape.empty() ? 0 : patches.shape[0]; }
};

struct MaskPlan {
    std::vector<char> masked;
    std::int64_t n_masked = 0;
    double ratio = 0.0;
};

// Patchifies every band of every sample; token order is sample-major, then
// band in the sample's listed order, then grid position.
template <typename T>
TokenBatchData<T> build_token_batch(const std::vector<SampleView<T>>& samples, int patch_size) {
    if (samples.empty()) throw ValidationError("token batch: no samples");
    std::vector<Tensor<T>> parts;
    TokenBatchData<T> out;
    std::int64_t total = 0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        if (samples[s].empty()) throw ValidationError("token batch: sample with no bands");
        for (const auto& br : samples[s]) {
            Tensor<T> p = patchify(br.raster, patch_size);
            for (std::int64_t i = 0; i < p.shape[0]; ++i) {
                out.info.push_back({static_cast<std::int32_t>(s), static_cast<std::int32_t>(br.band_id), i});
            }
            total += p.shape[0];
            parts.push_back(std::move(p));
        }
    }
    const std::int64_t pl = parts[0].shape[1];
    out.patches = Tensor<T>({total, pl});
    std::int64_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.data.begin(), p.data.end(), out.patches.data.begin() + off * pl);
        off += p.shape[0];
    }
    return out;
}

// Uniform without-replacement masking over all tokens; per_band stratifies
// the draw within each (sample, band) token group. Masked count is
// round(r * T), capped so at least one token stays visible.
inline MaskPlan mask_tokens(const std::vector<TokenInfo>& info, double ratio, RngStream& rng,
                            bool per_band = false) {
    if (!(ratio >= 0.0 && ratio < 1.0)) {
        throw ValidationError("mask_tokens: ratio must lie in [0,1), got " + std::to_string(ratio));
    }
    const std::int64_t t = static_cast<std::int64_t>(info.size());
    if (t == 0) throw ValidationError("mask_tokens: empty token batch");
    MaskPlan plan;
    plan.ratio = ratio;
    plan.masked.assign(info.size(), 0);
    if (!per_band) {
        std::int64_t n = std::llround(ratio * static_cast<double>(t));
        n = std::min(n, t - 1);
        const auto idx = rng.sample_without_replacement(static_cast<std::uint64_t>(t),
                                                        static_cast<std::uint64_t>(n));
        for (auto i : idx) plan.masked[static_cast<std::size_t>(i)] = 1;
        plan.n_masked = n;
        return plan;
    }
    // Group by (sample, band) in first-appearance order.
    std::vector<std::vector<std::int64_t>> groups;
    std::unordered_map<std::int64_t, std::size_t> group_of;
    for (std::size_t i = 0; i < info.size(); ++i) {
        const std::int64_t key = (static_cast<std::int64_t>(info[i].sample) << 32) | info[i].band;
        auto it = group_of.find(key);
        if (it == group_of.end()) {
            group_of[key] = groups.size();
            groups.emplace_back();
            it = group_of.find(key);
        }
        groups[it->second].push_back(static_cast<std::int64_t>(i));
    }
    for (const auto& grp : groups) {
        const std::int64_t gs = static_cast<std::int64_t>(grp.size());
        const std::int64_t n = std::llround(ratio * static_cast<double>(gs));
        const auto idx = rng.sample_without_replacement(static_cast<std::uint64_t>(gs),
                                                        static_cast<std::uint64_t>(n));
        for (auto i : idx) {
            plan.masked[static_cast<std::size_t>(grp[static_cast<std::size_t>(i)])] = 1;
            ++plan.n_masked;
        }
    }
    if (plan.n_masked == t) {  // keep one visible token
        for (std::size_t i = 0; i < plan.masked.size(); ++i) {
            if (plan.masked[i]) {
                plan.masked[i] = 0;
                --plan.n_masked;
                break;
            }
        }
    }
    return plan;
}

// Parameter leaves for one compute graph, aligned with ParamStore order.
template <typename T>
struct GraphParams {
    std::vector<Var> vars;
    std::unordered_map<std::string, Var> by_name;

    static GraphParams leaf_all(Graph<T>& g, const ParamStore<T>& store, bool requires_grad) {
        GraphParams gp;
        gp.vars.reserve(store.count());
        for (std::size_t i = 0; i < store.count(); ++i) {
            Var v = g.leaf(store.by_index(i), requires_grad);
            gp.vars.push_back(v);
            gp.by_name[store.name_of(i)] = v;
        }
        return gp;
    }

    Var at(const std::string& name) const {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw NotFoundError("graph params: no tensor named " + name);
        return it->second;
    }
};

// One pre-norm transformer block: x + attn(ln1(x)), then x + mlp(ln2(x)).
template <typename T>
Var transformer_block(Graph<T>& g, const GraphParams<T>& p, const std::string& prefix, Var x,
                      int heads, const std::vector<std::vector<std::int64_t>>& segments) {
    constexpr T kLnEps = static_cast<T>(1e-6);
    Var h = g.layer_norm(x, p.at(prefix + ".ln1.g"), p.at(prefix + ".ln1.b"), kLnEps);
    Var q = g.add_rowvec(g.matmul(h, p.at(prefix + ".attn.wq")), p.at(prefix + ".attn.bq"));
    Var k = g.add_rowvec(g.matmul(h, p.at(prefix + ".attn.wk")), p.at(prefix + ".attn.bk"));
    Var v = g.add_rowvec(g.matmul(h, p.at(prefix + ".attn.wv")), p.at(prefix + ".attn.bv"));
    Var att = g.attention(q, k, v, heads, segments);
    Var o = g.add_rowvec(g.matmul(att, p.at(prefix + ".attn.wo")), p.at(prefix + ".attn.bo"));
    x = g.add(x, o);
    Var h2 = g.layer_norm(x, p.at(prefix + ".ln2.g"), p.at(prefix + ".ln2.b"), kLnEps);
    Var m = g.gelu(g.add_rowvec(g.matmul(h2, p.at(prefix + ".mlp.w1")), p.at(prefix + ".mlp.b1")));
    Var m2 = g.add_rowvec(g.matmul(m, p.at(prefix + ".mlp.w2")), p.at(prefix + ".mlp.b2"));
    return g.add(x, m2);
}

template <typename T>
Var run_blocks(Graph<T>& g, const GraphParams<T>& p, const std::string& stack, int depth, int heads,
               Var x, const std::vector<std::vector<std::int64_t>>& segments) {
    constexpr T kLnEps = static_cast<T>(1e-6);
    for (int l = 0; l < depth; ++l) {
        x = transformer_block(g, p, stack + "." + std::to_string(l), x, heads, segments);
    }
    return g.layer_norm(x, p.at(stack + ".ln_f.g"), p.at(stack + ".ln_f.b"), kLnEps);
}

inline std::vector<std::vector<std::int64_t>> segments_by_sample(const std::vector<TokenInfo>& info,
                                                                 const std::vector<std::int64_t>& rows) {
    std::vector<std::vector<std::int64_t>> segs;
    std::unordered_map<std::int32_t, std::size_t> seg_of;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::int32_t s = info[static_cast<std::size_t>(rows[r])].sample;
        auto it = seg_of.find(s);
        if (it == seg_of.end()) {
            seg_of[s] = segs.size();
            segs.emplace_back();
            it = seg_of.find(s);
        }
        segs[it->second].push_back(static_cast<std::int64_t>(r));
    }
    return segs;
}

// Linear patch projection plus the two embedding lookups (element-wise sum).
template <typename T>
Var compose_tokens(Graph<T>& g, const GraphParams<T>& p, const ModelDims& dims, Var patches,
                   const std::vector<TokenInfo>& info) {
    const std::int64_t t = static_cast<std::int64_t>(info.size());
    Var projected;
    if (dims.mode == ProjectionMode::kShared) {
        projected = g.add_rowvec(g.matmul(patches, p.at("proj.shared.w")), p.at("proj.shared.b"));
    } else {
        std::vector<std::vector<std::int64_t>> rows_of_band;
        std::vector<int> bands;
        std::unordered_map<int, std::size_t> band_slot;
        for (std::size_t i = 0; i < info.size(); ++i) {
            auto it = band_slot.find(info[i].band);
            if (it == band_slot.end()) {
                band_slot[info[i].band] = rows_of_band.size();
                rows_of_band.emplace_back();
                bands.push_back(info[i].band);
                it = band_slot.find(info[i].band);
            }
            rows_of_band[it->second].push_back(static_cast<std::int64_t>(i));
        }
        Var acc;
        for (std::size_t bi = 0; bi < bands.size(); ++bi) {
            if (bands[bi] < 0 || bands[bi] >= dims.n_bands) {
                throw NotFoundError("compose_tokens: band " + std::to_string(bands[bi]) +
                                    " has no projection");
            }
            const std::string prefix = "proj.band" + std::to_string(bands[bi]);
            Var part = g.gather_rows(patches, rows_of_band[bi]);
            part = g.add_rowvec(g.matmul(part, p.at(prefix + ".w")), p.at(prefix + ".b"));
            Var placed = g.scatter_rows(part, rows_of_band[bi], t);
            acc = bi == 0 ? placed : g.add(acc, placed);
        }
        projected = acc;
    }
    std::vector<std::int64_t> band_rows(info.size()), pos_rows(info.size());
    for (std::size_t i = 0; i < info.size(); ++i) {
        if (info[i].band < 0 || info[i].band >= dims.n_bands) {
            throw NotFoundError("compose_tokens: band " + std::to_string(info[i].band) +
                                " outside the spectral table");
        }
        if (info[i].pos < 0 || info[i].pos >= dims.n_positions) {
            throw DimensionError("compose_tokens: grid position " + std::to_string(info[i].pos) +
                                 " outside the positional table of " +
                                 std::to_string(dims.n_positions));
        }
        band_rows[i] = info[i].band;
        pos_rows[i] = info[i].pos;
    }
    Var spectral = g.gather_rows(p.at("embed.spectral"), band_rows);
    Var positional = g.gather_rows(p.at("embed.positional"), pos_rows);
    return g.add(g.add(projected, spectral), positional);
}

template <typename T>
struct MaeResult {
    Var loss;
    Var reconstructions;  // [n_masked, P^2] in masked-index order
    Tensor<T> targets;    // what the loss compared against, same layout
    std::vector<std::int64_t> masked_rows;
    std::vector<std::int64_t> visible_rows;
};

// Full forward: project + compose, encode visible tokens, rebuild the
// sequence with the mask token (keeping each masked slot's spectral and
// positional identity), decode, and take MSE over masked patches only.
template <typename T>
MaeResult<T> mae_forward(Graph<T>& g, const GraphParams<T>& p, const ModelDims& dims,
                         const TokenBatchData<T>& batch, const MaskPlan& plan,
                         bool per_patch_norm = false) {
    const std::int64_t t = batch.n_tokens();
    if (static_cast<std::int64_t>(plan.masked.size()) != t) {
        throw ContractError("mae_forward: mask plan covers " + std::to_string(plan.masked.size()) +
                            " tokens, batch has " + std::to_string(t));
    }
    if (plan.n_masked == 0) throw ValidationError("mae_forward: no masked tokens to reconstruct");

    MaeResult<T> res;
    for (std::int64_t i = 0; i < t; ++i) {
        (plan.masked[static_cast<std::size_t>(i)] ? res.masked_rows : res.visible_rows).push_back(i);
    }

    Var patches = g.leaf(batch.patches, false);
    Var composed = compose_tokens(g, p, dims, patches, batch.info);

    Var enc_in = g.gather_rows(composed, res.visible_rows);
    const auto enc_segs = segments_by_sample(batch.info, res.visible_rows);
    Var encoded = run_blocks(g, p, "enc", dims.encoder_depth, dims.encoder_heads, enc_in, enc_segs);

    // Rebuild the full sequence: encoder outputs at visible slots, the mask
    // token plus that slot's embeddings at masked slots.
    std::vector<std::int64_t> mask_bands(res.masked_rows.size()), mask_pos(res.masked_rows.size());
    for (std::size_t i = 0; i < res.masked_rows.size(); ++i) {
        const TokenInfo& ti = batch.info[static_cast<std::size_t>(res.masked_rows[i])];
        mask_bands[i] = ti.band;
        mask_pos[i] = ti.pos;
    }
    Var mask_fill = g.broadcast_row(p.at("dec.mask_token"), static_cast<std::int64_t>(res.masked_rows.size()));
    mask_fill = g.add(mask_fill, g.gather_rows(p.at("embed.spectral"), mask_bands));
    mask_fill = g.add(mask_fill, g.gather_rows(p.at("embed.positional"), mask_pos));

    Var full = g.add(g.scatter_rows(encoded, res.visible_rows, t),
                     g.scatter_rows(mask_fill, res.masked_rows, t));

    Var x = g.add_rowvec(g.matmul(full, p.at("dec.adapter.w")), p.at("dec.adapter.b"));
    std::vector<std::int64_t> all_rows(static_cast<std::size_t>(t));
    for (std::int64_t i = 0; i < t; ++i) all_rows[static_cast<std::size_t>(i)] = i;
    const auto dec_segs = segments_by_sample(batch.info, all_rows);
    x = run_blocks(g, p, "dec", dims.decoder_depth, dims.decoder_heads, x, dec_segs);

    Var dec_masked = g.gather_rows(x, res.masked_rows);
    res.reconstructions = g.add_rowvec(g.matmul(dec_masked, p.at("dec.head.w")), p.at("dec.head.b"));

    // Targets: the masked patches themselves, optionally re-normalized per
    // patch. They never carry gradient.
    Tensor<T> targets({static_cast<std::int64_t>(res.masked_rows.size()), dims.patch_len()});
    const std::int64_t pl = dims.patch_len();
    for (std::size_t i = 0; i < res.masked_rows.size(); ++i) {
        const T* src = batch.patches.data.data() + res.masked_rows[i] * pl;
        T* dst = targets.data.data() + static_cast<std::int64_t>(i) * pl;
        std::copy(src, src + pl, dst);
        if (per_patch_norm) {
            T mu = 0;
            for (std::int64_t j = 0; j < pl; ++j) mu += dst[j];
            mu /= static_cast<T>(pl);
            T var = 0;
            for (std::int64_t j = 0; j < pl; ++j) var += (dst[j] - mu) * (dst[j] - mu);
            var /= static_cast<T>(pl);
            const T rstd = T(1) / std::sqrt(var + static_cast<T>(1e-6));
            for (std::int64_t j = 0; j < pl; ++j) dst[j] = (dst[j] - mu) * rstd;
        }
    }
    res.targets = targets;
    Var tgt = g.leaf(std::move(targets), false);
    Var diff = g.sub(res.reconstructions, tgt);
    res.loss = g.reduce_mean(g.mul(diff, diff));
    return res;
}

// r = 0 path used by probing and feature extraction: every token is visible
// and encoded; no decoder, no loss.
template <typename T>
Var encode_all_tokens(Graph<T>& g, const GraphParams<T>& p, const ModelDims& dims,
                      const TokenBatchData<T>& batch) {
    Var patches = g.leaf(batch.patches, false);
    Var composed = compose_tokens(g, p, dims, patches, batch.info);
    std::vector<std::int64_t> all_rows(batch.info.size());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = static_cast<std::int64_t>(i);
    const auto segs = segments_by_sample(batch.info, all_rows);
    return run_blocks(g, p, "enc", dims.encoder_depth, dims.encoder_heads, composed, segs);
}

}  // namespace fomo
