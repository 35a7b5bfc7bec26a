#include "fomo/model.hpp"

namespace fomo {

namespace {

void push_block(std::vector<std::pair<std::string, Shape>>& out, const std::string& prefix,
                std::int64_t width) {
    const std::int64_t d = width;
    out.emplace_back(prefix + ".ln1.g", Shape{d});
    out.emplace_back(prefix + ".ln1.b", Shape{d});
    out.emplace_back(prefix + ".attn.wq", Shape{d, d});
    out.emplace_back(prefix + ".attn.bq", Shape{d});
    out.emplace_back(prefix + ".attn.wk", Shape{d, d});
    out.emplace_back(prefix + ".attn.bk", Shape{d});
    out.emplace_back(prefix + ".attn.wv", Shape{d, d});
    out.emplace_back(prefix + ".attn.bv", Shape{d});
    out.emplace_back(prefix + ".attn.wo", Shape{d, d});
    out.emplace_back(prefix + ".attn.bo", Shape{d});
    out.emplace_back(prefix + ".ln2.g", Shape{d});
    out.emplace_back(prefix + ".ln2.b", Shape{d});
    out.emplace_back(prefix + ".mlp.w1", Shape{d, 4 * d});
    out.emplace_back(prefix + ".mlp.b1", Shape{4 * d});
    out.emplace_back(prefix + ".mlp.w2", Shape{4 * d, d});
    out.emplace_back(prefix + ".mlp.b2", Shape{d});
}

}  // namespace

std::vector<std::pair<std::string, Shape>> enumerate_param_shapes(const ModelDims& dims) {
    std::vector<std::pair<std::string, Shape>> out;
    const std::int64_t d = dims.width;
    const std::int64_t pl = dims.patch_len();
    const std::int64_t m = dims.n_bands;
    const std::int64_t wd = dims.decoder_width;

    if (dims.mode == ProjectionMode::kShared) {
        out.emplace_back("proj.shared.w", Shape{pl, d});
        out.emplace_back("proj.shared.b", Shape{d});
    } else {
        for (std::int64_t b = 0; b < m; ++b) {
            out.emplace_back("proj.band" + std::to_string(b) + ".w", Shape{pl, d});
            out.emplace_back("proj.band" + std::to_string(b) + ".b", Shape{d});
        }
    }
    out.emplace_back("embed.spectral", Shape{m, d});
    out.emplace_back("embed.positional", Shape{dims.n_positions, d});

    for (int l = 0; l < dims.encoder_depth; ++l) {
        push_block(out, "enc." + std::to_string(l), d);
    }
    out.emplace_back("enc.ln_f.g", Shape{d});
    out.emplace_back("enc.ln_f.b", Shape{d});

    out.emplace_back("dec.mask_token", Shape{d});
    out.emplace_back("dec.adapter.w", Shape{d, wd});
    out.emplace_back("dec.adapter.b", Shape{wd});
    for (int l = 0; l < dims.decoder_depth; ++l) {
        push_block(out, "dec." + std::to_string(l), wd);
    }
    out.emplace_back("dec.ln_f.g", Shape{wd});
    out.emplace_back("dec.ln_f.b", Shape{wd});
    out.emplace_back("dec.head.w", Shape{wd, pl});
    out.emplace_back("dec.head.b", Shape{pl});
    return out;
}

}  // namespace fomo
