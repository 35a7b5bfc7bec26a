#include "fomo/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fomo/error.hpp"

namespace fomo {

using nlohmann::json;

std::string to_string(ProjectionMode m) {
    return m == ProjectionMode::kShared ? "shared" : "per-band";
}

ProjectionMode projection_mode_from_string(const std::string& s) {
    if (s == "shared") return ProjectionMode::kShared;
    if (s == "per-band") return ProjectionMode::kPerBand;
    throw ValidationError("model.mode must be \"shared\" or \"per-band\", got \"" + s + "\"");
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_model(const json& j, ModelConfig& m) {
    if (j.contains("mode")) m.mode = projection_mode_from_string(j.at("mode").get<std::string>());
    read_field(j, "patch_size", m.patch_size);
    read_field(j, "width", m.width);
    read_field(j, "encoder_depth", m.encoder_depth);
    read_field(j, "encoder_heads", m.encoder_heads);
    read_field(j, "decoder_depth", m.decoder_depth);
    read_field(j, "decoder_heads", m.decoder_heads);
    read_field(j, "decoder_width", m.decoder_width);
}

void parse_sampler(const json& j, SamplerSettings& s) {
    read_field(j, "k_max", s.k_max);
    read_field(j, "train_size", s.train_size);
    read_field(j, "micro_batch_size", s.micro_batch_size);
    read_field(j, "min_tile_px", s.min_tile_px);
}

void parse_optimizer(const json& j, OptimizerConfig& o) {
    read_field(j, "base_lr", o.base_lr);
    read_field(j, "min_lr", o.min_lr);
    read_field(j, "weight_decay", o.weight_decay);
    read_field(j, "beta1", o.beta1);
    read_field(j, "beta2", o.beta2);
    read_field(j, "eps", o.eps);
    read_field(j, "warmup_frac", o.warmup_frac);
    if (j.contains("clip_norm") && !j.at("clip_norm").is_null()) {
        o.clip_norm = j.at("clip_norm").get<double>();
    }
}

void parse_train(const json& j, TrainConfig& t) {
    read_field(j, "steps", t.steps);
    read_field(j, "accumulation", t.accumulation);
    read_field(j, "average_over_v", t.average_over_v);
    if (j.contains("epochs") && !j.at("epochs").is_null()) t.epochs = j.at("epochs").get<int>();
    read_field(j, "steps_per_epoch", t.steps_per_epoch);
    read_field(j, "log_every", t.log_every);
    read_field(j, "checkpoint_every", t.checkpoint_every);
}

void parse_masking(const json& j, MaskConfig& m) {
    read_field(j, "ratio", m.ratio);
    read_field(j, "per_band", m.per_band);
    read_field(j, "per_patch_norm", m.per_patch_norm);
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    RunConfig c;
    try {
        read_field(j, "registry", c.registry_path);
        if (j.contains("datasets")) {
            c.dataset_manifests = j.at("datasets").get<std::vector<std::string>>();
        }
        read_field(j, "out_dir", c.out_dir);
        if (j.contains("model")) parse_model(j.at("model"), c.model);
        if (j.contains("sampler")) parse_sampler(j.at("sampler"), c.sampler);
        if (j.contains("optimizer")) parse_optimizer(j.at("optimizer"), c.optimizer);
        if (j.contains("train")) parse_train(j.at("train"), c.train);
        if (j.contains("masking")) parse_masking(j.at("masking"), c.masking);
        read_field(j, "seed", c.seed);
        read_field(j, "precision", c.precision);
        read_field(j, "workers", c.workers);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: schema violation: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
    json j;
    j["registry"] = registry_path;
    j["datasets"] = dataset_manifests;
    j["out_dir"] = out_dir;
    j["model"] = {{"mode", to_string(model.mode)},
                  {"patch_size", model.patch_size},
                  {"width", model.width},
                  {"encoder_depth", model.encoder_depth},
                  {"encoder_heads", model.encoder_heads},
                  {"decoder_depth", model.decoder_depth},
                  {"decoder_heads", model.decoder_heads},
                  {"decoder_width", model.decoder_width}};
    j["sampler"] = {{"k_max", sampler.k_max},
                    {"train_size", sampler.train_size},
                    {"micro_batch_size", sampler.micro_batch_size},
                    {"min_tile_px", sampler.min_tile_px}};
    j["optimizer"] = {{"base_lr", optimizer.base_lr},   {"min_lr", optimizer.min_lr},
                      {"weight_decay", optimizer.weight_decay}, {"beta1", optimizer.beta1},
                      {"beta2", optimizer.beta2},       {"eps", optimizer.eps},
                      {"warmup_frac", optimizer.warmup_frac}};
    if (optimizer.clip_norm) j["optimizer"]["clip_norm"] = *optimizer.clip_norm;
    else j["optimizer"]["clip_norm"] = nullptr;
    j["train"] = {{"steps", train.steps},
                  {"accumulation", train.accumulation},
                  {"average_over_v", train.average_over_v},
                  {"steps_per_epoch", train.steps_per_epoch},
                  {"log_every", train.log_every},
                  {"checkpoint_every", train.checkpoint_every}};
    if (train.epochs) j["train"]["epochs"] = *train.epochs;
    else j["train"]["epochs"] = nullptr;
    j["masking"] = {{"ratio", masking.ratio},
                    {"per_band", masking.per_band},
                    {"per_patch_norm", masking.per_patch_norm}};
    j["seed"] = seed;
    j["precision"] = precision;
    j["workers"] = workers;
    return j.dump();
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ValidationError("config: " + msg); };
    if (model.patch_size < 1) fail("model.patch_size must be >= 1");
    if (model.width < 1) fail("model.width must be >= 1");
    if (model.encoder_depth < 1) fail("model.encoder_depth must be >= 1");
    if (model.encoder_heads < 1) fail("model.encoder_heads must be >= 1");
    if (model.width % model.encoder_heads != 0) {
        fail("model.width " + std::to_string(model.width) + " not divisible by encoder_heads " +
             std::to_string(model.encoder_heads));
    }
    if (model.decoder_depth < 1) fail("model.decoder_depth must be >= 1");
    if (model.decoder_heads < 1) fail("model.decoder_heads must be >= 1");
    if (model.decoder_width % model.decoder_heads != 0) {
        fail("model.decoder_width " + std::to_string(model.decoder_width) +
             " not divisible by decoder_heads " + std::to_string(model.decoder_heads));
    }
    if (sampler.k_max < 1) fail("sampler.k_max must be >= 1");
    if (sampler.train_size < 1) fail("sampler.train_size must be >= 1");
    if (sampler.train_size % model.patch_size != 0) {
        fail("sampler.train_size " + std::to_string(sampler.train_size) +
             " not divisible by model.patch_size " + std::to_string(model.patch_size));
    }
    if (sampler.micro_batch_size < 1) fail("sampler.micro_batch_size must be >= 1");
    if (sampler.min_tile_px < 1) fail("sampler.min_tile_px must be >= 1");
    if (!(optimizer.base_lr > 0.0)) fail("optimizer.base_lr must be positive");
    if (optimizer.min_lr < 0.0) fail("optimizer.min_lr must be nonnegative");
    if (optimizer.min_lr > optimizer.base_lr) fail("optimizer.min_lr exceeds base_lr");
    if (optimizer.weight_decay < 0.0) fail("optimizer.weight_decay must be nonnegative");
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) fail("optimizer.beta1 outside [0,1)");
    if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) fail("optimizer.beta2 outside [0,1)");
    if (!(optimizer.eps > 0.0)) fail("optimizer.eps must be positive");
    if (!(optimizer.warmup_frac >= 0.0 && optimizer.warmup_frac < 1.0)) {
        fail("optimizer.warmup_frac outside [0,1)");
    }
    if (optimizer.clip_norm && !(*optimizer.clip_norm > 0.0)) {
        fail("optimizer.clip_norm must be positive when set");
    }
    if (train.steps < 1 && !train.epochs) fail("train.steps must be >= 1");
    if (train.epochs && *train.epochs < 1) fail("train.epochs must be >= 1 when set");
    if (train.steps_per_epoch < 1) fail("train.steps_per_epoch must be >= 1");
    if (train.accumulation < 1) fail("train.accumulation must be >= 1");
    if (train.log_every < 1) fail("train.log_every must be >= 1");
    if (train.checkpoint_every < 0) fail("train.checkpoint_every must be >= 0");
    if (!(masking.ratio >= 0.0 && masking.ratio < 1.0)) {
        fail("masking.ratio must lie in [0,1), got " + std::to_string(masking.ratio));
    }
    if (precision != 32 && precision != 64) fail("precision must be 32 or 64");
    if (workers < 0) fail("workers must be >= 0");
    if (warmup_steps() >= total_steps()) {
        fail("warmup (" + std::to_string(warmup_steps()) + " steps) must be shorter than the run (" +
             std::to_string(total_steps()) + " steps)");
    }
}

int RunConfig::total_steps() const {
    if (train.epochs) return *train.epochs * train.steps_per_epoch;
    return train.steps;
}

int RunConfig::warmup_steps() const {
    return static_cast<int>(std::floor(optimizer.warmup_frac * total_steps()));
}

}  // namespace fomo
