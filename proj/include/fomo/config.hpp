#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fomo {

enum class ProjectionMode { kShared, kPerBand };

std::string to_string(ProjectionMode m);
ProjectionMode projection_mode_from_string(const std::string& s);

struct ModelConfig {
    ProjectionMode mode = ProjectionMode::kShared;
    int patch_size = 4;
    int width = 96;
    int encoder_depth = 4;
    int encoder_heads = 4;
    int decoder_depth = 2;
    int decoder_heads = 4;
    int decoder_width = 128;
};

struct SamplerSettings {
    int k_max = 4;
    int train_size = 64;
    int micro_batch_size = 1;
    int min_tile_px = 64;
};

struct OptimizerConfig {
    double base_lr = 1.5e-4;
    double min_lr = 0.0;
    double weight_decay = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double warmup_frac = 0.05;
    std::optional<double> clip_norm;
};

struct TrainConfig {
    int steps = 2000;
    int accumulation = 8;  // micro-batches per optimizer step
    bool average_over_v = false;
    std::optional<int> epochs;  // when set, steps = epochs * steps_per_epoch
    int steps_per_epoch = 100;
    int log_every = 1;
    int checkpoint_every = 0;  // 0: only final
};

struct MaskConfig {
    double ratio = 0.75;
    bool per_band = false;        // stratify the mask within each band
    bool per_patch_norm = false;  // normalize reconstruction targets per patch
};

// Whole-run configuration; validated as a unit before any work starts.
struct RunConfig {
    std::string registry_path;  // empty: built-in canonical registry
    std::vector<std::string> dataset_manifests;
    std::string out_dir = "out";
    ModelConfig model;
    SamplerSettings sampler;
    OptimizerConfig optimizer;
    TrainConfig train;
    MaskConfig masking;
    std::uint64_t seed = 0;
    int precision = 32;  // 32 or 64
    int workers = 0;     // 0: available parallelism

    static RunConfig from_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text);
    std::string to_json_text() const;  // full echo, defaults included

    // Throws ValidationError with the offending field and value.
    void validate() const;

    int total_steps() const;
    int warmup_steps() const;
};

}  // namespace fomo
