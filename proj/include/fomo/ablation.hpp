#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fomo/error.hpp"
#include "fomo/probe.hpp"
#include "fomo/registry.hpp"

namespace fomo {

// Which band subsets to evaluate against one frozen checkpoint.
struct AblationPlan {
    std::string checkpoint;
    std::string dataset_manifest;
    std::string task = "cls";
    std::vector<std::vector<int>> subsets;

    static AblationPlan from_file(const std::string& path);
    static AblationPlan from_json_text(const std::string& text);
};

struct AblationRow {
    std::vector<int> bands;
    ProbeResult probe;
};

struct AblationReport {
    std::vector<AblationRow> rows;   // one per plan subset, order preserved
    std::uint64_t param_hash = 0;    // identical across all rows by contract
};

// Rejects any invalid subset before touching the first one.
void validate_subsets(const AblationPlan& plan, const BandRegistry& registry,
                      const DatasetSpec& dataset);

// Head refit per subset on frozen features; encoder parameters are
// hash-checked after every row.
template <typename T>
AblationReport run_ablation(const AblationPlan& plan, const ParamStore<T>& params,
                            const ModelDims& dims, const BandRegistry& registry,
                            const DatasetSpec& dataset, int train_size, int n_classes,
                            const ProbeConfig& cfg) {
    validate_subsets(plan, registry, dataset);
    AblationReport rep;
    rep.param_hash = params.hash();
    for (const auto& subset : plan.subsets) {
        const FeatureBatch fb = extract_features(params, dims, dataset, subset, train_size);
        AblationRow row;
        row.bands = subset;
        row.probe = fit_probe(fb.features, fb.labels, n_classes, cfg);
        if (params.hash() != rep.param_hash) {
            throw ContractError("ablation: backbone parameters changed during evaluation");
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

}  // namespace fomo
