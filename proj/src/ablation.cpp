#include "fomo/ablation.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fomo {

AblationPlan AblationPlan::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StorageError("ablation plan: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

AblationPlan AblationPlan::from_json_text(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        AblationPlan plan;
        plan.checkpoint = j.value("checkpoint", "");
        plan.dataset_manifest = j.value("dataset", "");
        plan.task = j.value("task", "cls");
        for (const auto& s : j.at("subsets")) {
            plan.subsets.push_back(s.get<std::vector<int>>());
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("ablation plan: ") + e.what());
    }
}

void validate_subsets(const AblationPlan& plan, const BandRegistry& registry,
                      const DatasetSpec& dataset) {
    if (plan.subsets.empty()) throw ValidationError("ablation: plan has no subsets");
    if (plan.task != "cls") {
        throw ValidationError("ablation: unsupported task " + plan.task);
    }
    for (std::size_t i = 0; i < plan.subsets.size(); ++i) {
        const auto& subset = plan.subsets[i];
        if (subset.empty()) {
            throw ValidationError("ablation: subset " + std::to_string(i) + " is empty");
        }
        for (int b : subset) {
            if (!registry.has_id(b)) {
                throw ValidationError("ablation: subset " + std::to_string(i) + " names band " +
                                      std::to_string(b) + " outside the registry");
            }
            if (!dataset.has_band(b)) {
                throw ValidationError("ablation: subset " + std::to_string(i) + " names band " +
                                      std::to_string(b) + " absent from dataset " + dataset.name);
            }
        }
    }
}

}  // namespace fomo
