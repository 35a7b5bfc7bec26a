#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fomo/ablation.hpp"
#include "fomo/checkpoint.hpp"
#include "fomo/config.hpp"
#include "fomo/error.hpp"
#include "fomo/log.hpp"
#include "fomo/mae_check.hpp"
#include "fomo/probe.hpp"
#include "fomo/registry.hpp"
#include "fomo/sampler.hpp"
#include "fomo/synth.hpp"
#include "fomo/trainer.hpp"

namespace {

using nlohmann::ordered_json;

std::vector<int> parse_band_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw fomo::ValidationError("bad band id '" + item + "' in list '" + csv + "'");
        }
    }
    return out;
}

fomo::BandRegistry load_registry(const std::string& path) {
    return path.empty() ? fomo::BandRegistry::canonical() : fomo::BandRegistry::load(path);
}

std::vector<fomo::DatasetSpec> load_datasets(const fomo::RunConfig& cfg,
                                             const fomo::BandRegistry& registry) {
    if (cfg.dataset_manifests.empty()) {
        throw fomo::ValidationError("config: datasets list is empty");
    }
    std::vector<fomo::DatasetSpec> datasets;
    for (const auto& path : cfg.dataset_manifests) datasets.push_back(fomo::load_manifest(path));
    fomo::validate_datasets(datasets, registry, cfg.sampler.min_tile_px);
    return datasets;
}

struct ConfigOverrides {
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int precision = 0;
    int workers = -1;
};

fomo::RunConfig load_config(const std::string& path, const ConfigOverrides& ov) {
    fomo::RunConfig cfg = fomo::RunConfig::from_file(path);
    if (!ov.out.empty()) cfg.out_dir = ov.out;
    if (ov.seed_set) cfg.seed = ov.seed;
    if (ov.precision != 0) cfg.precision = ov.precision;
    if (ov.workers >= 0) cfg.workers = ov.workers;
    cfg.validate();
    return cfg;
}

ordered_json report_json(const fomo::MetricReport& rep) {
    ordered_json j;
    j["f1_micro"] = rep.f1_micro;
    j["f1_macro"] = rep.f1_macro;
    ordered_json pc = ordered_json::array();
    for (const auto& c : rep.per_class) {
        pc.push_back({{"precision", c.precision},
                      {"recall", c.recall},
                      {"f1", c.f1},
                      {"support", c.support}});
    }
    j["per_class"] = pc;
    j["excluded_classes"] = rep.excluded_classes;
    if (rep.miou >= 0.0) j["miou"] = rep.miou;
    return j;
}

ordered_json probe_json(const fomo::ProbeResult& r) {
    ordered_json j;
    j["n_train"] = r.n_train;
    j["n_eval"] = r.n_eval;
    j["train_accuracy"] = r.train_accuracy;
    j["eval_accuracy"] = r.eval_accuracy;
    j["eval"] = report_json(r.eval);
    return j;
}

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int infer_classes(const std::vector<int>& labels) {
    int mx = -1;
    for (int y : labels) mx = std::max(mx, y);
    if (mx < 1) throw fomo::ValidationError("probe: labels define fewer than 2 classes");
    return mx + 1;
}

// ---- pretrain ----------------------------------------------------------

struct PretrainArgs {
    std::string config;
    std::string resume;
    ConfigOverrides ov;
};

template <typename T>
int pretrain_run(const fomo::RunConfig& cfg, const PretrainArgs& args) {
    const fomo::BandRegistry registry = load_registry(cfg.registry_path);
    std::vector<fomo::DatasetSpec> datasets = load_datasets(cfg, registry);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream metrics(cfg.out_dir + "/metrics.jsonl", std::ios::trunc);
    if (!metrics) throw fomo::StorageError("cannot open metrics log in " + cfg.out_dir);

    fomo::Trainer<T> trainer(cfg, registry, std::move(datasets), &metrics);
    if (args.resume.empty()) {
        trainer.init_params();
    } else {
        trainer.restore(args.resume);
    }
    const fomo::TrainSummary summary = trainer.run();

    ordered_json out;
    out["steps_run"] = summary.steps_run;
    out["initial_smoothed"] = summary.initial_smoothed;
    out["final_smoothed"] = summary.final_smoothed;
    out["last_loss"] = summary.last_loss;
    out["checkpoint"] = summary.checkpoint_path;
    out["metrics_log"] = cfg.out_dir + "/metrics.jsonl";
    out["param_count"] = trainer.params().total_params();
    out["param_hash"] = hash_hex(trainer.params().hash());
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_pretrain(const PretrainArgs& args) {
    const fomo::RunConfig cfg = load_config(args.config, args.ov);
    return cfg.precision == 32 ? pretrain_run<float>(cfg, args) : pretrain_run<double>(cfg, args);
}

// ---- probe -------------------------------------------------------------

struct ProbeArgs {
    std::string ckpt;
    std::string dataset;
    std::string task = "cls";
    std::string bands;
    int classes = 0;
    int hidden = 64;
    fomo::ProbeConfig cfg;
    std::uint64_t seed = 0;
};

template <typename T>
int probe_run(const fomo::CheckpointData& ck, const ProbeArgs& args) {
    const fomo::RunConfig cfg = fomo::config_from_checkpoint(ck);
    const fomo::BandRegistry registry = load_registry(cfg.registry_path);
    const fomo::ModelDims dims =
        fomo::ModelDims::resolve(cfg.model, registry.size(), cfg.sampler.train_size);
    const fomo::ParamStore<T> params = fomo::params_from_checkpoint<T>(ck, dims);
    const fomo::DatasetSpec dataset = fomo::load_manifest(args.dataset);

    std::vector<int> bands =
        args.bands.empty() ? dataset.bands : parse_band_list(args.bands);
    const std::uint64_t hash_before = params.hash();

    ordered_json out;
    out["task"] = args.task;
    out["bands"] = bands;
    out["dataset"] = dataset.name;
    if (args.task == "cls") {
        const fomo::FeatureBatch fb =
            fomo::extract_features(params, dims, dataset, bands, cfg.sampler.train_size);
        const int n_classes = args.classes > 0 ? args.classes : infer_classes(fb.labels);
        const fomo::ProbeResult res = fomo::fit_probe(fb.features, fb.labels, n_classes, args.cfg);
        out["probe"] = probe_json(res);
    } else if (args.task == "seg") {
        fomo::RngStream rng(args.seed, "seg-head");
        const int n_classes = args.classes > 0 ? args.classes : 2;
        const fomo::SegFitResult res = fomo::fit_seg_head(
            params, dims, dataset, bands, cfg.sampler.train_size, n_classes, args.hidden,
            args.cfg, rng);
        out["seg"] = report_json(res.eval);
    } else {
        throw fomo::ValidationError("probe: task must be cls or seg, got " + args.task);
    }
    if (params.hash() != hash_before) {
        throw fomo::ContractError("probe: backbone parameters changed during evaluation");
    }
    out["param_hash"] = hash_hex(hash_before);
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_probe(const ProbeArgs& args) {
    const fomo::CheckpointData ck = fomo::load_checkpoint(args.ckpt);
    return fomo::precision_of_checkpoint(ck) == 32 ? probe_run<float>(ck, args)
                                                   : probe_run<double>(ck, args);
}

// ---- ablate ------------------------------------------------------------

struct AblateArgs {
    std::string ckpt;
    std::string plan;
    fomo::ProbeConfig cfg;
    int classes = 0;
};

template <typename T>
int ablate_run(const fomo::CheckpointData& ck, const fomo::AblationPlan& plan,
               const AblateArgs& args) {
    const fomo::RunConfig cfg = fomo::config_from_checkpoint(ck);
    const fomo::BandRegistry registry = load_registry(cfg.registry_path);
    const fomo::ModelDims dims =
        fomo::ModelDims::resolve(cfg.model, registry.size(), cfg.sampler.train_size);
    const fomo::ParamStore<T> params = fomo::params_from_checkpoint<T>(ck, dims);
    const fomo::DatasetSpec dataset = fomo::load_manifest(plan.dataset_manifest);

    int n_classes = args.classes;
    if (n_classes == 0) {
        std::vector<int> labels;
        for (const auto& s : dataset.samples) labels.push_back(s.label.value_or(-1));
        n_classes = infer_classes(labels);
    }
    const fomo::AblationReport rep = fomo::run_ablation(
        plan, params, dims, registry, dataset, cfg.sampler.train_size, n_classes, args.cfg);

    ordered_json out;
    out["param_hash"] = hash_hex(rep.param_hash);
    out["dataset"] = dataset.name;
    ordered_json rows = ordered_json::array();
    for (const auto& row : rep.rows) {
        ordered_json r;
        r["bands"] = row.bands;
        r["probe"] = probe_json(row.probe);
        rows.push_back(r);
    }
    out["rows"] = rows;
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_ablate(const AblateArgs& args) {
    fomo::AblationPlan plan = fomo::AblationPlan::from_file(args.plan);
    if (!args.ckpt.empty()) plan.checkpoint = args.ckpt;
    if (plan.checkpoint.empty()) {
        throw fomo::ValidationError("ablate: no checkpoint in plan or --ckpt");
    }
    const fomo::CheckpointData ck = fomo::load_checkpoint(plan.checkpoint);
    return fomo::precision_of_checkpoint(ck) == 32 ? ablate_run<float>(ck, plan, args)
                                                   : ablate_run<double>(ck, plan, args);
}

// ---- reconstruct -------------------------------------------------------

struct ReconstructArgs {
    std::string ckpt;
    std::string dataset;
    std::string out_dir = "recon";
    std::string sample;
    std::string bands;
    double ratio = -1.0;  // <0: checkpoint config value
    std::uint64_t seed = 0;
};

template <typename T>
int reconstruct_run(const fomo::CheckpointData& ck, const ReconstructArgs& args) {
    const fomo::RunConfig cfg = fomo::config_from_checkpoint(ck);
    const fomo::BandRegistry registry = load_registry(cfg.registry_path);
    const fomo::ModelDims dims =
        fomo::ModelDims::resolve(cfg.model, registry.size(), cfg.sampler.train_size);
    const fomo::ParamStore<T> params = fomo::params_from_checkpoint<T>(ck, dims);
    const fomo::DatasetSpec dataset = fomo::load_manifest(args.dataset);

    const fomo::SampleRef* ref = nullptr;
    if (args.sample.empty()) {
        ref = &dataset.samples.front();
    } else {
        for (const auto& s : dataset.samples) {
            if (s.id == args.sample) ref = &s;
        }
        if (!ref) {
            throw fomo::NotFoundError("reconstruct: sample " + args.sample + " not in manifest");
        }
    }
    std::vector<int> bands = args.bands.empty() ? dataset.bands : parse_band_list(args.bands);
    const double ratio = args.ratio >= 0.0 ? args.ratio : cfg.masking.ratio;
    const int size = cfg.sampler.train_size;

    fomo::SampleView<T> view;
    std::vector<fomo::Tensor<float>> raw;  // unnormalized center crops
    for (int b : bands) {
        if (!dataset.has_band(b)) {
            throw fomo::NotFoundError("reconstruct: band " + std::to_string(b) +
                                      " not in dataset " + dataset.name);
        }
        const fomo::RasterTile tile = fomo::read_tile(dataset.tile_path(*ref, b));
        fomo::Tensor<float> fitted = fomo::fit_to_size(tile, size, 0.5, 0.5);
        raw.push_back(fitted);
        const fomo::BandStats st = dataset.stats.at(b);
        fomo::Tensor<T> norm(fitted.shape);
        for (std::size_t i = 0; i < fitted.data.size(); ++i) {
            norm.data[i] = static_cast<T>(fomo::normalize_value(fitted.data[i], st));
        }
        view.push_back({b, std::move(norm)});
    }

    const std::vector<fomo::SampleView<T>> views{std::move(view)};
    const fomo::TokenBatchData<T> batch = fomo::build_token_batch(views, dims.patch_size);
    fomo::RngStream rng(args.seed, "reconstruct");
    const fomo::MaskPlan plan = fomo::mask_tokens(batch.info, ratio, rng);

    fomo::Graph<T> g;
    fomo::GraphParams<T> gp = fomo::GraphParams<T>::leaf_all(g, params, false);
    const fomo::MaeResult<T> res =
        fomo::mae_forward(g, gp, dims, batch, plan, cfg.masking.per_patch_norm);
    const fomo::Tensor<T>& rec = g.value(res.reconstructions);

    std::filesystem::create_directories(args.out_dir);
    const fomo::PatchGrid grid{size, size, dims.patch_size};
    ordered_json files = ordered_json::array();
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
        const int b = bands[bi];
        const fomo::BandStats st = dataset.stats.at(b);
        // Composite: original values at visible patches, decoded values at
        // masked ones, everything back in pixel units.
        fomo::Tensor<float> patches = fomo::patchify(raw[bi], dims.patch_size);
        for (std::size_t mi = 0; mi < res.masked_rows.size(); ++mi) {
            const fomo::TokenInfo& ti =
                batch.info[static_cast<std::size_t>(res.masked_rows[mi])];
            if (ti.band != b) continue;
            for (std::int64_t j = 0; j < dims.patch_len(); ++j) {
                patches.at(ti.pos, j) = static_cast<float>(fomo::denormalize_value(
                    static_cast<double>(rec.data[static_cast<std::size_t>(
                        static_cast<std::int64_t>(mi) * dims.patch_len() + j)]),
                    st));
            }
        }
        const auto band_spec = registry.by_id(b);
        fomo::RasterTile target{b, size, size, band_spec.gsd_m, raw[bi].data};
        fomo::Tensor<float> recomposed = fomo::unpatchify(patches, grid);
        fomo::RasterTile recon{b, size, size, band_spec.gsd_m, recomposed.data};
        const std::string tpath =
            args.out_dir + "/" + ref->id + "_band" + std::to_string(b) + "_target.fmtl";
        const std::string rpath =
            args.out_dir + "/" + ref->id + "_band" + std::to_string(b) + "_recon.fmtl";
        fomo::write_tile(target, tpath);
        fomo::write_tile(recon, rpath);
        files.push_back(tpath);
        files.push_back(rpath);
    }
    ordered_json out;
    out["sample"] = ref->id;
    out["bands"] = bands;
    out["ratio"] = ratio;
    out["loss"] = static_cast<double>(g.value(res.loss).data[0]);
    out["files"] = files;
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_reconstruct(const ReconstructArgs& args) {
    const fomo::CheckpointData ck = fomo::load_checkpoint(args.ckpt);
    return fomo::precision_of_checkpoint(ck) == 32 ? reconstruct_run<float>(ck, args)
                                                   : reconstruct_run<double>(ck, args);
}

// ---- sample-stats ------------------------------------------------------

int cmd_sample_stats(const std::string& config, int draws, const ConfigOverrides& ov) {
    const fomo::RunConfig cfg = load_config(config, ov);
    const fomo::BandRegistry registry = load_registry(cfg.registry_path);
    const std::vector<fomo::DatasetSpec> datasets = load_datasets(cfg, registry);
    const fomo::SamplerReport rep =
        fomo::empirical_check(datasets, cfg.sampler, cfg.seed, draws);
    for (std::size_t i = 0; i < rep.dataset_names.size(); ++i) {
        ordered_json line;
        line["type"] = "dataset";
        line["name"] = rep.dataset_names[i];
        line["freq"] = rep.dataset_freq[i];
        line["expected"] = rep.dataset_expected[i];
        std::cout << line.dump() << "\n";
    }
    for (std::size_t i = 0; i < rep.k_freq.size(); ++i) {
        ordered_json line;
        line["type"] = "band_count";
        line["k"] = i + 1;
        line["freq"] = rep.k_freq[i];
        line["expected"] = rep.k_expected[i];
        std::cout << line.dump() << "\n";
    }
    ordered_json line;
    line["type"] = "summary";
    line["draws"] = rep.n_draws;
    line["chi_square_p_dataset"] = rep.chi_square_p_dataset;
    line["chi_square_p_k"] = rep.chi_square_p_k;
    std::cout << line.dump() << "\n";
    return 0;
}

// ---- gradcheck ---------------------------------------------------------

int cmd_gradcheck(const std::string& config, double tol, const ConfigOverrides& ov) {
    fomo::RunConfig cfg = load_config(config, ov);
    const fomo::BandRegistry registry = load_registry(cfg.registry_path);

    fomo::MaeCheckSpec spec;
    spec.dims =
        fomo::ModelDims::resolve(cfg.model, registry.size(), cfg.sampler.train_size);
    spec.tile_size = cfg.sampler.train_size;
    spec.n_bands_used = std::min(cfg.sampler.k_max, registry.size());
    spec.n_samples = cfg.sampler.micro_batch_size;
    spec.ratio = cfg.masking.ratio;
    spec.seed = cfg.seed;

    const fomo::GradCheckReport rep = fomo::mae_grad_check(spec);
    ordered_json out;
    out["max_rel_err"] = rep.max_rel_err;
    out["coords_checked"] = rep.coords_checked;
    out["worst_index"] = rep.worst_index;
    out["analytic_at_worst"] = rep.analytic_at_worst;
    out["numeric_at_worst"] = rep.numeric_at_worst;
    out["tol"] = tol;
    out["pass"] = rep.pass(tol);
    std::cout << out.dump() << "\n";
    return rep.pass(tol) ? 0 : 2;
}

// ---- synth -------------------------------------------------------------

struct SynthArgs {
    std::string out_dir;
    std::string registry;
    std::string name = "synth";
    std::string bands = "3,4,5,9";
    double weight = 1.0;
    int families = 4;
    int samples = 100;
    int size = 64;
    std::uint64_t seed = 0;
    double value_min = 0.0;
    double value_max = 10000.0;
    bool no_seg = false;
};

int cmd_synth(const SynthArgs& args) {
    const fomo::BandRegistry registry = load_registry(args.registry);
    fomo::SynthSpec spec;
    spec.name = args.name;
    spec.weight = args.weight;
    spec.bands = parse_band_list(args.bands);
    spec.n_samples = args.samples;
    spec.tile_size = args.size;
    spec.n_families = args.families;
    spec.seed = args.seed;
    spec.value_min = args.value_min;
    spec.value_max = args.value_max;
    spec.with_seg = !args.no_seg;
    const fomo::DatasetSpec ds = fomo::synth_dataset(spec, registry, args.out_dir);
    ordered_json out;
    out["name"] = ds.name;
    out["manifest"] = args.out_dir + "/manifest.json";
    out["samples"] = ds.samples.size();
    out["bands"] = ds.bands;
    std::cout << out.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    fomo::log_init_from_env();
    CLI::App app{"band-flexible masked-autoencoder pretraining and evaluation"};
    app.require_subcommand(1);

    PretrainArgs pre;
    auto* sub_pre = app.add_subcommand("pretrain", "run the pretraining loop");
    sub_pre->add_option("--config", pre.config, "run configuration (JSON)")->required();
    sub_pre->add_option("--resume", pre.resume, "checkpoint to continue from");
    auto* pre_seed = sub_pre->add_option("--seed", pre.ov.seed, "override config seed");
    sub_pre->add_option("--precision", pre.ov.precision, "32 or 64")
        ->check(CLI::IsMember({0, 32, 64}));
    sub_pre->add_option("--workers", pre.ov.workers, "thread count (0: all cores)");
    sub_pre->add_option("--out", pre.ov.out, "output directory override");

    ProbeArgs prb;
    auto* sub_prb = app.add_subcommand("probe", "frozen-feature evaluation");
    sub_prb->add_option("--ckpt", prb.ckpt, "checkpoint file")->required();
    sub_prb->add_option("--dataset", prb.dataset, "dataset manifest")->required();
    sub_prb->add_option("--task", prb.task, "cls or seg");
    sub_prb->add_option("--bands", prb.bands, "band ids, comma separated (default: all)");
    sub_prb->add_option("--classes", prb.classes, "class count (default: infer)");
    sub_prb->add_option("--hidden", prb.hidden, "seg head hidden width");
    sub_prb->add_option("--epochs", prb.cfg.epochs, "head training epochs");
    sub_prb->add_option("--lr", prb.cfg.lr, "head learning rate");
    sub_prb->add_option("--l2", prb.cfg.l2, "head weight penalty");
    sub_prb->add_option("--eval-frac", prb.cfg.eval_frac, "held-out tail fraction");
    sub_prb->add_option("--seed", prb.seed, "head init seed (seg)");

    AblateArgs abl;
    auto* sub_abl = app.add_subcommand("ablate", "evaluate band subsets on one checkpoint");
    sub_abl->add_option("--plan", abl.plan, "ablation plan (JSON)")->required();
    sub_abl->add_option("--ckpt", abl.ckpt, "checkpoint override");
    sub_abl->add_option("--classes", abl.classes, "class count (default: infer)");
    sub_abl->add_option("--epochs", abl.cfg.epochs, "head training epochs");
    sub_abl->add_option("--lr", abl.cfg.lr, "head learning rate");
    sub_abl->add_option("--l2", abl.cfg.l2, "head weight penalty");

    ReconstructArgs rec;
    auto* sub_rec = app.add_subcommand("reconstruct", "write target/reconstruction tiles");
    sub_rec->add_option("--ckpt", rec.ckpt, "checkpoint file")->required();
    sub_rec->add_option("--dataset", rec.dataset, "dataset manifest")->required();
    sub_rec->add_option("--out", rec.out_dir, "output directory");
    sub_rec->add_option("--sample", rec.sample, "sample id (default: first)");
    sub_rec->add_option("--bands", rec.bands, "band ids, comma separated");
    sub_rec->add_option("--ratio", rec.ratio, "masking ratio override");
    sub_rec->add_option("--seed", rec.seed, "mask seed");

    std::string ss_config;
    int ss_draws = 10000;
    ConfigOverrides ss_ov;
    auto* sub_ss = app.add_subcommand("sample-stats", "empirical sampler distribution check");
    sub_ss->add_option("--config", ss_config, "run configuration (JSON)")->required();
    sub_ss->add_option("--draws", ss_draws, "number of micro-batch plans");
    auto* ss_seed = sub_ss->add_option("--seed", ss_ov.seed, "override config seed");

    std::string gc_config;
    double gc_tol = 1e-4;
    ConfigOverrides gc_ov;
    auto* sub_gc = app.add_subcommand("gradcheck", "finite-difference check of the loss gradient");
    sub_gc->add_option("--config", gc_config, "run configuration (JSON)")->required();
    sub_gc->add_option("--tol", gc_tol, "max relative error accepted");
    auto* gc_seed = sub_gc->add_option("--seed", gc_ov.seed, "override config seed");

    SynthArgs syn;
    auto* sub_syn = app.add_subcommand("synth", "generate a synthetic corpus");
    sub_syn->add_option("--out", syn.out_dir, "output directory")->required();
    sub_syn->add_option("--registry", syn.registry, "band registry (default: built-in)");
    sub_syn->add_option("--name", syn.name, "dataset name");
    sub_syn->add_option("--bands", syn.bands, "band ids, comma separated");
    sub_syn->add_option("--weight", syn.weight, "sampling weight in the manifest");
    sub_syn->add_option("--families", syn.families, "pattern family count (1..4)");
    sub_syn->add_option("--samples", syn.samples, "sample count");
    sub_syn->add_option("--size", syn.size, "tile edge, pixels");
    sub_syn->add_option("--seed", syn.seed, "generator seed");
    sub_syn->add_option("--min", syn.value_min, "value range lower edge");
    sub_syn->add_option("--max", syn.value_max, "value range upper edge");
    sub_syn->add_flag("--no-seg", syn.no_seg, "skip per-pixel masks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        pre.ov.seed_set = pre_seed->count() > 0;
        ss_ov.seed_set = ss_seed->count() > 0;
        gc_ov.seed_set = gc_seed->count() > 0;
        if (sub_pre->parsed()) return cmd_pretrain(pre);
        if (sub_prb->parsed()) return cmd_probe(prb);
        if (sub_abl->parsed()) return cmd_ablate(abl);
        if (sub_rec->parsed()) return cmd_reconstruct(rec);
        if (sub_ss->parsed()) return cmd_sample_stats(ss_config, ss_draws, ss_ov);
        if (sub_gc->parsed()) return cmd_gradcheck(gc_config, gc_tol, gc_ov);
        if (sub_syn->parsed()) return cmd_synth(syn);
        std::cerr << app.help() << std::flush;
        return 1;
    } catch (const fomo::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
