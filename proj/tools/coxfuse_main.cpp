#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coxfuse/data_model.hpp"
#include "coxfuse/errors.hpp"
#include "coxfuse/models.hpp"
#include "coxfuse/pipeline.hpp"
#include "coxfuse/report_io.hpp"
#include "coxfuse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace coxfuse;

namespace {

std::string dataset_tag(const std::string& path) {
    fs::path p(path);
    if (p.filename().empty()) p = p.parent_path();
    const std::string tag = p.filename().string();
    return tag.empty() ? path : tag;
}

nlohmann::json load_json_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(report::read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

struct ConfigFlags {
    CLI::Option* k_per_layer = nullptr;
    CLI::Option* fingerprints = nullptr;
    CLI::Option* hidden = nullptr;
    CLI::Option* epochs = nullptr;
    CLI::Option* learning_rate = nullptr;
    CLI::Option* l2_lambda = nullptr;
    CLI::Option* dropout = nullptr;
    CLI::Option* noise_std = nullptr;
    CLI::Option* t0 = nullptr;
    CLI::Option* tb = nullptr;
    CLI::Option* select_alpha = nullptr;
    CLI::Option* cox_fallback = nullptr;
    CLI::Option* folds = nullptr;
    CLI::Option* repeats = nullptr;
    CLI::Option* seed = nullptr;

    pipeline::PipelineConfig staged;

    void attach(CLI::App* cmd) {
        k_per_layer = cmd->add_option("--k-per-layer", staged.k_per_layer,
                                      "variance screen width per omics layer");
        fingerprints = cmd->add_option("--fingerprints", staged.n_fingerprints,
                                       "latent fingerprint count");
        hidden = cmd->add_option("--hidden", staged.hidden, "hidden layer width");
        epochs = cmd->add_option("--epochs", staged.epochs, "training epochs");
        learning_rate = cmd->add_option("--learning-rate", staged.learning_rate,
                                        "Adam learning rate");
        l2_lambda = cmd->add_option("--l2-lambda", staged.l2_lambda, "L2 weight penalty");
        dropout = cmd->add_option("--dropout", staged.dropout, "dropout rate");
        noise_std = cmd->add_option("--noise-std", staged.noise_std,
                                    "denoising input noise std");
        t0 = cmd->add_option("--t0", staged.t0, "initial concrete temperature");
        tb = cmd->add_option("--tb", staged.tb, "final concrete temperature");
        select_alpha = cmd->add_option("--select-alpha", staged.select_alpha,
                                       "fingerprint screen p threshold");
        cox_fallback = cmd->add_option("--cox-fallback-penalty", staged.cox_fallback_penalty,
                                       "ridge penalty used when Cox fails to converge");
        folds = cmd->add_option("--folds", staged.folds, "cross-validation folds");
        repeats = cmd->add_option("--repeats", staged.repeats, "cross-validation repeats");
        seed = cmd->add_option("--seed", staged.master_seed, "master seed");
    }

    void apply(pipeline::PipelineConfig& cfg) const {
        if (k_per_layer->count()) cfg.k_per_layer = staged.k_per_layer;
        if (fingerprints->count()) cfg.n_fingerprints = staged.n_fingerprints;
        if (hidden->count()) cfg.hidden = staged.hidden;
        if (epochs->count()) cfg.epochs = staged.epochs;
        if (learning_rate->count()) cfg.learning_rate = staged.learning_rate;
        if (l2_lambda->count()) cfg.l2_lambda = staged.l2_lambda;
        if (dropout->count()) cfg.dropout = staged.dropout;
        if (noise_std->count()) cfg.noise_std = staged.noise_std;
        if (t0->count()) cfg.t0 = staged.t0;
        if (tb->count()) cfg.tb = staged.tb;
        if (select_alpha->count()) cfg.select_alpha = staged.select_alpha;
        if (cox_fallback->count()) cfg.cox_fallback_penalty = staged.cox_fallback_penalty;
        if (folds->count()) cfg.folds = staged.folds;
        if (repeats->count()) cfg.repeats = staged.repeats;
        if (seed->count()) cfg.master_seed = staged.master_seed;
    }
};

pipeline::PipelineConfig build_config(const std::string& config_path,
                                      const ConfigFlags& flags) {
    pipeline::PipelineConfig cfg;
    if (!config_path.empty()) cfg = pipeline::config_from_json(load_json_file(config_path));
    flags.apply(cfg);
    pipeline::validate_config(cfg);
    return cfg;
}

int do_run(const std::string& data_dir, const std::string& model_name,
           const std::string& out_dir, const pipeline::PipelineConfig& cfg) {
    const models::ModelKind kind = models::kind_from_string(model_name);
    const data::MultiOmicsDataset dataset = data::load_dataset(data_dir);
    const pipeline::CvReport rep =
        pipeline::cross_validate(dataset, kind, cfg, dataset_tag(data_dir));

    const fs::path out(out_dir);
    report::write_text_file(out / "report.csv", report::cv_csv(rep));
    report::write_text_file(out / "report.json", report::cv_json(rep).dump(2) + "\n");
    report::write_text_file(out / "manifest.json",
                            report::manifest_json(cfg, rep.model, data_dir).dump(2) + "\n");

    std::cout << "model " << rep.model << " on " << rep.dataset << ": " << rep.n_success
              << "/" << rep.folds.size() << " folds, mean C-index " << rep.mean_c_index
              << " (sd " << rep.std_c_index << ")\n";
    std::cout << "wrote " << (out / "report.csv").string() << ", report.json, manifest.json\n";
    return 0;
}

int do_compare(const std::vector<std::string>& report_paths, const std::string& out_dir) {
    std::vector<pipeline::CvReport> reports;
    reports.reserve(report_paths.size());
    for (const auto& p : report_paths)
        reports.push_back(report::cv_from_json(load_json_file(p)));
    const pipeline::ModelComparison cmp = pipeline::compare_models(reports);

    const fs::path out(out_dir);
    report::write_text_file(out / "ranks.csv", report::ranks_csv(cmp));
    report::write_text_file(out / "dataset_means.csv", report::dataset_means_csv(cmp));
    report::write_text_file(out / "pairwise_tests.csv", report::pairwise_csv(cmp));
    report::write_text_file(out / "violin.csv", report::violin_csv(reports));

    std::cout << report::comparison_text(cmp);
    std::cout << "wrote comparison tables to " << out.string() << "\n";
    return 0;
}

int do_km(const std::string& report_path, const std::string& data_dir,
          const std::string& out_dir, std::size_t repeat) {
    const pipeline::CvReport rep = report::cv_from_json(load_json_file(report_path));
    const data::MultiOmicsDataset dataset = data::load_dataset(data_dir);

    const std::vector<int> groups =
        report::risk_groups_for_repeat(rep, repeat, dataset.n_samples());
    std::vector<std::size_t> assigned;
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (groups[i] >= 0) assigned.push_back(i);
    if (assigned.empty()) throw DataError("missing cluster labels");
    const data::SurvivalLabels labels = data::take_rows(dataset.survival, assigned);
    std::vector<int> sub_groups;
    sub_groups.reserve(assigned.size());
    for (std::size_t i : assigned) sub_groups.push_back(groups[i]);

    const report::KmExport e = report::make_km_export(labels, sub_groups);
    const fs::path out(out_dir);
    report::write_text_file(out / "km.csv", report::km_csv(e));
    report::write_text_file(out / "km.svg", report::km_svg(e));

    std::cout << "km export: high n=" << e.n_high << ", low n=" << e.n_low
              << ", logrank p = " << e.logrank_p << "\n";
    std::cout << "wrote " << (out / "km.csv").string() << " and km.svg\n";
    return 0;
}

int do_stability(const std::string& data_dir, const std::string& model_name,
                 std::size_t runs, const std::string& out_dir,
                 const pipeline::PipelineConfig& cfg) {
    const models::ModelKind kind = models::kind_from_string(model_name);
    const data::MultiOmicsDataset dataset = data::load_dataset(data_dir);
    const pipeline::StabilityReport rep =
        pipeline::stability_analysis(dataset, kind, runs, cfg);

    const fs::path out(out_dir);
    report::write_text_file(out / "layer_counts.csv", report::layer_counts_csv(rep));
    report::write_text_file(out / "feature_frequency.csv",
                            report::feature_frequency_csv(rep));

    std::cout << "stability: " << rep.runs << " runs, " << rep.fingerprints_per_run
              << " fingerprints per run\n";
    for (const auto& lc : rep.layer_counts)
        std::cout << "  " << lc.layer << ": " << lc.count << " (normalized "
                  << lc.normalized << ")\n";
    std::cout << "wrote " << (out / "layer_counts.csv").string()
              << " and feature_frequency.csv\n";
    return 0;
}

synth::SyntheticSpec parse_synth_spec(std::size_t samples,
                                      const std::vector<std::string>& layer_args,
                                      const std::vector<std::string>& planted_args,
                                      double censoring, std::uint64_t seed) {
    synth::SyntheticSpec spec;
    spec.n_samples = samples;
    spec.censoring_rate = censoring;
    spec.seed = seed;
    for (const auto& arg : layer_args) {
        const auto pos = arg.rfind(':');
        if (pos == std::string::npos || pos == 0 || pos + 1 >= arg.size())
            throw ConfigError("layer must look like name:width, got: " + arg);
        try {
            spec.layers.emplace_back(arg.substr(0, pos),
                                     std::stoull(arg.substr(pos + 1)));
        } catch (const std::exception&) {
            throw ConfigError("bad layer width in: " + arg);
        }
    }
    for (const auto& arg : planted_args) {
        const auto p1 = arg.find(':');
        const auto p2 = arg.rfind(':');
        if (p1 == std::string::npos || p2 == p1)
            throw ConfigError("planted must look like layer:feature:weight, got: " + arg);
        synth::PlantedWeight w;
        w.layer = arg.substr(0, p1);
        try {
            w.feature = std::stoull(arg.substr(p1 + 1, p2 - p1 - 1));
            w.weight = std::stod(arg.substr(p2 + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad planted spec: " + arg);
        }
        spec.planted.push_back(std::move(w));
    }
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"survival-supervised multi-omics integration"};
    app.set_version_flag("--version", report::kVersion);
    app.require_subcommand(1);

    const std::vector<std::string> model_names = {"pca", "ae", "sae", "csae"};

    auto* run_cmd = app.add_subcommand("run", "cross-validated evaluation of one model");
    std::string run_data, run_model, run_out, run_config;
    run_cmd->add_option("--data", run_data, "dataset directory")->required();
    run_cmd->add_option("--model", run_model, "model kind")
        ->required()
        ->check(CLI::IsMember(model_names));
    run_cmd->add_option("--out", run_out, "output directory")->required();
    run_cmd->add_option("--config", run_config, "JSON config file");
    ConfigFlags run_flags;
    run_flags.attach(run_cmd);

    auto* compare_cmd = app.add_subcommand("compare", "rank models across reports");
    std::vector<std::string> compare_reports;
    std::string compare_out;
    compare_cmd->add_option("reports", compare_reports, "report.json files")
        ->required()
        ->expected(2, -1);
    compare_cmd->add_option("--out", compare_out, "output directory")->required();

    auto* km_cmd = app.add_subcommand("km", "Kaplan-Meier export for one repeat");
    std::string km_report, km_data, km_out;
    std::size_t km_repeat = 0;
    km_cmd->add_option("--report", km_report, "report.json from a run")->required();
    km_cmd->add_option("--data", km_data, "dataset directory")->required();
    km_cmd->add_option("--out", km_out, "output directory")->required();
    km_cmd->add_option("--repeat", km_repeat, "repeat index to plot");

    auto* stab_cmd = app.add_subcommand("stability", "feature stability across refits");
    std::string stab_data, stab_model, stab_out, stab_config;
    std::size_t stab_runs = 32;
    stab_cmd->add_option("--data", stab_data, "dataset directory")->required();
    stab_cmd->add_option("--model", stab_model, "model kind")
        ->required()
        ->check(CLI::IsMember(model_names));
    stab_cmd->add_option("--out", stab_out, "output directory")->required();
    stab_cmd->add_option("--runs", stab_runs, "number of refits");
    stab_cmd->add_option("--config", stab_config, "JSON config file");
    ConfigFlags stab_flags;
    stab_flags.attach(stab_cmd);

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out;
    std::size_t synth_samples = 200;
    std::vector<std::string> synth_layers, synth_planted;
    double synth_censoring = 0.3;
    std::uint64_t synth_seed = 0;
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--samples", synth_samples, "sample count");
    synth_cmd->add_option("--layer", synth_layers, "layer as name:width (repeatable)")
        ->required();
    synth_cmd->add_option("--planted", synth_planted,
                          "hazard signal as layer:feature:weight (repeatable)");
    synth_cmd->add_option("--censoring", synth_censoring, "target censoring rate");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run_cmd) return do_run(run_data, run_model, run_out,
                                    build_config(run_config, run_flags));
        if (*compare_cmd) return do_compare(compare_reports, compare_out);
        if (*km_cmd) return do_km(km_report, km_data, km_out, km_repeat);
        if (*stab_cmd)
            return do_stability(stab_data, stab_model, stab_runs, stab_out,
                                build_config(stab_config, stab_flags));
        if (*synth_cmd) {
            const synth::SyntheticSpec spec = parse_synth_spec(
                synth_samples, synth_layers, synth_planted, synth_censoring, synth_seed);
            synth::write_dataset_tsv(synth::generate_synthetic(spec), synth_out);
            std::cout << "wrote synthetic dataset (" << spec.n_samples << " samples) to "
                      << synth_out << "\n";
            return 0;
        }
    } catch (const pipeline::AllFoldsFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
