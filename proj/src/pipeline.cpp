#include "coxfuse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coxfuse/errors.hpp"
#include "coxfuse/linalg.hpp"
#include "coxfuse/rng.hpp"
#include "coxfuse/survival.hpp"

namespace coxfuse::pipeline {

namespace {

using nlohmann::json;

std::size_t get_count(const json& v, const std::string& key) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("config key '" + key + "' must be an integer");
    auto raw = v.get<long long>();
    if (raw < 0) throw ConfigError("config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(raw);
}

double get_real(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return v.get<double>();
}

bool get_flag(const json& v, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
    return v.get<bool>();
}

std::uint64_t get_seed(const json& v, const std::string& key) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("config key '" + key + "' must be an integer");
    if (v.is_number_integer() && v.get<long long>() < 0)
        throw ConfigError("config key '" + key + "' must be non-negative");
    return v.get<std::uint64_t>();
}

void require_positive(double value, const std::string& key) {
    if (!(value > 0.0)) throw ConfigError("config key '" + key + "' must be positive");
}

void require_positive(std::size_t value, const std::string& key) {
    if (value == 0) throw ConfigError("config key '" + key + "' must be positive");
}

int worker_count() {
    if (const char* env = std::getenv("COXFUSE_WORKERS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "k_per_layer") cfg.k_per_layer = get_count(value, key);
        else if (key == "n_fingerprints") cfg.n_fingerprints = get_count(value, key);
        else if (key == "hidden") cfg.hidden = get_count(value, key);
        else if (key == "epochs") cfg.epochs = get_count(value, key);
        else if (key == "learning_rate") cfg.learning_rate = get_real(value, key);
        else if (key == "l2_lambda") cfg.l2_lambda = get_real(value, key);
        else if (key == "dropout") cfg.dropout = get_real(value, key);
        else if (key == "noise_std") cfg.noise_std = get_real(value, key);
        else if (key == "t0") cfg.t0 = get_real(value, key);
        else if (key == "tb") cfg.tb = get_real(value, key);
        else if (key == "select_alpha") cfg.select_alpha = get_real(value, key);
        else if (key == "cox_fallback_penalty") cfg.cox_fallback_penalty = get_real(value, key);
        else if (key == "folds") cfg.folds = get_count(value, key);
        else if (key == "repeats") cfg.repeats = get_count(value, key);
        else if (key == "master_seed") cfg.master_seed = get_seed(value, key);
        else if (key == "selection_on_train_only") cfg.selection_on_train_only = get_flag(value, key);
        else if (key == "kmeans") {
            if (!value.is_object()) throw ConfigError("config key 'kmeans' must be an object");
            for (const auto& [kk, vv] : value.items()) {
                const std::string path = "kmeans." + kk;
                if (kk == "k") cfg.kmeans.k = get_count(vv, path);
                else if (kk == "n_init") cfg.kmeans.n_init = get_count(vv, path);
                else if (kk == "max_iter") cfg.kmeans.max_iter = get_count(vv, path);
                else if (kk == "tol") cfg.kmeans.tol = get_real(vv, path);
                else throw ConfigError("unknown config key: " + path);
            }
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }
    validate_config(cfg);
    return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["k_per_layer"] = cfg.k_per_layer;
    j["n_fingerprints"] = cfg.n_fingerprints;
    j["hidden"] = cfg.hidden;
    j["epochs"] = cfg.epochs;
    j["learning_rate"] = cfg.learning_rate;
    j["l2_lambda"] = cfg.l2_lambda;
    j["dropout"] = cfg.dropout;
    j["noise_std"] = cfg.noise_std;
    j["t0"] = cfg.t0;
    j["tb"] = cfg.tb;
    j["select_alpha"] = cfg.select_alpha;
    j["cox_fallback_penalty"] = cfg.cox_fallback_penalty;
    j["kmeans"] = {{"k", cfg.kmeans.k},
                   {"n_init", cfg.kmeans.n_init},
                   {"max_iter", cfg.kmeans.max_iter},
                   {"tol", cfg.kmeans.tol}};
    j["folds"] = cfg.folds;
    j["repeats"] = cfg.repeats;
    j["master_seed"] = cfg.master_seed;
    j["selection_on_train_only"] = cfg.selection_on_train_only;
    return j;
}

void validate_config(const PipelineConfig& cfg) {
    require_positive(cfg.k_per_layer, "k_per_layer");
    require_positive(cfg.n_fingerprints, "n_fingerprints");
    require_positive(cfg.hidden, "hidden");
    require_positive(cfg.epochs, "epochs");
    require_positive(cfg.learning_rate, "learning_rate");
    if (cfg.l2_lambda < 0.0) throw ConfigError("config key 'l2_lambda' must be non-negative");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
        throw ConfigError("config key 'dropout' must be in [0, 1)");
    if (cfg.noise_std < 0.0) throw ConfigError("config key 'noise_std' must be non-negative");
    require_positive(cfg.t0, "t0");
    require_positive(cfg.tb, "tb");
    if (!(cfg.select_alpha > 0.0) || !(cfg.select_alpha < 1.0))
        throw ConfigError("config key 'select_alpha' must be in (0, 1)");
    if (cfg.cox_fallback_penalty < 0.0)
        throw ConfigError("config key 'cox_fallback_penalty' must be non-negative");
    if (cfg.kmeans.k != 2) throw ConfigError("config key 'kmeans.k' must be 2");
    require_positive(cfg.kmeans.n_init, "kmeans.n_init");
    require_positive(cfg.kmeans.max_iter, "kmeans.max_iter");
    require_positive(cfg.kmeans.tol, "kmeans.tol");
    if (cfg.folds < 2) throw ConfigError("config key 'folds' must be at least 2");
    require_positive(cfg.repeats, "repeats");
}

models::ModelConfig model_config(const PipelineConfig& cfg) {
    models::ModelConfig mc;
    mc.n_fingerprints = cfg.n_fingerprints;
    mc.hidden = cfg.hidden;
    mc.epochs = cfg.epochs;
    mc.learning_rate = cfg.learning_rate;
    mc.l2_lambda = cfg.l2_lambda;
    mc.dropout = cfg.dropout;
    mc.noise_std = cfg.noise_std;
    mc.t0 = cfg.t0;
    mc.tb = cfg.tb;
    return mc;
}

std::vector<std::vector<FoldSplit>> make_folds(std::size_t n, std::size_t folds,
                                               std::size_t repeats,
                                               std::uint64_t master_seed) {
    if (folds == 0) throw ConfigError("config key 'folds' must be positive");
    if (n < folds) throw DataError("fewer samples than folds");
    std::vector<std::vector<FoldSplit>> out(repeats);
    const std::size_t base = n / folds;
    const std::size_t rem = n % folds;
    for (std::size_t r = 0; r < repeats; ++r) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(derive_seed(master_seed, r, 0xF01d));
        rng.shuffle(perm);
        out[r].resize(folds);
        std::size_t offset = 0;
        for (std::size_t f = 0; f < folds; ++f) {
            const std::size_t len = base + (f < rem ? 1 : 0);
            FoldSplit& split = out[r][f];
            split.test.assign(perm.begin() + offset, perm.begin() + offset + len);
            split.train.reserve(n - len);
            split.train.insert(split.train.end(), perm.begin(), perm.begin() + offset);
            split.train.insert(split.train.end(), perm.begin() + offset + len, perm.end());
            std::sort(split.test.begin(), split.test.end());
            std::sort(split.train.begin(), split.train.end());
            offset += len;
        }
    }
    return out;
}

namespace {

void check_fold_indices(std::size_t n, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& test) {
    if (train.empty() || test.empty())
        throw std::invalid_argument("fold index sets must be non-empty");
    std::vector<std::uint8_t> seen(n, 0);
    for (std::size_t i : train) {
        if (i >= n) throw std::invalid_argument("train index out of range");
        if (seen[i]) throw std::invalid_argument("duplicate train index");
        seen[i] = 1;
    }
    for (std::size_t i : test) {
        if (i >= n) throw std::invalid_argument("test index out of range");
        if (seen[i] == 1) throw std::invalid_argument("train and test indices overlap");
        if (seen[i] == 2) throw std::invalid_argument("duplicate test index");
        seen[i] = 2;
    }
}

std::vector<double> linear_hazards(const Matrix& x, const std::vector<double>& beta) {
    std::vector<double> eta(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) acc += row[j] * beta[j];
        eta[i] = acc;
    }
    return eta;
}

}  // namespace

FoldResult run_fold(const data::MultiOmicsDataset& dataset,
                    const std::vector<std::size_t>& train_idx,
                    const std::vector<std::size_t>& test_idx,
                    models::ModelKind kind, const PipelineConfig& cfg,
                    std::uint64_t seed, FoldArtifacts* artifacts) {
    const std::size_t n = dataset.n_samples();
    check_fold_indices(n, train_idx, test_idx);

    FoldResult result;
    result.test_indices = test_idx;
    try {
        // A: per-layer variance screen, on training rows unless configured off
        std::vector<std::vector<std::size_t>> selection;
        selection.reserve(dataset.layers.size());
        for (const auto& layer : dataset.layers) {
            if (cfg.selection_on_train_only)
                selection.push_back(data::variance_topk(layer, cfg.k_per_layer, train_idx));
            else
                selection.push_back(data::variance_topk(layer, cfg.k_per_layer));
        }

        // B: concatenate and z-score with train statistics
        auto [full_x, refs] = data::concat_selected(dataset, selection);
        const Matrix x_train = data::take_rows(full_x, train_idx);
        const Matrix x_test = data::take_rows(full_x, test_idx);
        const data::SurvivalLabels y_train = data::take_rows(dataset.survival, train_idx);
        const data::SurvivalLabels y_test = data::take_rows(dataset.survival, test_idx);
        const data::Scaler scaler = data::zscore_fit(x_train);
        const Matrix z_train = data::zscore_apply(scaler, x_train);
        const Matrix z_test = data::zscore_apply(scaler, x_test);

        // C: fit the fingerprint model on train, transform both sides
        auto model = models::make_model(kind);
        model->fit(z_train, y_train, model_config(cfg), derive_seed(seed, 11));
        const Matrix f_train = model->transform(z_train);
        const Matrix f_test = model->transform(z_test);

        // D: univariate Cox screen on train fingerprints
        result.selected_fingerprints = surv::univariate_cox_select(
            f_train, y_train, cfg.select_alpha, cfg.cox_fallback_penalty);
        const Matrix s_train = data::take_cols(f_train, result.selected_fingerprints);
        const Matrix s_test = data::take_cols(f_test, result.selected_fingerprints);

        // E: cluster train fingerprints, assign test, logrank on test groups
        const KMeansResult km = kmeans_fit(s_train, cfg.kmeans, derive_seed(seed, 12));
        result.cluster_labels = kmeans_assign(km.centroids, s_test);
        const std::vector<std::size_t> train_clusters = kmeans_assign(km.centroids, s_train);
        std::vector<std::uint8_t> groups(result.cluster_labels.size());
        std::size_t in_group1 = 0;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            groups[i] = static_cast<std::uint8_t>(result.cluster_labels[i]);
            in_group1 += groups[i];
        }
        if (in_group1 > 0 && in_group1 < groups.size() && y_test.n_events() > 0)
            result.logrank_p = surv::logrank_test(y_test, groups).p;

        // F: multivariable Cox on the selected train fingerprints
        surv::CoxModel cox = surv::cox_fit(s_train, y_train, 0.0);
        if (!cox.converged) cox = surv::cox_fit(s_train, y_train, cfg.cox_fallback_penalty);
        if (!cox.converged) throw DataError("cox regression did not converge");
        result.c_index = surv::concordance_index(linear_hazards(s_test, cox.beta), y_test);

        const std::vector<double> eta_train = linear_hazards(s_train, cox.beta);
        double mean[2] = {0.0, 0.0};
        std::size_t count[2] = {0, 0};
        for (std::size_t i = 0; i < eta_train.size(); ++i) {
            mean[train_clusters[i]] += eta_train[i];
            ++count[train_clusters[i]];
        }
        for (int g = 0; g < 2; ++g)
            if (count[g] > 0) mean[g] /= static_cast<double>(count[g]);
        result.high_risk_cluster = (count[1] > 0 && mean[1] > mean[0]) ? 1 : 0;

        if (artifacts) {
            artifacts->selection = std::move(selection);
            artifacts->scaler = scaler;
            artifacts->model_json = model->to_json().dump();
            artifacts->centroids = km.centroids;
            artifacts->cox_beta = cox.beta;
        }
    } catch (const std::exception& e) {
        result = FoldResult{};
        result.test_indices = test_idx;
        result.failure = e.what();
    }
    return result;
}

CvReport cross_validate(const data::MultiOmicsDataset& dataset,
                        models::ModelKind kind, const PipelineConfig& cfg,
                        const std::string& dataset_tag) {
    validate_config(cfg);
    const auto splits = make_folds(dataset.n_samples(), cfg.folds, cfg.repeats,
                                   cfg.master_seed);

    CvReport report;
    report.model = models::to_string(kind);
    report.dataset = dataset_tag;
    report.config = cfg;
    report.folds.resize(cfg.repeats * cfg.folds);

    const long long total = static_cast<long long>(report.folds.size());
    const int workers = worker_count();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
    for (long long t = 0; t < total; ++t) {
        const std::size_t r = static_cast<std::size_t>(t) / cfg.folds;
        const std::size_t f = static_cast<std::size_t>(t) % cfg.folds;
        const std::uint64_t fold_seed = derive_seed(cfg.master_seed, r, f + 1);
        FoldResult res;
        try {
            res = run_fold(dataset, splits[r][f].train, splits[r][f].test, kind,
                           cfg, fold_seed);
        } catch (const std::exception& e) {
            res.failure = e.what();
            res.test_indices = splits[r][f].test;
        }
        res.repeat_index = r;
        res.fold_index = f;
        report.folds[static_cast<std::size_t>(t)] = std::move(res);
    }
    (void)workers;

    double sum = 0.0;
    for (const auto& fr : report.folds) {
        if (!fr.ok()) continue;
        ++report.n_success;
        sum += fr.c_index;
    }
    if (report.n_success == 0) throw AllFoldsFailed{};
    report.mean_c_index = sum / static_cast<double>(report.n_success);
    double sq = 0.0;
    for (const auto& fr : report.folds) {
        if (!fr.ok()) continue;
        const double d = fr.c_index - report.mean_c_index;
        sq += d * d;
    }
    report.std_c_index = std::sqrt(sq / static_cast<double>(report.n_success));
    return report;
}

namespace {

// key identifying one fold across models: dataset tag + repeat + fold
using FoldKey = std::tuple<std::string, std::size_t, std::size_t>;

std::map<FoldKey, double> success_map(const CvReport& r) {
    std::map<FoldKey, double> m;
    for (const auto& fr : r.folds)
        if (fr.ok()) m[{r.dataset, fr.repeat_index, fr.fold_index}] = fr.c_index;
    return m;
}

double sample_variance(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

ModelComparison compare_models(const std::vector<CvReport>& reports) {
    if (reports.size() < 2) throw DataError("need at least two reports");

    ModelComparison cmp;
    std::set<std::string> model_set;
    for (const auto& r : reports) model_set.insert(r.model);

    // per-dataset per-model mean over successful folds
    std::map<std::string, std::map<std::string, double>> means;  // dataset -> model -> mean
    for (const auto& r : reports) {
        double sum = 0.0;
        std::size_t k = 0;
        for (const auto& fr : r.folds) {
            if (!fr.ok()) continue;
            sum += fr.c_index;
            ++k;
        }
        if (k == 0) continue;
        means[r.dataset][r.model] = sum / static_cast<double>(k);
        cmp.dataset_means.push_back({r.dataset, r.model, sum / static_cast<double>(k), k});
    }

    // average rank per model across datasets; rank 1 = highest mean, ties averaged
    std::map<std::string, double> rank_sum;
    std::map<std::string, std::size_t> rank_n;
    for (const auto& [ds, per_model] : means) {
        std::vector<std::pair<std::string, double>> rows(per_model.begin(), per_model.end());
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::size_t i = 0;
        while (i < rows.size()) {
            std::size_t j = i;
            while (j + 1 < rows.size() && rows[j + 1].second == rows[i].second) ++j;
            const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t t = i; t <= j; ++t) {
                rank_sum[rows[t].first] += avg_rank;
                rank_n[rows[t].first] += 1;
            }
            i = j + 1;
        }
    }
    for (const auto& [model, total] : rank_sum)
        cmp.ranks.push_back({model, total / static_cast<double>(rank_n[model])});
    std::sort(cmp.ranks.begin(), cmp.ranks.end(), [](const auto& a, const auto& b) {
        if (a.average_rank != b.average_rank) return a.average_rank < b.average_rank;
        return a.model < b.model;
    });

    // pairwise independent two-sided t-tests on pooled fold-level values,
    // restricted to folds where both models succeeded
    std::vector<std::string> model_names(model_set.begin(), model_set.end());
    std::map<std::string, std::map<FoldKey, double>> values;
    for (const auto& r : reports) {
        auto m = success_map(r);
        values[r.model].insert(m.begin(), m.end());
    }
    for (std::size_t a = 0; a < model_names.size(); ++a) {
        for (std::size_t b = a + 1; b < model_names.size(); ++b) {
            const auto& ma = values[model_names[a]];
            const auto& mb = values[model_names[b]];
            std::vector<double> xa, xb;
            for (const auto& [key, va] : ma) {
                auto it = mb.find(key);
                if (it == mb.end()) continue;
                xa.push_back(va);
                xb.push_back(it->second);
            }
            if (xa.empty()) throw DataError("no common folds");
            const double na = static_cast<double>(xa.size());
            const double nb = static_cast<double>(xb.size());
            const double mean_a = std::accumulate(xa.begin(), xa.end(), 0.0) / na;
            const double mean_b = std::accumulate(xb.begin(), xb.end(), 0.0) / nb;
            ModelComparison::PairTest test;
            test.model_a = model_names[a];
            test.model_b = model_names[b];
            test.n_a = xa.size();
            test.n_b = xb.size();
            const double dof = na + nb - 2.0;
            const double sp2 = dof > 0.0
                                   ? ((na - 1.0) * sample_variance(xa, mean_a) +
                                      (nb - 1.0) * sample_variance(xb, mean_b)) / dof
                                   : 0.0;
            if (sp2 <= 0.0 || dof <= 0.0) {
                test.t = 0.0;
                test.p = (mean_a == mean_b) ? 1.0 : 0.0;
            } else {
                test.t = (mean_a - mean_b) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
                test.p = linalg::student_t_two_sided_p(test.t, dof);
            }
            cmp.tests.push_back(test);
        }
    }
    return cmp;
}

StabilityReport stability_analysis(const data::MultiOmicsDataset& dataset,
                                   models::ModelKind kind, std::size_t runs,
                                   const PipelineConfig& cfg) {
    if (runs == 0) throw ConfigError("config key 'runs' must be positive");
    validate_config(cfg);

    std::vector<std::vector<std::size_t>> selection;
    selection.reserve(dataset.layers.size());
    for (const auto& layer : dataset.layers)
        selection.push_back(data::variance_topk(layer, cfg.k_per_layer));
    auto [x, refs] = data::concat_selected(dataset, selection);
    const data::Scaler scaler = data::zscore_fit(x);
    const Matrix z = data::zscore_apply(scaler, x);
    const models::ModelConfig mc = model_config(cfg);

    StabilityReport report;
    report.runs = runs;
    std::map<std::string, std::size_t> layer_pos;
    for (std::size_t l = 0; l < dataset.layers.size(); ++l) {
        layer_pos[dataset.layers[l].name] = l;
        report.layer_counts.push_back(
            {dataset.layers[l].name, selection[l].size(), 0, 0.0});
    }

    std::vector<std::size_t> feature_runs(refs.size(), 0);  // runs it appeared in
    std::vector<std::uint8_t> seen(refs.size(), 0);

    const long long n_runs = static_cast<long long>(runs);
    std::vector<std::vector<std::size_t>> per_run_tops(runs);
    const int workers = worker_count();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
    for (long long run = 0; run < n_runs; ++run) {
        auto model = models::make_model(kind);
        model->fit(z, dataset.survival, mc,
                   derive_seed(cfg.master_seed, static_cast<std::uint64_t>(run), 0x57AB));
        const Matrix imp = model->importance();
        std::vector<std::size_t> tops(imp.rows());
        for (std::size_t fp = 0; fp < imp.rows(); ++fp) {
            const double* row = imp.row(fp);
            std::size_t best = 0;
            for (std::size_t j = 1; j < imp.cols(); ++j)
                if (row[j] > row[best]) best = j;
            tops[fp] = best;
        }
        per_run_tops[static_cast<std::size_t>(run)] = std::move(tops);
    }
    (void)workers;

    for (std::size_t run = 0; run < runs; ++run) {
        const auto& tops = per_run_tops[run];
        if (run == 0) report.fingerprints_per_run = tops.size();
        std::fill(seen.begin(), seen.end(), 0);
        for (std::size_t feature : tops) {
            report.layer_counts[layer_pos[refs[feature].layer_name]].count += 1;
            if (!seen[feature]) {
                seen[feature] = 1;
                feature_runs[feature] += 1;
            }
        }
    }

    for (auto& lc : report.layer_counts)
        lc.normalized = lc.width > 0
                            ? static_cast<double>(lc.count) / static_cast<double>(lc.width)
                            : 0.0;

    for (std::size_t i = 0; i < refs.size(); ++i)
        if (feature_runs[i] > 0) report.feature_counts.push_back({refs[i], feature_runs[i]});
    std::sort(report.feature_counts.begin(), report.feature_counts.end(),
              [](const auto& a, const auto& b) {
                  if (a.count != b.count) return a.count > b.count;
                  return a.feature.global_index < b.feature.global_index;
              });
    return report;
}

}  // namespace coxfuse::pipeline
