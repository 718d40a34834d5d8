#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "coxfuse/pipeline.hpp"
#include "coxfuse/survival.hpp"

namespace coxfuse::report {

inline constexpr const char* kVersion = "1.0.0";

// CSV primitives. The writer is canonical (quotes only when required), so
// parse followed by write reproduces any file this module emitted byte for
// byte.
std::string csv_escape(const std::string& field);
std::string write_csv(const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// one row per fold: model,repeat,fold,c_index,logrank_p,failure
std::string cv_csv(const pipeline::CvReport& report);
nlohmann::json cv_json(const pipeline::CvReport& report);
pipeline::CvReport cv_from_json(const nlohmann::json& j);

// config + config hash + seed + version; no timestamps, reruns reproduce it
nlohmann::json manifest_json(const pipeline::PipelineConfig& cfg,
                             const std::string& model,
                             const std::string& dataset);

std::string ranks_csv(const pipeline::ModelComparison& cmp);
std::string dataset_means_csv(const pipeline::ModelComparison& cmp);
std::string pairwise_csv(const pipeline::ModelComparison& cmp);
std::string violin_csv(const std::vector<pipeline::CvReport>& reports);
std::string comparison_text(const pipeline::ModelComparison& cmp);

std::string layer_counts_csv(const pipeline::StabilityReport& r);
std::string feature_frequency_csv(const pipeline::StabilityReport& r);

// Risk-group assignment per dataset row for one repeat of a CV report:
// 1 = high risk, 0 = low risk, -1 = not assigned (fold failed).
std::vector<int> risk_groups_for_repeat(const pipeline::CvReport& report,
                                        std::size_t repeat,
                                        std::size_t n_samples);

struct KmExport {
    surv::KmCurve high;
    surv::KmCurve low;
    std::vector<double> high_censor_times;
    std::vector<double> low_censor_times;
    std::size_t n_high = 0;
    std::size_t n_low = 0;
    double logrank_p = std::numeric_limits<double>::quiet_NaN();
};

// groups: 1 = high risk, 0 = low risk, one entry per label row.
KmExport make_km_export(const data::SurvivalLabels& labels,
                        const std::vector<int>& groups);

// group,time,survival,at_risk,events
std::string km_csv(const KmExport& e);
// self-contained static SVG: two step curves, censor ticks, p in the title
std::string km_svg(const KmExport& e);

}  // namespace coxfuse::report
