#include "coxfuse/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coxfuse/errors.hpp"
#include "coxfuse/format.hpp"

namespace coxfuse::report {

namespace {

using nlohmann::json;

std::string fmt_or_empty(double v) {
    return std::isnan(v) ? std::string{} : format_double(v);
}

json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double number_from(const json& v) {
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return v.get<double>();
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt_compact(double v) {
    if (std::isnan(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

std::string csv_escape(const std::string& field) {
    const bool needs_quotes =
        field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string write_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(row[i]);
        }
        out += '\n';
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                in_quotes = false;
                ++i;
                continue;
            }
            field += c;
            ++i;
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; break;
            case ',': row.push_back(std::move(field)); field.clear(); break;
            case '\r': break;
            case '\n':
                row.push_back(std::move(field));
                field.clear();
                rows.push_back(std::move(row));
                row.clear();
                break;
            default: field += c;
        }
        ++i;
    }
    if (in_quotes) throw DataError("unterminated quoted CSV field");
    if (!field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << content;
}

std::string cv_csv(const pipeline::CvReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"model", "repeat", "fold", "c_index", "logrank_p", "failure"});
    for (const auto& fr : report.folds) {
        rows.push_back({report.model, std::to_string(fr.repeat_index),
                        std::to_string(fr.fold_index), fmt_or_empty(fr.c_index),
                        fmt_or_empty(fr.logrank_p), fr.failure});
    }
    return write_csv(rows);
}

json cv_json(const pipeline::CvReport& report) {
    json j;
    j["format_version"] = 1;
    j["model"] = report.model;
    j["dataset"] = report.dataset;
    j["config"] = pipeline::config_to_json(report.config);
    j["summary"] = {{"mean_c_index", number_or_null(report.mean_c_index)},
                    {"std_c_index", number_or_null(report.std_c_index)},
                    {"n_success", report.n_success}};
    json folds = json::array();
    for (const auto& fr : report.folds) {
        json f;
        f["repeat"] = fr.repeat_index;
        f["fold"] = fr.fold_index;
        f["c_index"] = number_or_null(fr.c_index);
        f["logrank_p"] = number_or_null(fr.logrank_p);
        f["selected_fingerprints"] = fr.selected_fingerprints;
        f["cluster_labels"] = fr.cluster_labels;
        f["test_indices"] = fr.test_indices;
        f["high_risk_cluster"] = fr.high_risk_cluster;
        f["failure"] = fr.failure;
        folds.push_back(std::move(f));
    }
    j["folds"] = std::move(folds);
    return j;
}

pipeline::CvReport cv_from_json(const json& j) {
    if (!j.is_object() || !j.contains("format_version") ||
        j.at("format_version").get<int>() != 1)
        throw DataError("unsupported report format");
    pipeline::CvReport report;
    report.model = j.at("model").get<std::string>();
    report.dataset = j.at("dataset").get<std::string>();
    report.config = pipeline::config_from_json(j.at("config"));
    const auto& summary = j.at("summary");
    report.mean_c_index = number_from(summary.at("mean_c_index"));
    report.std_c_index = number_from(summary.at("std_c_index"));
    report.n_success = summary.at("n_success").get<std::size_t>();
    for (const auto& f : j.at("folds")) {
        pipeline::FoldResult fr;
        fr.repeat_index = f.at("repeat").get<std::size_t>();
        fr.fold_index = f.at("fold").get<std::size_t>();
        fr.c_index = number_from(f.at("c_index"));
        fr.logrank_p = number_from(f.at("logrank_p"));
        fr.selected_fingerprints = f.at("selected_fingerprints").get<std::vector<std::size_t>>();
        fr.cluster_labels = f.at("cluster_labels").get<std::vector<std::size_t>>();
        fr.test_indices = f.at("test_indices").get<std::vector<std::size_t>>();
        fr.high_risk_cluster = f.at("high_risk_cluster").get<int>();
        fr.failure = f.at("failure").get<std::string>();
        report.folds.push_back(std::move(fr));
    }
    return report;
}

json manifest_json(const pipeline::PipelineConfig& cfg, const std::string& model,
                   const std::string& dataset) {
    const json config = pipeline::config_to_json(cfg);
    json j;
    j["config"] = config;
    j["config_hash"] = fnv1a_hex(config.dump());
    j["dataset"] = dataset;
    j["master_seed"] = cfg.master_seed;
    j["model"] = model;
    j["version"] = kVersion;
    return j;
}

std::string ranks_csv(const pipeline::ModelComparison& cmp) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"model", "average_rank"});
    for (const auto& r : cmp.ranks)
        rows.push_back({r.model, format_double(r.average_rank)});
    return write_csv(rows);
}

std::string dataset_means_csv(const pipeline::ModelComparison& cmp) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"dataset", "model", "mean_c_index", "n_folds"});
    for (const auto& m : cmp.dataset_means)
        rows.push_back({m.dataset, m.model, format_double(m.mean_c_index),
                        std::to_string(m.n_folds)});
    return write_csv(rows);
}

std::string pairwise_csv(const pipeline::ModelComparison& cmp) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"model_a", "model_b", "t", "p", "n_a", "n_b"});
    for (const auto& t : cmp.tests)
        rows.push_back({t.model_a, t.model_b, format_double(t.t), format_double(t.p),
                        std::to_string(t.n_a), std::to_string(t.n_b)});
    return write_csv(rows);
}

std::string violin_csv(const std::vector<pipeline::CvReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"model", "dataset", "repeat", "fold", "c_index"});
    for (const auto& r : reports) {
        for (const auto& fr : r.folds) {
            if (!fr.ok()) continue;
            rows.push_back({r.model, r.dataset, std::to_string(fr.repeat_index),
                            std::to_string(fr.fold_index), format_double(fr.c_index)});
        }
    }
    return write_csv(rows);
}

std::string comparison_text(const pipeline::ModelComparison& cmp) {
    std::ostringstream out;
    out << "average ranks (1 = best)\n";
    for (const auto& r : cmp.ranks) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "  %-8s %.2f\n", r.model.c_str(), r.average_rank);
        out << buf;
    }
    out << "\npairwise independent t-tests\n";
    for (const auto& t : cmp.tests) {
        out << "  " << t.model_a << " vs " << t.model_b << ": t = " << fmt_compact(t.t)
            << ", p = " << fmt_compact(t.p) << " (n = " << t.n_a << "/" << t.n_b << ")\n";
    }
    return out.str();
}

std::string layer_counts_csv(const pipeline::StabilityReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"layer", "width", "count", "normalized"});
    for (const auto& lc : r.layer_counts)
        rows.push_back({lc.layer, std::to_string(lc.width), std::to_string(lc.count),
                        format_double(lc.normalized)});
    return write_csv(rows);
}

std::string feature_frequency_csv(const pipeline::StabilityReport& r) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"layer", "feature", "global_index", "count"});
    for (const auto& fc : r.feature_counts)
        rows.push_back({fc.feature.layer_name, fc.feature.feature_name,
                        std::to_string(fc.feature.global_index),
                        std::to_string(fc.count)});
    return write_csv(rows);
}

std::vector<int> risk_groups_for_repeat(const pipeline::CvReport& report,
                                        std::size_t repeat,
                                        std::size_t n_samples) {
    if (repeat >= report.config.repeats) throw ConfigError("repeat out of range");
    std::vector<int> groups(n_samples, -1);
    for (const auto& fr : report.folds) {
        if (fr.repeat_index != repeat || !fr.ok()) continue;
        if (fr.cluster_labels.size() != fr.test_indices.size())
            throw DataError("missing cluster labels");
        for (std::size_t i = 0; i < fr.test_indices.size(); ++i) {
            const std::size_t row = fr.test_indices[i];
            if (row >= n_samples) throw DataError("report does not match dataset");
            groups[row] =
                static_cast<int>(fr.cluster_labels[i]) == fr.high_risk_cluster ? 1 : 0;
        }
    }
    return groups;
}

KmExport make_km_export(const data::SurvivalLabels& labels,
                        const std::vector<int>& groups) {
    if (groups.size() != labels.size())
        throw DataError("group vector does not match labels");
    std::vector<std::size_t> hi, lo;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i] == 1) hi.push_back(i);
        else if (groups[i] == 0) lo.push_back(i);
        else throw DataError("group labels must be 0 or 1");
    }
    if (hi.empty() || lo.empty()) throw DataError("empty group");

    KmExport e;
    e.n_high = hi.size();
    e.n_low = lo.size();
    const data::SurvivalLabels labels_hi = data::take_rows(labels, hi);
    const data::SurvivalLabels labels_lo = data::take_rows(labels, lo);
    e.high = surv::km_estimate(labels_hi);
    e.low = surv::km_estimate(labels_lo);
    for (std::size_t i = 0; i < labels_hi.size(); ++i)
        if (!labels_hi.event[i]) e.high_censor_times.push_back(labels_hi.time[i]);
    for (std::size_t i = 0; i < labels_lo.size(); ++i)
        if (!labels_lo.event[i]) e.low_censor_times.push_back(labels_lo.time[i]);
    std::sort(e.high_censor_times.begin(), e.high_censor_times.end());
    std::sort(e.low_censor_times.begin(), e.low_censor_times.end());

    if (labels.n_events() > 0) {
        std::vector<std::uint8_t> g01;
        data::SurvivalLabels combined;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            combined.time.push_back(labels.time[i]);
            combined.event.push_back(labels.event[i]);
            g01.push_back(static_cast<std::uint8_t>(groups[i]));
        }
        e.logrank_p = surv::logrank_test(combined, g01).p;
    }
    return e;
}

std::string km_csv(const KmExport& e) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"group", "time", "survival", "at_risk", "events"});
    const auto emit = [&rows](const std::string& name, const surv::KmCurve& c) {
        for (std::size_t i = 0; i < c.event_times.size(); ++i)
            rows.push_back({name, format_double(c.event_times[i]),
                            format_double(c.survival[i]), std::to_string(c.at_risk[i]),
                            std::to_string(c.events[i])});
    };
    emit("high", e.high);
    emit("low", e.low);
    return write_csv(rows);
}

namespace {

// survival level just after `t` for censor-tick placement
double survival_at(const surv::KmCurve& c, double t) {
    double s = 1.0;
    for (std::size_t i = 0; i < c.event_times.size(); ++i) {
        if (c.event_times[i] > t) break;
        s = c.survival[i];
    }
    return s;
}

constexpr double kLeft = 60.0, kRight = 610.0, kTop = 50.0, kBottom = 440.0;

std::string num(double v) { return format_double(round2(v)); }

std::string step_path(const surv::KmCurve& c, double tmax, double t_end) {
    const auto x = [tmax](double t) { return kLeft + (kRight - kLeft) * (t / tmax); };
    const auto y = [](double s) { return kTop + (kBottom - kTop) * (1.0 - s); };
    std::string d = "M " + num(x(0.0)) + " " + num(y(1.0));
    for (std::size_t i = 0; i < c.event_times.size(); ++i) {
        d += " H " + num(x(c.event_times[i]));
        d += " V " + num(y(c.survival[i]));
    }
    d += " H " + num(x(t_end));
    return d;
}

std::string tick_path(const surv::KmCurve& c, const std::vector<double>& censor_times,
                      double tmax) {
    const auto x = [tmax](double t) { return kLeft + (kRight - kLeft) * (t / tmax); };
    const auto y = [](double s) { return kTop + (kBottom - kTop) * (1.0 - s); };
    std::string d;
    for (double t : censor_times) {
        const double px = x(t);
        const double py = y(survival_at(c, t));
        if (!d.empty()) d += ' ';
        d += "M " + num(px) + " " + num(py - 5.0) + " V " + num(py + 5.0);
    }
    return d;
}

}  // namespace

std::string km_svg(const KmExport& e) {
    double tmax = 0.0;
    const auto track = [&tmax](const std::vector<double>& v) {
        for (double t : v) tmax = std::max(tmax, t);
    };
    track(e.high.event_times);
    track(e.low.event_times);
    track(e.high_censor_times);
    track(e.low_censor_times);
    if (tmax <= 0.0) tmax = 1.0;
    const double t_end_high =
        std::max(e.high.event_times.empty() ? 0.0 : e.high.event_times.back(),
                 e.high_censor_times.empty() ? 0.0 : e.high_censor_times.back());
    const double t_end_low =
        std::max(e.low.event_times.empty() ? 0.0 : e.low.event_times.back(),
                 e.low_censor_times.empty() ? 0.0 : e.low_censor_times.back());

    const std::string title =
        "Kaplan-Meier survival (logrank p = " + fmt_compact(e.logrank_p) + ")";

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\" font-family=\"sans-serif\">\n";
    svg << "<title>" << title << "</title>\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
    svg << "<text x=\"320\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";

    for (int i = 0; i <= 4; ++i) {
        const double s = 0.25 * i;
        const double py = kTop + (kBottom - kTop) * (1.0 - s);
        svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py) << "\" x2=\""
            << num(kRight) << "\" y2=\"" << num(py)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-size=\"12\">" << format_double(s)
            << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double t = tmax * 0.25 * i;
        const double px = kLeft + (kRight - kLeft) * 0.25 * i;
        svg << "<line x1=\"" << num(px) << "\" y1=\"" << num(kBottom) << "\" x2=\""
            << num(px) << "\" y2=\"" << num(kBottom + 6)
            << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << num(px) << "\" y=\"" << num(kBottom + 22)
            << "\" text-anchor=\"middle\" font-size=\"12\">" << num(t) << "</text>\n";
    }
    svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
        << num(kLeft) << "\" y2=\"" << num(kBottom)
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom) << "\" x2=\""
        << num(kRight) << "\" y2=\"" << num(kBottom)
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\"472\" "
           "text-anchor=\"middle\" font-size=\"13\">time</text>\n";
    svg << "<text x=\"18\" y=\"" << num((kTop + kBottom) / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << num((kTop + kBottom) / 2) << ")\">survival</text>\n";

    svg << "<path d=\"" << step_path(e.high, tmax, t_end_high)
        << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    svg << "<path d=\"" << step_path(e.low, tmax, t_end_low)
        << "\" fill=\"none\" stroke=\"#2980b9\" stroke-width=\"2\"/>\n";
    const std::string hi_ticks = tick_path(e.high, e.high_censor_times, tmax);
    if (!hi_ticks.empty())
        svg << "<path d=\"" << hi_ticks
            << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1\"/>\n";
    const std::string lo_ticks = tick_path(e.low, e.low_censor_times, tmax);
    if (!lo_ticks.empty())
        svg << "<path d=\"" << lo_ticks
            << "\" fill=\"none\" stroke=\"#2980b9\" stroke-width=\"1\"/>\n";

    svg << "<line x1=\"470\" y1=\"60\" x2=\"500\" y2=\"60\" stroke=\"#c0392b\" "
           "stroke-width=\"2\"/>\n";
    svg << "<text x=\"506\" y=\"64\" font-size=\"12\">high risk (n=" << e.n_high
        << ")</text>\n";
    svg << "<line x1=\"470\" y1=\"80\" x2=\"500\" y2=\"80\" stroke=\"#2980b9\" "
           "stroke-width=\"2\"/>\n";
    svg << "<text x=\"506\" y=\"84\" font-size=\"12\">low risk (n=" << e.n_low
        << ")</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace coxfuse::report
