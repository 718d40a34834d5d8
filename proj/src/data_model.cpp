#include "coxfuse/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "coxfuse/errors.hpp"
#include "coxfuse/kernels.hpp"

namespace coxfuse::data {

namespace fs = std::filesystem;

std::size_t SurvivalLabels::n_events() const {
    return static_cast<std::size_t>(
        std::count(event.begin(), event.end(), std::uint8_t{1}));
}

namespace {

std::vector<std::string> split_tab(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
        out.back().pop_back();
    return out;
}

double parse_cell(const std::string& cell, const fs::path& file, std::size_t line_no) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw DataError("non-numeric cell '" + cell + "' in " + file.filename().string() +
                        " line " + std::to_string(line_no));
    return v;
}

struct RawTable {
    std::vector<std::string> columns;                 // header minus sample_id
    std::map<std::string, std::vector<double>> rows;  // sample id -> values
};

RawTable read_tsv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file " + file.string());
    RawTable t;
    auto header = split_tab(line);
    if (header.empty() || header[0] != "sample_id")
        throw DataError("header must start with sample_id in " + file.filename().string());
    t.columns.assign(header.begin() + 1, header.end());
    std::set<std::string> seen_cols(t.columns.begin(), t.columns.end());
    if (seen_cols.size() != t.columns.size())
        throw DataError("duplicate feature name in " + file.filename().string());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_tab(line);
        if (cells.size() != t.columns.size() + 1)
            throw DataError("wrong field count in " + file.filename().string() +
                            " line " + std::to_string(line_no));
        if (t.rows.count(cells[0]))
            throw DataError("duplicate sample id '" + cells[0] + "' in " +
                            file.filename().string());
        std::vector<double> vals(t.columns.size());
        for (std::size_t c = 0; c < vals.size(); ++c)
            vals[c] = parse_cell(cells[c + 1], file, line_no);
        t.rows.emplace(cells[0], std::move(vals));
    }
    return t;
}

}  // namespace

MultiOmicsDataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());

    std::vector<fs::path> layer_files;
    fs::path survival_file;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".tsv") continue;
        if (entry.path().filename() == "survival.tsv")
            survival_file = entry.path();
        else
            layer_files.push_back(entry.path());
    }
    if (survival_file.empty()) throw DataError("missing survival file");
    if (layer_files.empty()) throw DataError("no layer files in " + root.string());
    std::sort(layer_files.begin(), layer_files.end(),
              [](const fs::path& a, const fs::path& b) { return a.stem() < b.stem(); });

    RawTable surv_raw = read_tsv(survival_file);
    if (surv_raw.columns != std::vector<std::string>{"time", "event"})
        throw DataError("survival.tsv header must be sample_id\ttime\tevent");

    std::vector<RawTable> layer_raw;
    layer_raw.reserve(layer_files.size());
    for (const auto& f : layer_files) layer_raw.push_back(read_tsv(f));

    // sorted intersection of sample ids across survival and every layer
    std::vector<std::string> ids;
    for (const auto& [id, vals] : surv_raw.rows) ids.push_back(id);
    for (const auto& t : layer_raw) {
        std::vector<std::string> keep;
        for (const auto& id : ids)
            if (t.rows.count(id)) keep.push_back(id);
        ids = std::move(keep);
    }
    if (ids.empty()) throw DataError("empty sample intersection");

    MultiOmicsDataset ds;
    ds.sample_ids = ids;
    for (std::size_t li = 0; li < layer_raw.size(); ++li) {
        OmicsLayer layer;
        layer.name = layer_files[li].stem().string();
        layer.feature_names = layer_raw[li].columns;
        layer.values.resize(ids.size(), layer.feature_names.size());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            const auto& vals = layer_raw[li].rows.at(ids[r]);
            std::copy(vals.begin(), vals.end(), layer.values.row(r));
        }
        ds.layers.push_back(std::move(layer));
    }

    ds.survival.time.resize(ids.size());
    ds.survival.event.resize(ids.size());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const auto& vals = surv_raw.rows.at(ids[r]);
        if (vals[0] < 0.0) throw DataError("negative time for sample " + ids[r]);
        if (vals[1] != 0.0 && vals[1] != 1.0)
            throw DataError("event not 0/1 for sample " + ids[r]);
        ds.survival.time[r] = vals[0];
        ds.survival.event[r] = vals[1] == 1.0 ? 1 : 0;
    }
    return ds;
}

namespace {

std::vector<std::size_t> topk_by_variance(const std::vector<double>& var, std::size_t k) {
    std::vector<std::size_t> idx(var.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return var[a] > var[b];  // stable keeps lower index first on ties
    });
    idx.resize(std::min(k, idx.size()));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

std::vector<std::size_t> variance_topk(const OmicsLayer& layer, std::size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (layer.values.rows() == 0) throw std::invalid_argument("layer has no rows");
    if (layer.n_features() == 0) return {};
    return topk_by_variance(kernels::column_variances(layer.values), k);
}

std::vector<std::size_t> variance_topk(const OmicsLayer& layer, std::size_t k,
                                       std::span<const std::size_t> rows) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (rows.empty()) throw std::invalid_argument("row subset is empty");
    if (layer.n_features() == 0) return {};
    Matrix sub = take_rows(layer.values, rows);
    return topk_by_variance(kernels::column_variances(sub), k);
}

std::pair<Matrix, std::vector<FeatureRef>> concat_selected(
    const MultiOmicsDataset& dataset,
    const std::vector<std::vector<std::size_t>>& per_layer_indices) {
    if (per_layer_indices.size() != dataset.layers.size())
        throw std::invalid_argument("selection count does not match layer count");
    std::size_t width = 0;
    for (const auto& sel : per_layer_indices) width += sel.size();

    const std::size_t n = dataset.n_samples();
    Matrix out(n, width);
    std::vector<FeatureRef> refs;
    refs.reserve(width);
    std::size_t col = 0;
    for (std::size_t li = 0; li < dataset.layers.size(); ++li) {
        const OmicsLayer& layer = dataset.layers[li];
        for (std::size_t j : per_layer_indices[li]) {
            if (j >= layer.n_features())
                throw std::out_of_range("selected index " + std::to_string(j) +
                                        " out of range for layer " + layer.name);
            for (std::size_t r = 0; r < n; ++r) out(r, col) = layer.values(r, j);
            refs.push_back({layer.name, layer.feature_names[j], col});
            ++col;
        }
    }
    return {std::move(out), std::move(refs)};
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows()) throw std::out_of_range("row index out of range");
        std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols(), out.row(i));
    }
    return out;
}

Matrix take_cols(const Matrix& m, std::span<const std::size_t> cols) {
    Matrix out(m.rows(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
        if (cols[c] >= m.cols()) throw std::out_of_range("column index out of range");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* src = m.row(r);
        double* dst = out.row(r);
        for (std::size_t c = 0; c < cols.size(); ++c) dst[c] = src[cols[c]];
    }
    return out;
}

SurvivalLabels take_rows(const SurvivalLabels& labels,
                         std::span<const std::size_t> rows) {
    SurvivalLabels out;
    out.time.reserve(rows.size());
    out.event.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= labels.size()) throw std::out_of_range("row index out of range");
        out.time.push_back(labels.time[r]);
        out.event.push_back(labels.event[r]);
    }
    return out;
}

Scaler zscore_fit(const Matrix& train) {
    if (train.rows() < 2) throw std::invalid_argument("zscore_fit needs at least 2 rows");
    Scaler s;
    s.mean = kernels::column_means(train);
    s.std_dev = kernels::column_variances(train);
    for (double& v : s.std_dev) {
        v = std::sqrt(v);
        if (v <= 1e-12) v = 1.0;
    }
    return s;
}

Matrix zscore_apply(const Scaler& scaler, const Matrix& x) {
    if (x.cols() != scaler.mean.size())
        throw std::invalid_argument("zscore_apply width mismatch");
    Matrix out = x;
    std::vector<double> inv(scaler.std_dev.size());
    for (std::size_t c = 0; c < inv.size(); ++c) inv[c] = 1.0 / scaler.std_dev[c];
    kernels::shift_scale_columns(out, scaler.mean, inv);
    return out;
}

}  // namespace coxfuse::data
