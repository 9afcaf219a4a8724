#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "incent/audit.hpp"
#include "incent/errors.hpp"
#include "incent/experiment.hpp"
#include "incent/format.hpp"
#include "incent/learning.hpp"
#include "incent/loss.hpp"
#include "incent/mixture.hpp"
#include "incent/simplex.hpp"
#include "incent/train.hpp"

namespace incent {

// ---------------------------------------------------------------------------
// Files

/// Write-then-rename so readers never observe a half-written file and an
/// aborted run leaves the previous artifact intact.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw ValidationError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " +
                              ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw ValidationError(where + ": cannot parse number '" + s + "'");
    }
    return v;
}

inline long parse_long(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
        throw ValidationError(where + ": cannot parse integer '" + s + "'");
    }
    return v;
}

inline std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                           bool skip_comments) {
    std::istringstream in(read_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || (!line.empty() && line.back() == '\r' && line.size() == 1)) continue;
        if (skip_comments && line.front() == '#') continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

}  // namespace detail

/// m rows × m columns, headerless.
inline std::string utility_to_csv(const UtilityMatrix& u) {
    std::string out;
    for (std::size_t r = 1; r <= u.dim(); ++r) {
        const auto row = u.row(static_cast<int>(r));
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += fmt12(row[c]);
        }
        out += '\n';
    }
    return out;
}

inline UtilityMatrix read_utility_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv_rows(path, true);
    if (rows.empty()) throw ValidationError("utility csv '" + path.string() + "' is empty");
    const std::size_t m = rows.size();
    std::vector<double> entries;
    entries.reserve(m * m);
    for (std::size_t r = 0; r < m; ++r) {
        if (rows[r].size() != m) {
            throw ValidationError("utility csv '" + path.string() + "': row " +
                                  std::to_string(r + 1) + " has " +
                                  std::to_string(rows[r].size()) + " fields, expected " +
                                  std::to_string(m));
        }
        for (const std::string& f : rows[r]) {
            entries.push_back(detail::parse_double(f, "utility csv"));
        }
    }
    return UtilityMatrix::validated(std::move(entries), m);
}

inline std::string simplex_to_csv_row(const SimplexVector& v) {
    std::string out;
    const auto vals = v.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) out += ',';
        out += fmt12(vals[i]);
    }
    return out;
}

inline SimplexVector read_simplex_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv_rows(path, true);
    if (rows.size() != 1) {
        throw ValidationError("simplex csv '" + path.string() + "' must hold exactly one row");
    }
    std::vector<double> vals;
    for (const std::string& f : rows.front()) {
        vals.push_back(detail::parse_double(f, "simplex csv"));
    }
    return SimplexVector(std::move(vals));
}

/// One prediction per row, m probability columns, headerless.
inline std::string predictions_to_csv(const std::vector<SimplexVector>& preds) {
    std::string out;
    for (const SimplexVector& p : preds) {
        out += simplex_to_csv_row(p);
        out += '\n';
    }
    return out;
}

inline std::vector<SimplexVector> read_predictions_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv_rows(path, true);
    if (rows.empty()) throw ValidationError("predictions csv '" + path.string() + "' is empty");
    std::vector<SimplexVector> preds;
    preds.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<double> vals;
        vals.reserve(rows[r].size());
        for (const std::string& f : rows[r]) {
            vals.push_back(detail::parse_double(f, "predictions csv row " +
                                                       std::to_string(r + 1)));
        }
        preds.emplace_back(std::move(vals));
    }
    return preds;
}

/// One 1-based label per row, headerless.
inline std::string labels_to_csv(const std::vector<int>& labels) {
    std::string out;
    for (int y : labels) {
        out += std::to_string(y);
        out += '\n';
    }
    return out;
}

inline std::vector<int> read_labels_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv_rows(path, true);
    if (rows.empty()) throw ValidationError("labels csv '" + path.string() + "' is empty");
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != 1) {
            throw ValidationError("labels csv row " + std::to_string(r + 1) +
                                  " must hold exactly one field");
        }
        labels.push_back(static_cast<int>(
            detail::parse_long(rows[r].front(), "labels csv row " + std::to_string(r + 1))));
    }
    return labels;
}

/// Header `x1..xd,label,q1..qm,split`, one sample per row.
inline std::string dataset_to_csv(const Dataset& data) {
    std::string out;
    for (std::size_t t = 1; t <= data.d; ++t) out += "x" + std::to_string(t) + ",";
    out += "label,";
    for (std::size_t y = 1; y <= data.m; ++y) out += "q" + std::to_string(y) + ",";
    out += "split\n";
    for (const DatasetRow& row : data.rows) {
        for (double x : row.x) {
            out += fmt12(x);
            out += ',';
        }
        out += std::to_string(row.label);
        out += ',';
        const auto q = row.q_true.values();
        for (double v : q) {
            out += fmt12(v);
            out += ',';
        }
        out += to_string(row.split);
        out += '\n';
    }
    return out;
}

inline Dataset read_dataset_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv_rows(path, true);
    if (rows.size() < 2) throw ValidationError("dataset csv '" + path.string() + "' has no rows");
    const std::vector<std::string>& header = rows.front();
    std::size_t d = 0;
    while (d < header.size() && header[d] == "x" + std::to_string(d + 1)) ++d;
    if (d == 0 || d >= header.size() || header[d] != "label") {
        throw ValidationError("dataset csv: header must start with x1..xd,label");
    }
    std::size_t m = 0;
    while (d + 1 + m < header.size() && header[d + 1 + m] == "q" + std::to_string(m + 1)) ++m;
    if (m < 2 || d + 1 + m >= header.size() || header[d + 1 + m] != "split") {
        throw ValidationError("dataset csv: header must end with q1..qm,split");
    }
    Dataset data;
    data.d = d;
    data.m = m;
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() != d + m + 2) {
            throw ValidationError("dataset csv row " + std::to_string(r + 1) +
                                  ": wrong field count");
        }
        const std::string where = "dataset csv row " + std::to_string(r + 1);
        std::vector<double> x(d);
        for (std::size_t t = 0; t < d; ++t) x[t] = detail::parse_double(f[t], where);
        const int label = static_cast<int>(detail::parse_long(f[d], where));
        std::vector<double> q(m);
        for (std::size_t y = 0; y < m; ++y) q[y] = detail::parse_double(f[d + 1 + y], where);
        const Split split = split_from_string(f[d + 1 + m]);
        counts[static_cast<int>(split)] += 1;
        if (label < 1 || static_cast<std::size_t>(label) > m) {
            throw ValidationError(where + ": label out of range");
        }
        data.rows.push_back(DatasetRow{std::move(x), label, SimplexVector(std::move(q)), split});
    }
    const double n = static_cast<double>(data.rows.size());
    data.fractions.train = counts[0] / n;
    data.fractions.validation = counts[1] / n;
    data.fractions.test = counts[2] / n;
    return data;
}

/// Comment line with the parameterization, then `q1,prediction,marginal,residual`.
inline std::string curves_to_csv(const CurveTable& table) {
    std::string out = "# w1=" + fmt12(table.w1) + ", step=" + fmt12(table.step) +
                      ", weights=" + table.weight_parameterization + ", base=" + table.base +
                      "\n";
    out += "q1,prediction,marginal,residual\n";
    for (const CurveRow& row : table.rows) {
        out += fmt12(row.q1);
        out += ',';
        out += fmt12(row.prediction);
        out += ',';
        out += fmt12(row.marginal);
        out += ',';
        out += fmt12(row.residual);
        out += '\n';
    }
    return out;
}

/// Per-interval scalars of one training run: `step,learning_rate,train_loss,...`.
inline std::string trace_to_csv(const RunTrace& trace) {
    std::string out = "step,learning_rate,train_loss,val_loss,test_loss\n";
    for (const IntervalRecord& rec : trace.records) {
        out += std::to_string(rec.step);
        out += ',';
        out += fmt12(rec.learning_rate);
        out += ',';
        out += fmt12(round12(rec.train_loss));
        out += ',';
        out += fmt12(round12(rec.val_loss));
        out += ',';
        out += fmt12(round12(rec.test_loss));
        out += '\n';
    }
    return out;
}

inline std::string series_to_csv(const Report& report) {
    std::string out = "run,regime,step,weighted_loss,classification_utility\n";
    for (const SeriesPoint& pt : report.series) {
        out += std::to_string(pt.run);
        out += ',';
        out += to_string(pt.regime);
        out += ',';
        out += std::to_string(pt.step);
        out += ',';
        out += fmt12(pt.weighted_loss);
        out += ',';
        out += fmt12(pt.classification_utility);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON output. Reports are assembled by hand so every float goes through
// fmt12 and repeated runs emit byte-identical files.

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

inline std::string json_number_array(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt12(v[i]);
    }
    out += "]";
    return out;
}

inline std::string json_metric_summary(const MetricSummary& s, const std::string& indent) {
    std::string out = "{\n";
    out += indent + "  \"per_run\": " + json_number_array(s.per_run) + ",\n";
    out += indent + "  \"mean\": " + fmt12(s.mean) + ",\n";
    out += indent + "  \"min\": " + fmt12(s.min) + ",\n";
    out += indent + "  \"max\": " + fmt12(s.max) + "\n";
    out += indent + "}";
    return out;
}

}  // namespace detail

inline std::string report_to_json(const Report& report) {
    std::string out = "{\n";
    out += "  \"schema_version\": " + std::to_string(report.schema_version) + ",\n";
    out += "  \"partial\": " + std::string(report.partial ? "true" : "false") + ",\n";
    if (report.partial) {
        out += "  \"abort_message\": \"" + detail::json_escape(report.abort_message) + "\",\n";
    }
    out += "  \"runs\": " + std::to_string(report.runs) + ",\n";
    out += "  \"train_prior\": " + detail::json_number_array(report.train_prior) + ",\n";
    out += "  \"normalized_weights\": " + detail::json_number_array(report.normalized_weights) +
           ",\n";
    out += "  \"weight_normalization\": \"" + detail::json_escape(report.weight_normalization) +
           "\",\n";
    out += "  \"regimes\": [";
    for (std::size_t i = 0; i < report.regimes_included.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + to_string(report.regimes_included[i]) + "\"";
    }
    out += "],\n";
    out += "  \"run_infos\": [\n";
    for (std::size_t i = 0; i < report.run_infos.size(); ++i) {
        const RunInfo& info = report.run_infos[i];
        out += "    {\"run\": " + std::to_string(info.run) +
               ", \"seed\": " + std::to_string(info.seed) + ", \"weighted_fingerprint\": \"" +
               info.weighted_fingerprint + "\", \"unweighted_fingerprint\": \"" +
               info.unweighted_fingerprint + "\"}";
        out += (i + 1 < report.run_infos.size()) ? ",\n" : "\n";
    }
    out += "  ],\n";
    out += "  \"results\": [\n";
    for (std::size_t i = 0; i < report.results.size(); ++i) {
        const RegimeResult& res = report.results[i];
        out += "    {\n";
        out += "      \"regime\": \"" + to_string(res.regime) + "\",\n";
        out += "      \"weighted_loss\": " +
               detail::json_metric_summary(res.weighted_loss, "      ") + ",\n";
        out += "      \"classification_utility\": " +
               detail::json_metric_summary(res.classification_utility, "      ") + "\n";
        out += "    }";
        out += (i + 1 < report.results.size()) ? ",\n" : "\n";
    }
    out += "  ],\n";
    out += "  \"gains\": [\n";
    for (std::size_t i = 0; i < report.gains.size(); ++i) {
        const PairGain& g = report.gains[i];
        out += "    {\n";
        out += "      \"pair\": \"" + g.pair + "\",\n";
        out += "      \"baseline\": \"" + to_string(g.baseline) + "\",\n";
        out += "      \"contender\": \"" + to_string(g.contender) + "\",\n";
        out += "      \"weighted_loss_gain_per_run\": " +
               detail::json_number_array(g.loss_per_run) + ",\n";
        out += "      \"classification_utility_gain_per_run\": " +
               detail::json_number_array(g.utility_per_run) + ",\n";
        out += "      \"weighted_loss_gain_of_means\": " + fmt12(g.loss_gain_of_means) + ",\n";
        out += "      \"classification_utility_gain_of_means\": " +
               fmt12(g.utility_gain_of_means) + "\n";
        out += "    }";
        out += (i + 1 < report.gains.size()) ? ",\n" : "\n";
    }
    out += "  ],\n";
    out += "  \"gain_pairing\": \"per-run gains pair runs with identical seeds; the _of_means "
           "values compare summary means and may differ in sign from any single pairing\",\n";
    out += "  \"series_csv\": \"series.csv\"\n";
    out += "}\n";
    return out;
}

inline std::string audit_report_to_json(const LearnedSummary& summary,
                                        const LearningIdentityResult& identity,
                                        const LossCalibrationResult& calibration) {
    std::string out = "{\n";
    out += "  \"schema_version\": 1,\n";
    out += "  \"quantization\": \"" + summary.quantization.describe() + "\",\n";
    out += "  \"records\": " + std::to_string(summary.total) + ",\n";
    out += "  \"groups\": " + std::to_string(summary.groups.size()) + ",\n";
    out += "  \"learning_identity\": {\"lhs\": " + fmt12(round12(identity.lhs)) +
           ", \"rhs\": " + fmt12(round12(identity.rhs)) + ", \"gap\": " + fmt12(identity.gap) +
           "},\n";
    out += "  \"loss_calibration\": {\"max_deviation\": " + fmt12(calibration.max_deviation) +
           "},\n";
    out += "  \"group_table\": [\n";
    for (std::size_t i = 0; i < summary.groups.size(); ++i) {
        const LearnedGroup& g = summary.groups[i];
        std::vector<double> qhat(g.q_hat.values().begin(), g.q_hat.values().end());
        std::vector<double> meanp(g.mean_prediction.values().begin(),
                                  g.mean_prediction.values().end());
        out += "    {\"key\": \"" + detail::json_escape(g.key) + "\", \"count\": " +
               std::to_string(g.count) + ", \"q_hat\": " + detail::json_number_array(qhat) +
               ", \"mean_prediction\": " + detail::json_number_array(meanp) +
               ", \"diameter\": " + fmt12(g.diameter) +
               ", \"calibration_deviation\": " + fmt12(calibration.per_group[i].deviation) + "}";
        out += (i + 1 < summary.groups.size()) ? ",\n" : "\n";
    }
    out += "  ]\n";
    out += "}\n";
    return out;
}

// ---------------------------------------------------------------------------
// JSON input (configs) via nlohmann; schema errors surface as ValidationError.

namespace detail {

inline const nlohmann::json& json_field(const nlohmann::json& j, const std::string& key,
                                        const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(where + ": missing field \"" + key + "\"");
    return *it;
}

template <typename T>
inline T json_get(const nlohmann::json& j, const std::string& key, const std::string& where) {
    try {
        return json_field(j, key, where).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(where + ": bad field \"" + key + "\": " + e.what());
    }
}

template <typename T>
inline T json_get_or(const nlohmann::json& j, const std::string& key, T fallback,
                     const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return json_get<T>(j, key, where);
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& where) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(where + ": invalid JSON: " + e.what());
    }
}

}  // namespace detail

inline MixtureSpec mixture_from_json(const nlohmann::json& j) {
    const std::string where = "mixture spec";
    MixtureSpec spec{
        SimplexVector(detail::json_get<std::vector<double>>(j, "priors", where)),
        detail::json_get<std::vector<std::vector<double>>>(j, "means", where),
        detail::json_get<std::vector<double>>(j, "sigmas", where)};
    spec.validate();
    return spec;
}

inline SplitFractions fractions_from_json(const nlohmann::json& j) {
    const std::string where = "split fractions";
    SplitFractions f;
    f.train = detail::json_get<double>(j, "train", where);
    f.validation = detail::json_get<double>(j, "validation", where);
    f.test = detail::json_get<double>(j, "test", where);
    f.validate();
    return f;
}

inline ModelSpec model_from_json(const nlohmann::json& j) {
    const std::string where = "model spec";
    ModelSpec spec;
    spec.family = model_family_from_string(detail::json_get<std::string>(j, "family", where));
    spec.width = detail::json_get_or<std::size_t>(j, "width", 0, where);
    spec.activation = activation_from_string(
        detail::json_get_or<std::string>(j, "activation", "tanh", where));
    spec.init_scale = detail::json_get_or<double>(j, "init_scale", 0.1, where);
    spec.validate();
    return spec;
}

/// {"base": "logistic"|"brier", "weights_csv": path-or-null, "clamp_epsilon": real};
/// a relative weights path resolves against base_dir.
inline LossSpec loss_spec_from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir) {
    const std::string where = "loss spec";
    const BaseLoss base =
        base_loss_from_string(detail::json_get<std::string>(j, "base", where));
    const double eps =
        detail::json_get_or<double>(j, "clamp_epsilon", kDefaultClampEpsilon, where);
    const std::string weights_csv =
        detail::json_get_or<std::string>(j, "weights_csv", std::string(), where);
    if (weights_csv.empty()) return LossSpec::unweighted(base, eps);
    std::filesystem::path path(weights_csv);
    if (path.is_relative()) path = base_dir / path;
    return LossSpec::weighted(base, read_utility_csv(path), eps);
}

inline std::string loss_spec_to_json(const LossSpec& spec, const std::string& weights_csv) {
    std::string out = "{\"base\": \"" + to_string(spec.base) + "\", \"weights_csv\": ";
    out += spec.is_weighted() ? "\"" + detail::json_escape(weights_csv) + "\"" : "null";
    out += ", \"clamp_epsilon\": " + fmt12(spec.clamp_epsilon) + "}";
    return out;
}

struct DatagenConfig {
    MixtureSpec mixture;
    std::size_t n = 0;
    SplitFractions fractions;
    std::uint64_t seed = 0;
};

inline DatagenConfig datagen_config_from_json(const nlohmann::json& j) {
    const std::string where = "datagen config";
    DatagenConfig cfg{mixture_from_json(detail::json_field(j, "mixture", where)),
                      detail::json_get<std::size_t>(j, "n", where),
                      fractions_from_json(detail::json_field(j, "fractions", where)),
                      detail::json_get_or<std::uint64_t>(j, "seed", 0, where)};
    return cfg;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j,
                                          const std::filesystem::path& base_dir) {
    const std::string where = "train config";
    TrainConfig cfg;
    cfg.loss = loss_spec_from_json(detail::json_field(j, "loss", where), base_dir);
    cfg.learning_rate = detail::json_get<double>(j, "learning_rate", where);
    cfg.decay = detail::json_get_or<double>(j, "decay", 0.5, where);
    cfg.intervals = detail::json_get_or<std::size_t>(j, "intervals", 10, where);
    cfg.max_steps = detail::json_get<std::size_t>(j, "max_steps", where);
    cfg.batch = detail::json_get_or<std::size_t>(j, "batch", 0, where);
    cfg.seed = detail::json_get_or<std::uint64_t>(j, "seed", 1, where);
    cfg.validate();
    return cfg;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                                    const std::filesystem::path& base_dir) {
    const std::string where = "experiment config";
    ExperimentConfig cfg;

    const nlohmann::json& data = detail::json_field(j, "data", where);
    if (data.contains("csv")) {
        std::filesystem::path path(detail::json_get<std::string>(data, "csv", "data source"));
        if (path.is_relative()) path = base_dir / path;
        cfg.data.csv_path = path.string();
    } else {
        cfg.data.mixture = mixture_from_json(detail::json_field(data, "mixture", "data source"));
        cfg.data.n = detail::json_get<std::size_t>(data, "n", "data source");
        cfg.data.fractions =
            fractions_from_json(detail::json_field(data, "fractions", "data source"));
        cfg.data.seed = detail::json_get_or<std::uint64_t>(data, "seed", 0, "data source");
    }

    if (j.contains("weights")) {
        const nlohmann::json& w = j.at("weights");
        const std::string mode =
            detail::json_get_or<std::string>(w, "mode", "ratio", "weight scheme");
        if (mode == "ratio") {
            cfg.weights.mode = WeightMode::ratio;
            cfg.weights.ratio = detail::json_get_or<double>(w, "ratio", 99.0, "weight scheme");
            cfg.weights.emphasized_class =
                detail::json_get_or<int>(w, "emphasized_class", 1, "weight scheme");
        } else if (mode == "inverse_probability") {
            cfg.weights.mode = WeightMode::inverse_probability;
        } else {
            throw ValidationError("weight scheme: unknown mode '" + mode + "'");
        }
    }

    cfg.model = model_from_json(detail::json_field(j, "model", where));

    const nlohmann::json& t = detail::json_field(j, "train", where);
    cfg.base = base_loss_from_string(
        detail::json_get_or<std::string>(t, "base", "logistic", "train template"));
    cfg.clamp_epsilon = detail::json_get_or<double>(t, "clamp_epsilon", kDefaultClampEpsilon,
                                                    "train template");
    cfg.learning_rate = detail::json_get<double>(t, "learning_rate", "train template");
    cfg.decay = detail::json_get_or<double>(t, "decay", 0.5, "train template");
    cfg.intervals = detail::json_get_or<std::size_t>(t, "intervals", 10, "train template");
    cfg.max_steps = detail::json_get<std::size_t>(t, "max_steps", "train template");
    cfg.batch = detail::json_get_or<std::size_t>(t, "batch", 0, "train template");

    cfg.runs = detail::json_get_or<std::size_t>(j, "runs", 5, where);
    cfg.base_seed = detail::json_get_or<std::uint64_t>(j, "base_seed", 1, where);
    if (j.contains("regimes")) {
        cfg.regimes.clear();
        for (const auto& r : detail::json_get<std::vector<std::string>>(j, "regimes", where)) {
            cfg.regimes.push_back(regime_from_string(r));
        }
    }
    cfg.validate();
    return cfg;
}

/// Materialize the configured dataset: load the CSV if one is named, else
/// generate from the mixture.
inline Dataset load_or_generate_dataset(const DataSource& source) {
    if (!source.csv_path.empty()) return read_dataset_csv(source.csv_path);
    return generate_dataset(*source.mixture, source.n, source.fractions, source.seed);
}

}  // namespace incent
