#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "incent/decision.hpp"
#include "incent/errors.hpp"
#include "incent/format.hpp"
#include "incent/loss.hpp"
#include "incent/simplex.hpp"

namespace incent {

/// One evaluation instance: predicted distribution and realized label.
struct PredictionRecord {
    SimplexVector prediction;
    int label = 1;
};

/// Immutable evaluation log over a fixed class count.
class PredictionLog {
public:
    PredictionLog(std::vector<PredictionRecord> records, std::size_t m)
        : records_(std::move(records)), m_(m) {
        detail::require(m_ >= 2, "PredictionLog: need at least 2 classes");
        detail::require(!records_.empty(), "PredictionLog: log is empty");
        for (std::size_t i = 0; i < records_.size(); ++i) {
            if (records_[i].prediction.dim() != m_) {
                throw DimensionError("PredictionLog: record " + std::to_string(i + 1) +
                                     " has dimension " +
                                     std::to_string(records_[i].prediction.dim()));
            }
            detail::check_class_index(records_[i].label, m_, "PredictionLog");
        }
    }

    std::size_t size() const noexcept { return records_.size(); }
    std::size_t classes() const noexcept { return m_; }
    const std::vector<PredictionRecord>& records() const noexcept { return records_; }

private:
    std::vector<PredictionRecord> records_;
    std::size_t m_;
};

/// How prediction values are pooled when recovering what is learned.
struct Quantization {
    enum class Kind { exact, grid };
    Kind kind = Kind::exact;
    double resolution = 0.0;  // grid only; cells at least 0.01 wide

    static Quantization exact() { return {Kind::exact, 0.0}; }

    static Quantization grid(double resolution) {
        if (!(resolution >= 0.01 && resolution <= 1.0)) {
            throw ValidationError("Quantization: grid resolution must lie in [0.01, 1]");
        }
        return {Kind::grid, resolution};
    }

    /// Parses "exact" or "grid:<resolution>".
    static Quantization parse(const std::string& text) {
        if (text == "exact") return exact();
        constexpr const char* prefix = "grid:";
        if (text.rfind(prefix, 0) == 0) {
            std::size_t pos = 0;
            double res = 0.0;
            try {
                res = std::stod(text.substr(5), &pos);
            } catch (const std::exception&) {
                throw ValidationError("Quantization: cannot parse resolution in '" + text + "'");
            }
            if (pos != text.size() - 5) {
                throw ValidationError("Quantization: trailing junk in '" + text + "'");
            }
            return grid(res);
        }
        throw ValidationError("Quantization: expected 'exact' or 'grid:<resolution>', got '" +
                              text + "'");
    }

    std::string describe() const {
        return kind == Kind::exact ? std::string("exact") : "grid:" + fmt12(resolution);
    }
};

namespace detail {

inline std::string group_key(const SimplexVector& p, const Quantization& q) {
    std::string key;
    const auto v = p.values();
    if (q.kind == Quantization::Kind::exact) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) key += ',';
            key += fmt12(v[i]);
        }
        return key;
    }
    const long cells = static_cast<long>(std::ceil(1.0 / q.resolution - 1e-12));
    for (std::size_t i = 0; i < v.size(); ++i) {
        long idx = static_cast<long>(std::floor(v[i] / q.resolution));
        idx = std::min(idx, cells - 1);  // p=1 lands in the last cell
        if (i) key += ',';
        key += std::to_string(idx);
    }
    return key;
}

}  // namespace detail

/// One pooled cell of predictions with its empirical label distribution.
struct LearnedGroup {
    std::string key;                        // serialized value or cell index vector
    std::size_t count = 0;                  // records pooled here
    std::vector<std::size_t> label_counts;  // per class, sums to count
    SimplexVector q_hat;                    // empirical label frequencies
    SimplexVector mean_prediction;          // centroid of pooled predictions
    double diameter = 0.0;                  // max-norm spread of pooled predictions
};

/// Empirical recovery of "what is learned": the map from prediction values to
/// posterior label frequencies.
struct LearnedSummary {
    Quantization quantization;
    std::size_t total = 0;
    std::vector<LearnedGroup> groups;  // sorted by key for order independence
};

inline LearnedSummary recover_what_is_learned(const PredictionLog& log,
                                              const Quantization& quant) {
    const std::size_t m = log.classes();
    struct Acc {
        std::size_t count = 0;
        std::vector<std::size_t> label_counts;
        std::vector<double> sum, lo, hi;
    };
    std::map<std::string, Acc> cells;
    for (const PredictionRecord& rec : log.records()) {
        Acc& acc = cells[detail::group_key(rec.prediction, quant)];
        if (acc.count == 0) {
            acc.label_counts.assign(m, 0);
            acc.sum.assign(m, 0.0);
            acc.lo.assign(m, 1.0);
            acc.hi.assign(m, 0.0);
        }
        ++acc.count;
        ++acc.label_counts[static_cast<std::size_t>(rec.label - 1)];
        const auto v = rec.prediction.values();
        for (std::size_t i = 0; i < m; ++i) {
            acc.sum[i] += v[i];
            acc.lo[i] = std::min(acc.lo[i], v[i]);
            acc.hi[i] = std::max(acc.hi[i], v[i]);
        }
    }
    LearnedSummary summary;
    summary.quantization = quant;
    summary.total = log.size();
    summary.groups.reserve(cells.size());
    for (auto& [key, acc] : cells) {
        std::vector<double> freq(m), mean(m);
        double diameter = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            freq[i] = static_cast<double>(acc.label_counts[i]) / static_cast<double>(acc.count);
            mean[i] = acc.sum[i] / static_cast<double>(acc.count);
            diameter = std::max(diameter, acc.hi[i] - acc.lo[i]);
        }
        summary.groups.push_back(LearnedGroup{key, acc.count, std::move(acc.label_counts),
                                              SimplexVector(std::move(freq)),
                                              SimplexVector(std::move(mean)), diameter});
    }
    return summary;
}

/// Both sides of the Learning Identity: empirical risk (lhs) versus the mean
/// expected loss against recovered posteriors (rhs). Under exact grouping the
/// two are the same sum reassociated, so the gap is floating-point noise.
struct LearningIdentityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
};

inline LearningIdentityResult learning_identity_check(const PredictionLog& log,
                                                      const LossSpec& spec,
                                                      const Quantization& quant) {
    const LearnedSummary summary = recover_what_is_learned(log, quant);
    std::map<std::string, const LearnedGroup*> by_key;
    for (const LearnedGroup& g : summary.groups) by_key[g.key] = &g;

    double lhs = 0.0;
    double rhs = 0.0;
    for (const PredictionRecord& rec : log.records()) {
        lhs += spec_loss(spec, rec.prediction, rec.label);
        const LearnedGroup* g = by_key.at(detail::group_key(rec.prediction, quant));
        rhs += expected_loss(spec, rec.prediction, g->q_hat);
    }
    const double n = static_cast<double>(log.size());
    LearningIdentityResult result;
    result.lhs = lhs / n;
    result.rhs = rhs / n;
    result.gap = std::abs(result.lhs - result.rhs);
    return result;
}

/// Per-group distance between the observed pooled prediction and the optimal
/// weighted prediction of the recovered posterior.
struct GroupDeviation {
    std::string key;
    std::size_t count = 0;
    double deviation = 0.0;
};

struct LossCalibrationResult {
    double max_deviation = 0.0;  // maximum over groups (every group has records)
    std::vector<GroupDeviation> per_group;
};

inline LossCalibrationResult loss_calibration_check(const UtilityMatrix& u,
                                                    const PredictionLog& log,
                                                    const Quantization& quant) {
    if (u.dim() != log.classes()) {
        throw DimensionError("loss_calibration_check: utility dimension mismatch");
    }
    const LearnedSummary summary = recover_what_is_learned(log, quant);
    LossCalibrationResult result;
    result.per_group.reserve(summary.groups.size());
    for (const LearnedGroup& g : summary.groups) {
        const SimplexVector ideal = optimal_weighted_prediction(u, g.q_hat);
        double dev = 0.0;
        for (std::size_t y = 1; y <= u.dim(); ++y) {
            dev = std::max(dev, std::abs(ideal.prob(static_cast<int>(y)) -
                                         g.mean_prediction.prob(static_cast<int>(y))));
        }
        result.per_group.push_back(GroupDeviation{g.key, g.count, dev});
        result.max_deviation = std::max(result.max_deviation, dev);
    }
    return result;
}

enum class GainDirection { loss, utility };

/// Percentage improvement of metric b over baseline a. Losses improve
/// downward, utilities upward.
inline double misalignment_gain(double metric_a, double metric_b, GainDirection direction) {
    if (!std::isfinite(metric_a) || !std::isfinite(metric_b)) {
        throw ValidationError("misalignment_gain: metrics must be finite");
    }
    if (metric_a == 0.0) {
        throw ValidationError("misalignment_gain: baseline metric is zero");
    }
    if (direction == GainDirection::loss) {
        return (metric_a - metric_b) / metric_a * 100.0;
    }
    return (metric_b - metric_a) / metric_a * 100.0;
}

}  // namespace incent
