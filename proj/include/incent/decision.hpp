#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "incent/errors.hpp"
#include "incent/simplex.hpp"

namespace incent {

/// Deterministic tie handling. Lowest index everywhere: reports must be
/// reproducible and the math is silent about ties.
struct DecisionRule {
    enum class TieBreak { lowest_index };
    TieBreak tie_break = TieBreak::lowest_index;
};

/// Recalibration refuses matrices beyond this 1-norm condition: the recovered
/// posterior would carry no trustworthy digits.
constexpr double kRecalibrationConditionLimit = 1e12;

/// The unique optimal prediction under a utility-weighted proper loss:
/// p_y = ū(y,q) / Σ_y′ ū(y′,q), i.e. Uq renormalized. Nondegeneracy keeps the
/// denominator positive. Identity passes q through untouched so the unweighted
/// fixed point is bitwise exact.
inline SimplexVector optimal_weighted_prediction(const UtilityMatrix& u, const SimplexVector& q) {
    if (q.dim() != u.dim()) {
        throw DimensionError("optimal_weighted_prediction: q has " + std::to_string(q.dim()) +
                             " classes, utility has " + std::to_string(u.dim()));
    }
    if (u.is_identity()) return q;
    const std::size_t m = u.dim();
    const auto qv = q.values();
    std::vector<double> scores(m, 0.0);
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
        const auto row = u.row(static_cast<int>(y) + 1);
        double acc = 0.0;
        for (std::size_t t = 0; t < m; ++t) acc += row[t] * qv[t];
        scores[y] = acc;
        sum += acc;
    }
    if (!(sum > 0.0)) {
        throw NumericalError("optimal_weighted_prediction: normalized utility sum is zero");
    }
    for (double& s : scores) s /= sum;
    return SimplexVector(std::move(scores));
}

/// Invert the optimal weighted prediction map: q_y ∝ (U⁻¹p)_y. Entries may
/// land microscopically outside the simplex after a floating-point round
/// trip; anything above −1e-9 is clipped to zero, anything below is a genuine
/// image violation.
inline SimplexVector analytic_recalibration(const UtilityMatrix& u, const SimplexVector& p) {
    if (p.dim() != u.dim()) {
        throw DimensionError("analytic_recalibration: p has " + std::to_string(p.dim()) +
                             " classes, utility has " + std::to_string(u.dim()));
    }
    if (!u.invertible()) {
        throw InvertibilityError(
            "analytic_recalibration: utility matrix is singular; probabilistic information is "
            "not recoverable analytically");
    }
    if (u.condition_estimate() > kRecalibrationConditionLimit) {
        throw InvertibilityError("analytic_recalibration: condition estimate " +
                                 std::to_string(u.condition_estimate()) + " exceeds " +
                                 std::to_string(kRecalibrationConditionLimit));
    }
    if (u.is_identity()) return p;

    const std::size_t m = u.dim();
    const auto pv = p.values();
    std::vector<double> raw(m, 0.0);
    if (u.diagonal()) {
        for (std::size_t y = 0; y < m; ++y) {
            raw[y] = pv[y] / u.entry(static_cast<int>(y) + 1, static_cast<int>(y) + 1);
        }
    } else {
        const std::vector<double>& inv = u.inverse_row_major();
        for (std::size_t y = 0; y < m; ++y) {
            double acc = 0.0;
            for (std::size_t t = 0; t < m; ++t) acc += inv[y * m + t] * pv[t];
            raw[y] = acc;
        }
    }
    constexpr double kImageTolerance = -1e-9;
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
        if (raw[y] < kImageTolerance) {
            throw ImageError("analytic_recalibration: prediction lies outside the image of the "
                             "optimal weighted prediction map (recovered entry " +
                             std::to_string(y + 1) + " = " + std::to_string(raw[y]) + ")");
        }
        if (raw[y] < 0.0) raw[y] = 0.0;
        sum += raw[y];
    }
    if (!(sum > 0.0)) {
        throw ImageError("analytic_recalibration: recovered vector is zero after clipping");
    }
    for (double& v : raw) v /= sum;
    return SimplexVector(std::move(raw));
}

/// Shift a conditional distribution from source class rates to target class
/// rates: p_y ∝ (target_y / source_y) · q_y. Equivalent to the optimal
/// weighted prediction under diagonal weights w̄_y = target_y / source_y.
inline SimplexVector base_rate_adjust(const SimplexVector& q_x, const SimplexVector& source_rates,
                                      const SimplexVector& target_rates) {
    if (q_x.dim() != source_rates.dim() || q_x.dim() != target_rates.dim()) {
        throw DimensionError("base_rate_adjust: dimension mismatch");
    }
    const std::size_t m = q_x.dim();
    std::vector<double> raw(m, 0.0);
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
        const double s = source_rates.prob(static_cast<int>(y) + 1);
        if (!(s > 0.0)) {
            throw ValidationError("base_rate_adjust: source rate for class " +
                                  std::to_string(y + 1) + " is zero");
        }
        raw[y] = (target_rates.prob(static_cast<int>(y) + 1) / s) *
                 q_x.prob(static_cast<int>(y) + 1);
        sum += raw[y];
    }
    if (!(sum > 0.0)) {
        throw DegeneracyError(
            "base_rate_adjust: adjusted vector is zero (target rates vanish on the support of "
            "q_x)");
    }
    for (double& v : raw) v /= sum;
    return SimplexVector(std::move(raw));
}

/// Smallest index attaining the maximum probability.
inline int argmax_decision(const SimplexVector& p, DecisionRule = {}) {
    int best = 1;
    double best_val = p.prob(1);
    for (std::size_t y = 2; y <= p.dim(); ++y) {
        const double v = p.prob(static_cast<int>(y));
        if (v > best_val) {
            best_val = v;
            best = static_cast<int>(y);
        }
    }
    return best;
}

/// argmax_y ū(y,q): the expected-utility-maximizing decision, lowest index on ties.
inline int utility_argmax_decision(const UtilityMatrix& u, const SimplexVector& q,
                                   DecisionRule = {}) {
    if (q.dim() != u.dim()) {
        throw DimensionError("utility_argmax_decision: dimension mismatch");
    }
    int best = 1;
    double best_val = expected_utility(1, q, u);
    for (std::size_t y = 2; y <= u.dim(); ++y) {
        const double v = expected_utility(static_cast<int>(y), q, u);
        if (v > best_val) {
            best_val = v;
            best = static_cast<int>(y);
        }
    }
    return best;
}

}  // namespace incent
