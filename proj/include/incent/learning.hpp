#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "incent/decision.hpp"
#include "incent/errors.hpp"
#include "incent/loss.hpp"
#include "incent/simplex.hpp"

namespace incent {

/// ℓ̃^u(q) = ℓ̄^u(p^u(q), q): the expected weighted loss left over after the
/// prediction is optimally post processed. Concave in q (pointwise minimum of
/// linear functions).
inline double residual_learning_loss(const UtilityMatrix& u, const SimplexVector& q,
                                     BaseLoss base, double clamp_eps = kDefaultClampEpsilon) {
    const SimplexVector p = optimal_weighted_prediction(u, q);
    double acc = 0.0;
    for (std::size_t y = 1; y <= q.dim(); ++y) {
        const double qy = q.prob(static_cast<int>(y));
        if (qy == 0.0) continue;
        acc += qy * utility_weighted_loss(u, base, p, static_cast<int>(y), clamp_eps);
    }
    return acc;
}

/// Gradient of the residual learning loss: component y is the weighted loss
/// ℓ^u(p^u(q), y) itself. Requires interior q — logistic components diverge on
/// the boundary.
inline std::vector<double> residual_learning_gradient(const UtilityMatrix& u,
                                                      const SimplexVector& q, BaseLoss base,
                                                      double clamp_eps = kDefaultClampEpsilon) {
    for (std::size_t y = 1; y <= q.dim(); ++y) {
        if (!(q.prob(static_cast<int>(y)) > 0.0)) {
            throw BoundaryError("residual_learning_gradient: q is on the simplex boundary "
                                "(class " + std::to_string(y) + " has probability 0)");
        }
    }
    const SimplexVector p = optimal_weighted_prediction(u, q);
    std::vector<double> g(q.dim());
    for (std::size_t y = 1; y <= q.dim(); ++y) {
        g[y - 1] = utility_weighted_loss(u, base, p, static_cast<int>(y), clamp_eps);
    }
    return g;
}

/// Binary class-weighted marginal learning loss under the unit-sum weight
/// parameterization (w2 = 1 − w1): −w1·ln(p1) + (1−w1)·ln(1−p1) with
/// p1 = w1·q1 / (w1·q1 + (1−w1)(1−q1)). Equals the difference of the two
/// residual gradient components.
inline double binary_marginal_learning_loss(double w1, double q1) {
    if (!(w1 > 0.0 && w1 < 1.0)) {
        throw BoundaryError("binary_marginal_learning_loss: w1 must lie strictly in (0,1)");
    }
    if (!(q1 > 0.0 && q1 < 1.0)) {
        throw BoundaryError("binary_marginal_learning_loss: q1 must lie strictly in (0,1)");
    }
    const double denom = w1 * q1 + (1.0 - w1) * (1.0 - q1);
    const double p1 = w1 * q1 / denom;
    return -w1 * std::log(p1) + (1.0 - w1) * std::log(1.0 - p1);
}

/// One interior grid point of the binary incentive curves.
struct CurveRow {
    double q1 = 0.0;          // true probability of class 1
    double prediction = 0.0;  // optimal class-weighted prediction p1
    double marginal = 0.0;    // marginal learning loss at q1
    double residual = 0.0;    // residual learning loss at q1
};

/// Curve triplet over an open-interval grid of q1 values, for one binary
/// weight w1 under the unit-sum parameterization.
struct CurveTable {
    double w1 = 0.5;
    double step = 0.0;
    std::string weight_parameterization = "binary unit-sum (w2 = 1 - w1)";
    std::string base = "logistic";
    std::vector<CurveRow> rows;
};

/// Evaluate the three curves on the grid {step, 2·step, …} ∩ (0,1). Endpoints
/// are excluded: the logistic marginal diverges there. Marginals come from the
/// closed form, never from differencing.
inline CurveTable incentive_curves(double w1, double grid_step) {
    if (!(w1 > 0.0 && w1 < 1.0)) {
        throw ValidationError("incentive_curves: w1 must lie strictly in (0,1)");
    }
    if (!(grid_step > 0.0 && grid_step < 1.0)) {
        throw ValidationError("incentive_curves: grid step must lie strictly in (0,1)");
    }
    const UtilityMatrix u = UtilityMatrix::from_class_weights({w1, 1.0 - w1});
    CurveTable table;
    table.w1 = w1;
    table.step = grid_step;
    for (std::size_t i = 1;; ++i) {
        const double q1 = static_cast<double>(i) * grid_step;
        if (!(q1 < 1.0 - 1e-12)) break;
        const SimplexVector q{q1, 1.0 - q1};
        CurveRow row;
        row.q1 = q1;
        row.prediction = optimal_weighted_prediction(u, q).prob(1);
        row.marginal = binary_marginal_learning_loss(w1, q1);
        row.residual = residual_learning_loss(u, q, BaseLoss::logistic);
        table.rows.push_back(row);
    }
    if (table.rows.empty()) {
        throw ValidationError("incentive_curves: grid step " + std::to_string(grid_step) +
                              " yields no interior points");
    }
    return table;
}

}  // namespace incent
