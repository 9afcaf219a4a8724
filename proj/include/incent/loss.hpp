#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "incent/errors.hpp"
#include "incent/simplex.hpp"

namespace incent {

enum class BaseLoss { logistic, brier };

inline std::string to_string(BaseLoss b) {
    return b == BaseLoss::logistic ? "logistic" : "brier";
}

inline BaseLoss base_loss_from_string(const std::string& s) {
    if (s == "logistic") return BaseLoss::logistic;
    if (s == "brier") return BaseLoss::brier;
    throw ValidationError("unknown base loss '" + s + "' (expected logistic or brier)");
}

constexpr double kDefaultClampEpsilon = 1e-12;

/// Base proper loss plus optional utility weighting. Fully determines the
/// training incentive: the gradient, the optimal prediction, everything.
struct LossSpec {
    BaseLoss base = BaseLoss::logistic;
    std::optional<UtilityMatrix> weighting;           // absent = unweighted
    double clamp_epsilon = kDefaultClampEpsilon;      // guards the logarithm only

    static LossSpec unweighted(BaseLoss b, double eps = kDefaultClampEpsilon) {
        LossSpec s{b, std::nullopt, eps};
        s.validate();
        return s;
    }

    static LossSpec weighted(BaseLoss b, UtilityMatrix u, double eps = kDefaultClampEpsilon) {
        LossSpec s{b, std::move(u), eps};
        s.validate();
        return s;
    }

    void validate() const {
        if (!(clamp_epsilon > 0.0 && clamp_epsilon <= 1e-6)) {
            throw ValidationError("LossSpec: clamp_epsilon must lie in (0, 1e-6]");
        }
        // A held UtilityMatrix was validated at its own construction.
    }

    bool is_weighted() const noexcept { return weighting.has_value(); }
};

namespace detail {

inline double base_point_loss(BaseLoss base, const SimplexVector& p, int y, double clamp_eps) {
    check_class_index(y, p.dim(), "point_loss");
    if (base == BaseLoss::logistic) {
        return -std::log(std::max(p.prob(y), clamp_eps));
    }
    // Brier: squared distance between p and the vertex of class y. No clamp.
    double acc = 0.0;
    const auto v = p.values();
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double target = (static_cast<int>(j) + 1 == y) ? 1.0 : 0.0;
        const double d = v[j] - target;
        acc += d * d;
    }
    return acc;
}

}  // namespace detail

/// Unweighted base loss of predicting p when the realized class is y.
inline double point_loss(const LossSpec& spec, const SimplexVector& p, int y) {
    if (spec.is_weighted()) {
        throw ValidationError("point_loss: spec carries utility weighting; use "
                              "utility_weighted_loss");
    }
    return detail::base_point_loss(spec.base, p, y, spec.clamp_epsilon);
}

/// ⟨ℓ(p,·), u(·,y)⟩: base losses against every class, weighted by column y of
/// the utility. Diagonal U collapses to w_y·ℓ(p,y) exactly because the off
/// column entries are exact zeros and the clamped losses are finite.
inline double utility_weighted_loss(const UtilityMatrix& u, BaseLoss base, const SimplexVector& p,
                                    int y, double clamp_eps = kDefaultClampEpsilon) {
    if (p.dim() != u.dim()) {
        throw DimensionError("utility_weighted_loss: prediction has " + std::to_string(p.dim()) +
                             " classes, utility has " + std::to_string(u.dim()));
    }
    detail::check_class_index(y, u.dim(), "utility_weighted_loss");
    const std::size_t m = u.dim();
    double acc = 0.0;
    for (std::size_t yp = 1; yp <= m; ++yp) {
        const double weight = u.entry(static_cast<int>(yp), y);
        if (weight == 0.0) continue;
        acc += detail::base_point_loss(base, p, static_cast<int>(yp), clamp_eps) * weight;
    }
    return acc;
}

/// Loss under the full spec (weighted or not) for one realized class.
inline double spec_loss(const LossSpec& spec, const SimplexVector& p, int y) {
    if (spec.is_weighted()) {
        return utility_weighted_loss(*spec.weighting, spec.base, p, y, spec.clamp_epsilon);
    }
    return detail::base_point_loss(spec.base, p, y, spec.clamp_epsilon);
}

/// ⟨ℓ(p,·), q⟩: expected loss of predicting p when the class is distributed q.
inline double expected_loss(const LossSpec& spec, const SimplexVector& p,
                            const SimplexVector& q) {
    if (p.dim() != q.dim()) {
        throw DimensionError("expected_loss: p has " + std::to_string(p.dim()) +
                             " classes, q has " + std::to_string(q.dim()));
    }
    if (spec.is_weighted() && spec.weighting->dim() != p.dim()) {
        throw DimensionError("expected_loss: utility dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t y = 1; y <= q.dim(); ++y) {
        const double qy = q.prob(static_cast<int>(y));
        if (qy == 0.0) continue;
        acc += qy * spec_loss(spec, p, static_cast<int>(y));
    }
    return acc;
}

/// Scale relative weights so the expected weighted loss of the agnostic prior
/// prediction equals its unweighted counterpart: k = ℓ̄(μ,μ) / ℓ̄^r(μ,μ).
/// For uniform μ the base losses cancel and the scaled weights sum to m.
inline std::vector<double> normalize_weights(const std::vector<double>& ratio,
                                             const SimplexVector& mu, BaseLoss base) {
    if (ratio.size() != mu.dim()) {
        throw DimensionError("normalize_weights: ratio has " + std::to_string(ratio.size()) +
                             " entries, prior has " + std::to_string(mu.dim()));
    }
    const std::size_t m = ratio.size();
    double agnostic = 0.0;   // ℓ̄(μ,μ)
    double weighted = 0.0;   // Σ μ_y r_y ℓ(μ,y)
    for (std::size_t y = 0; y < m; ++y) {
        if (!(ratio[y] > 0.0)) {
            throw ValidationError("normalize_weights: ratio for class " + std::to_string(y + 1) +
                                  " must be positive");
        }
        const double muy = mu.prob(static_cast<int>(y) + 1);
        if (!(muy > 0.0)) {
            throw ValidationError("normalize_weights: prior probability of class " +
                                  std::to_string(y + 1) +
                                  " is zero; agnostic loss undefined");
        }
        const double ell = detail::base_point_loss(base, mu, static_cast<int>(y) + 1,
                                                   kDefaultClampEpsilon);
        agnostic += muy * ell;
        weighted += muy * ratio[y] * ell;
    }
    if (!(weighted > 0.0)) {
        throw NumericalError("normalize_weights: weighted agnostic loss is zero");
    }
    const double k = agnostic / weighted;
    std::vector<double> w(m);
    for (std::size_t y = 0; y < m; ++y) w[y] = k * ratio[y];
    return w;
}

}  // namespace incent
