#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "incent/audit.hpp"
#include "incent/decision.hpp"
#include "incent/errors.hpp"
#include "incent/loss.hpp"
#include "incent/mixture.hpp"
#include "incent/simplex.hpp"

namespace incent {

enum class ModelFamily { linear_softmax, one_hidden_layer };
enum class Activation { tanh_act, relu };

inline std::string to_string(ModelFamily f) {
    return f == ModelFamily::linear_softmax ? "linear-softmax" : "one-hidden-layer";
}

inline ModelFamily model_family_from_string(const std::string& s) {
    if (s == "linear-softmax") return ModelFamily::linear_softmax;
    if (s == "one-hidden-layer") return ModelFamily::one_hidden_layer;
    throw ValidationError("unknown model family '" + s + "'");
}

inline std::string to_string(Activation a) {
    return a == Activation::tanh_act ? "tanh" : "relu";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh_act;
    if (s == "relu") return Activation::relu;
    throw ValidationError("unknown activation '" + s + "' (expected tanh or relu)");
}

struct ModelSpec {
    ModelFamily family = ModelFamily::linear_softmax;
    std::size_t width = 0;  // hidden layer only
    Activation activation = Activation::tanh_act;
    double init_scale = 0.1;

    void validate() const {
        if (family == ModelFamily::one_hidden_layer && width < 1) {
            throw ValidationError("ModelSpec: hidden layer width must be at least 1");
        }
        if (!(init_scale >= 0.0)) {
            throw ValidationError("ModelSpec: init_scale must be nonnegative");
        }
    }
};

/// Scores pass through an exponential normalization shifted by the maximum, so
/// extreme scores saturate instead of overflowing.
inline std::vector<double> softmax(const std::vector<double>& scores) {
    double mx = scores.front();
    for (double s : scores) mx = std::max(mx, s);
    std::vector<double> p(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

/// Dense parameter vector for one of the two supported families. Layout:
/// linear-softmax: W (m×d) then b (m);
/// one-hidden-layer: W1 (width×d), b1 (width), W2 (m×width), b2 (m).
struct Model {
    ModelSpec spec;
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<double> params;

    static std::size_t param_count(const ModelSpec& spec, std::size_t m, std::size_t d) {
        if (spec.family == ModelFamily::linear_softmax) return m * d + m;
        return spec.width * d + spec.width + m * spec.width + m;
    }

    /// Parameters drawn uniformly in [-init_scale, init_scale].
    static Model init(const ModelSpec& spec, std::size_t m, std::size_t d, std::uint64_t seed) {
        spec.validate();
        detail::require(m >= 2, "Model: need at least 2 classes");
        detail::require(d >= 1, "Model: need at least 1 feature");
        Model model{spec, m, d, std::vector<double>(param_count(spec, m, d))};
        detail::Rng rng(seed);
        for (double& p : model.params) {
            p = spec.init_scale * (2.0 * rng.uniform() - 1.0);
        }
        return model;
    }

    std::vector<double> scores(const std::vector<double>& x) const {
        std::vector<double> hidden;
        return scores_cached(x, hidden, hidden);
    }

    /// Scores with the hidden pre-activations and activations exposed for backprop.
    std::vector<double> scores_cached(const std::vector<double>& x, std::vector<double>& h_pre,
                                      std::vector<double>& h) const {
        if (spec.family == ModelFamily::linear_softmax) {
            std::vector<double> s(m);
            for (std::size_t k = 0; k < m; ++k) {
                double acc = params[m * d + k];  // bias
                for (std::size_t t = 0; t < d; ++t) acc += params[k * d + t] * x[t];
                s[k] = acc;
            }
            return s;
        }
        const std::size_t w = spec.width;
        const std::size_t off_b1 = w * d;
        const std::size_t off_w2 = off_b1 + w;
        const std::size_t off_b2 = off_w2 + m * w;
        h_pre.resize(w);
        h.resize(w);
        for (std::size_t j = 0; j < w; ++j) {
            double acc = params[off_b1 + j];
            for (std::size_t t = 0; t < d; ++t) acc += params[j * d + t] * x[t];
            h_pre[j] = acc;
            h[j] = spec.activation == Activation::tanh_act ? std::tanh(acc)
                                                           : std::max(acc, 0.0);
        }
        std::vector<double> s(m);
        for (std::size_t k = 0; k < m; ++k) {
            double acc = params[off_b2 + k];
            for (std::size_t j = 0; j < w; ++j) acc += params[off_w2 + k * w + j] * h[j];
            s[k] = acc;
        }
        return s;
    }

    SimplexVector predict(const std::vector<double>& x) const {
        return SimplexVector(softmax(scores(x)));
    }
};

struct TrainConfig {
    LossSpec loss = LossSpec::unweighted(BaseLoss::logistic);
    double learning_rate = 0.1;
    double decay = 0.5;          // multiplies the rate on validation plateau
    std::size_t intervals = 10;  // evaluation cadence in steps
    std::size_t max_steps = 100;
    std::size_t batch = 0;  // 0 = full batch; otherwise sequential windows
    std::uint64_t seed = 1;

    void validate() const {
        loss.validate();
        // Zero rate is allowed: a no-op optimizer is a legitimate baseline.
        if (!(learning_rate >= 0.0)) {
            throw ValidationError("TrainConfig: learning_rate must be nonnegative");
        }
        if (!(decay > 0.0 && decay <= 1.0)) {
            throw ValidationError("TrainConfig: decay must lie in (0, 1]");
        }
        if (intervals < 1) throw ValidationError("TrainConfig: intervals must be at least 1");
        if (max_steps < 1) throw ValidationError("TrainConfig: max_steps must be at least 1");
    }
};

/// Validation loss counts as plateaued when it fails to improve on the best
/// seen by this relative margin over one evaluation interval.
constexpr double kPlateauRelativeImprovement = 1e-5;

namespace detail {

/// Column of the utility realized by label y, or the label indicator when
/// unweighted; the single code path keeps ratio-1 weighting bitwise equal to
/// the unweighted loss.
inline void loss_column(const LossSpec& spec, std::size_t m, int y, std::vector<double>& c) {
    c.assign(m, 0.0);
    if (spec.is_weighted()) {
        for (std::size_t j = 0; j < m; ++j) {
            c[j] = spec.weighting->entry(static_cast<int>(j) + 1, y);
        }
    } else {
        c[static_cast<std::size_t>(y - 1)] = 1.0;
    }
}

/// Loss value and its gradient with respect to the probability vector.
inline double loss_and_prob_gradient(const LossSpec& spec, const std::vector<double>& p,
                                     const std::vector<double>& c, std::vector<double>& gp) {
    const std::size_t m = p.size();
    gp.assign(m, 0.0);
    double loss = 0.0;
    if (spec.base == BaseLoss::logistic) {
        const double eps = spec.clamp_epsilon;
        for (std::size_t j = 0; j < m; ++j) {
            if (c[j] == 0.0) continue;
            loss += -c[j] * std::log(std::max(p[j], eps));
            if (p[j] > eps) gp[j] = -c[j] / p[j];  // clamp region has zero slope
        }
        return loss;
    }
    double weight_sum = 0.0;
    double sumsq = 0.0;
    double cdot = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        weight_sum += c[j];
        sumsq += p[j] * p[j];
        cdot += c[j] * p[j];
    }
    loss = weight_sum * (sumsq + 1.0) - 2.0 * cdot;
    for (std::size_t j = 0; j < m; ++j) gp[j] = 2.0 * (weight_sum * p[j] - c[j]);
    return loss;
}

}  // namespace detail

/// Mean loss over a batch and its gradient with respect to the parameters.
/// The softmax chain rule collapses to gs_k = p_k (gp_k - <gp, p>).
inline double compute_loss_and_gradient(const Model& model,
                                        const std::vector<const DatasetRow*>& batch,
                                        const LossSpec& spec, std::vector<double>& grad) {
    if (batch.empty()) throw ValidationError("compute_loss_and_gradient: empty batch");
    const std::size_t m = model.m;
    const std::size_t d = model.d;
    grad.assign(model.params.size(), 0.0);
    std::vector<double> c, gp, gs(m), h_pre, h;
    double total = 0.0;
    for (const DatasetRow* row : batch) {
        const std::vector<double> s = model.scores_cached(row->x, h_pre, h);
        const std::vector<double> p = softmax(s);
        detail::loss_column(spec, m, row->label, c);
        total += detail::loss_and_prob_gradient(spec, p, c, gp);
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) dot += gp[j] * p[j];
        for (std::size_t k = 0; k < m; ++k) gs[k] = p[k] * (gp[k] - dot);

        if (model.spec.family == ModelFamily::linear_softmax) {
            for (std::size_t k = 0; k < m; ++k) {
                for (std::size_t t = 0; t < d; ++t) grad[k * d + t] += gs[k] * row->x[t];
                grad[m * d + k] += gs[k];
            }
            continue;
        }
        const std::size_t w = model.spec.width;
        const std::size_t off_b1 = w * d;
        const std::size_t off_w2 = off_b1 + w;
        const std::size_t off_b2 = off_w2 + m * w;
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t j = 0; j < w; ++j) grad[off_w2 + k * w + j] += gs[k] * h[j];
            grad[off_b2 + k] += gs[k];
        }
        for (std::size_t j = 0; j < w; ++j) {
            double gh = 0.0;
            for (std::size_t k = 0; k < m; ++k) gh += gs[k] * model.params[off_w2 + k * w + j];
            const double slope = model.spec.activation == Activation::tanh_act
                                     ? 1.0 - h[j] * h[j]
                                     : (h_pre[j] > 0.0 ? 1.0 : 0.0);
            const double ghp = gh * slope;
            for (std::size_t t = 0; t < d; ++t) grad[j * d + t] += ghp * row->x[t];
            grad[off_b1 + j] += ghp;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv_n;
    return total * inv_n;
}

/// Per-spec test metrics: losses against realized labels, and against the
/// exact posterior when the dataset carries one (the Bayes columns).
struct SpecMetrics {
    double raw_loss = 0.0;
    double adjusted_loss = 0.0;
    double raw_bayes_loss = 0.0;
    double adjusted_bayes_loss = 0.0;
};

struct EvalMetrics {
    std::size_t n = 0;
    std::vector<SpecMetrics> per_spec;
    double raw_utility = 0.0;       // mean realized u(argmax p, y)
    double adjusted_utility = 0.0;  // same after optimal weighted adjustment
};

/// Evaluate raw and ex-post-adjusted predictions of a model over one split.
inline EvalMetrics evaluate(const Model& model, const Dataset& data, Split split,
                            const std::vector<LossSpec>& specs, const UtilityMatrix& u) {
    if (u.dim() != data.m || model.m != data.m) {
        throw DimensionError("evaluate: class count mismatch");
    }
    EvalMetrics out;
    out.per_spec.assign(specs.size(), SpecMetrics{});
    for (const DatasetRow& row : data.rows) {
        if (row.split != split) continue;
        ++out.n;
        const SimplexVector raw = model.predict(row.x);
        const SimplexVector adjusted = optimal_weighted_prediction(u, raw);
        for (std::size_t s = 0; s < specs.size(); ++s) {
            SpecMetrics& sm = out.per_spec[s];
            sm.raw_loss += spec_loss(specs[s], raw, row.label);
            sm.adjusted_loss += spec_loss(specs[s], adjusted, row.label);
            sm.raw_bayes_loss += expected_loss(specs[s], raw, row.q_true);
            sm.adjusted_bayes_loss += expected_loss(specs[s], adjusted, row.q_true);
        }
        out.raw_utility += u.entry(argmax_decision(raw), row.label);
        out.adjusted_utility += u.entry(argmax_decision(adjusted), row.label);
    }
    if (out.n == 0) {
        throw ValidationError("evaluate: split '" + to_string(split) + "' is empty");
    }
    const double inv = 1.0 / static_cast<double>(out.n);
    for (SpecMetrics& sm : out.per_spec) {
        sm.raw_loss *= inv;
        sm.adjusted_loss *= inv;
        sm.raw_bayes_loss *= inv;
        sm.adjusted_bayes_loss *= inv;
    }
    out.raw_utility *= inv;
    out.adjusted_utility *= inv;
    return out;
}

/// Extra evaluation attached to every recorded interval.
struct EvalPlan {
    UtilityMatrix utility;
    std::vector<LossSpec> specs;
};

struct IntervalRecord {
    std::size_t step = 0;
    double learning_rate = 0.0;  // rate in force after this interval's plateau check
    double train_loss = 0.0;     // training spec, raw predictions
    double val_loss = 0.0;
    double test_loss = 0.0;
    std::optional<EvalMetrics> eval;
    PredictionLog test_log;  // raw test predictions + realized labels
};

struct RunTrace {
    std::uint64_t seed = 0;
    std::vector<IntervalRecord> records;
    std::vector<double> final_params;
};

namespace detail {

inline double mean_split_loss(const Model& model, const std::vector<const DatasetRow*>& rows,
                              const LossSpec& spec) {
    double acc = 0.0;
    std::vector<double> c, gp;
    for (const DatasetRow* row : rows) {
        const std::vector<double> p = softmax(model.scores(row->x));
        loss_column(spec, model.m, row->label, c);
        acc += loss_and_prob_gradient(spec, p, c, gp);
    }
    return acc / static_cast<double>(rows.size());
}

inline PredictionLog make_log(const Model& model, const std::vector<const DatasetRow*>& rows) {
    std::vector<PredictionRecord> records;
    records.reserve(rows.size());
    for (const DatasetRow* row : rows) {
        records.push_back(PredictionRecord{model.predict(row->x), row->label});
    }
    return PredictionLog(std::move(records), model.m);
}

}  // namespace detail

/// Full-batch (or sequential-window) gradient descent with plateau decay on
/// the validation loss. No early stopping: every run reaches max_steps and
/// the best interval is chosen at reporting time. Deterministic given seed.
inline RunTrace train(const ModelSpec& mspec, const Dataset& data, const TrainConfig& cfg,
                      const std::optional<EvalPlan>& plan = std::nullopt) {
    mspec.validate();
    cfg.validate();
    if (cfg.loss.is_weighted() && cfg.loss.weighting->dim() != data.m) {
        throw DimensionError("train: loss utility dimension does not match dataset");
    }
    std::vector<const DatasetRow*> train_rows, val_rows, test_rows;
    for (const DatasetRow& row : data.rows) {
        (row.split == Split::train ? train_rows
         : row.split == Split::validation ? val_rows
                                          : test_rows)
            .push_back(&row);
    }
    if (train_rows.empty() || val_rows.empty() || test_rows.empty()) {
        throw ValidationError("train: dataset must contain all three splits");
    }

    Model model = Model::init(mspec, data.m, data.d, cfg.seed);
    double lr = cfg.learning_rate;
    double best_val = std::numeric_limits<double>::infinity();
    RunTrace trace;
    trace.seed = cfg.seed;

    const auto record = [&](std::size_t step, bool apply_plateau) {
        const double val = detail::mean_split_loss(model, val_rows, cfg.loss);
        if (apply_plateau) {
            if (val > best_val * (1.0 - kPlateauRelativeImprovement)) lr *= cfg.decay;
        }
        best_val = std::min(best_val, val);
        IntervalRecord rec{step,
                           lr,
                           detail::mean_split_loss(model, train_rows, cfg.loss),
                           val,
                           detail::mean_split_loss(model, test_rows, cfg.loss),
                           std::nullopt,
                           detail::make_log(model, test_rows)};
        if (plan) {
            rec.eval = evaluate(model, data, Split::test, plan->specs, plan->utility);
        }
        trace.records.push_back(std::move(rec));
    };

    record(0, false);  // pre-training baseline; never selected as a best interval

    std::vector<double> grad;
    std::vector<const DatasetRow*> window;
    std::size_t cursor = 0;
    for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
        const std::vector<const DatasetRow*>* batch = &train_rows;
        if (cfg.batch > 0 && cfg.batch < train_rows.size()) {
            window.clear();
            for (std::size_t i = 0; i < cfg.batch; ++i) {
                window.push_back(train_rows[(cursor + i) % train_rows.size()]);
            }
            cursor = (cursor + cfg.batch) % train_rows.size();
            batch = &window;
        }
        const double loss = compute_loss_and_gradient(model, *batch, cfg.loss, grad);
        if (!std::isfinite(loss)) {
            throw DivergenceError(step, "train: non-finite loss at step " + std::to_string(step));
        }
        for (std::size_t i = 0; i < model.params.size(); ++i) {
            model.params[i] -= lr * grad[i];
            if (!std::isfinite(model.params[i])) {
                throw DivergenceError(step, "train: non-finite parameter at step " +
                                                std::to_string(step));
            }
        }
        if (step % cfg.intervals == 0 || step == cfg.max_steps) {
            record(step, true);
        }
    }
    trace.final_params = model.params;
    return trace;
}

}  // namespace incent
