#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "incent/audit.hpp"
#include "incent/errors.hpp"
#include "incent/format.hpp"
#include "incent/loss.hpp"
#include "incent/mixture.hpp"
#include "incent/simplex.hpp"
#include "incent/train.hpp"

namespace incent {

enum class Regime { weighted_training, ex_post_weighting, unweighted_raw };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::weighted_training: return "weighted_training";
        case Regime::ex_post_weighting: return "ex_post_weighting";
        default: return "unweighted_raw";
    }
}

inline Regime regime_from_string(const std::string& s) {
    if (s == "weighted_training") return Regime::weighted_training;
    if (s == "ex_post_weighting") return Regime::ex_post_weighting;
    if (s == "unweighted_raw") return Regime::unweighted_raw;
    throw ValidationError("unknown regime '" + s + "'");
}

enum class WeightMode { ratio, inverse_probability };

/// Either a single emphasized class at ratio:1 against the rest, or weights
/// proportional to inverse training-split frequencies. Both are rescaled to
/// cost parity on the training prior before use.
struct WeightScheme {
    WeightMode mode = WeightMode::ratio;
    double ratio = 99.0;
    int emphasized_class = 1;

    void validate(std::size_t m) const {
        if (mode == WeightMode::ratio) {
            if (!(ratio > 0.0)) throw ValidationError("WeightScheme: ratio must be positive");
            detail::check_class_index(emphasized_class, m, "WeightScheme");
        }
    }
};

/// Where the dataset comes from; echoed into reports for provenance.
struct DataSource {
    std::string csv_path;  // when nonempty the dataset is loaded, not generated
    std::optional<MixtureSpec> mixture;
    std::size_t n = 0;
    SplitFractions fractions;
    std::uint64_t seed = 0;

    void validate() const {
        if (!csv_path.empty()) return;
        if (!mixture) throw ValidationError("DataSource: need a mixture spec or a csv path");
        mixture->validate();
        fractions.validate();
        if (n < mixture->classes()) {
            throw ValidationError("DataSource: n must be at least the class count");
        }
    }
};

struct ExperimentConfig {
    DataSource data;
    WeightScheme weights;
    ModelSpec model;
    BaseLoss base = BaseLoss::logistic;
    double clamp_epsilon = kDefaultClampEpsilon;
    double learning_rate = 0.1;
    double decay = 0.5;
    std::size_t intervals = 10;
    std::size_t max_steps = 100;
    std::size_t batch = 0;
    std::size_t runs = 5;
    std::uint64_t base_seed = 1;
    std::vector<Regime> regimes{Regime::weighted_training, Regime::ex_post_weighting,
                                Regime::unweighted_raw};

    bool has_regime(Regime r) const {
        return std::find(regimes.begin(), regimes.end(), r) != regimes.end();
    }

    void validate() const {
        data.validate();
        model.validate();
        if (runs < 1) throw ValidationError("ExperimentConfig: need at least one run");
        if (regimes.empty()) throw ValidationError("ExperimentConfig: need at least one regime");
    }
};

struct MetricSummary {
    std::vector<double> per_run;  // best-interval value per run, reporting-rounded
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

inline MetricSummary summarize_metric(std::vector<double> per_run) {
    MetricSummary s;
    s.per_run = std::move(per_run);
    if (s.per_run.empty()) return s;
    double total = 0.0;
    s.min = s.per_run.front();
    s.max = s.per_run.front();
    for (double v : s.per_run) {
        total += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = round12(total / static_cast<double>(s.per_run.size()));
    return s;
}

struct RegimeResult {
    Regime regime = Regime::weighted_training;
    MetricSummary weighted_loss;           // lower is better; per-run minimum over intervals
    MetricSummary classification_utility;  // higher is better; per-run maximum over intervals
};

/// Gains are reported twice: paired per run (same seed on both sides) and
/// once on the summary means. Min/max rows are deliberately not paired.
struct PairGain {
    std::string pair;
    Regime baseline = Regime::weighted_training;
    Regime contender = Regime::ex_post_weighting;
    std::vector<double> loss_per_run;
    std::vector<double> utility_per_run;
    double loss_gain_of_means = 0.0;
    double utility_gain_of_means = 0.0;
};

struct SeriesPoint {
    std::size_t run = 0;
    Regime regime = Regime::weighted_training;
    std::size_t step = 0;
    double weighted_loss = 0.0;
    double classification_utility = 0.0;
};

struct RunInfo {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::string weighted_fingerprint;    // empty when weighted training not requested
    std::string unweighted_fingerprint;  // shared by ex-post and raw regimes
};

struct Report {
    int schema_version = 1;
    std::size_t runs = 0;
    bool partial = false;
    std::string abort_message;  // set on a partial dump after divergence
    std::vector<double> train_prior;
    std::vector<double> normalized_weights;
    std::string weight_normalization =
        "agnostic cost parity on the training-split prior; scaled weights";
    std::vector<Regime> regimes_included;
    std::vector<RunInfo> run_infos;
    std::vector<RegimeResult> results;
    std::vector<PairGain> gains;
    std::vector<SeriesPoint> series;
};

/// Raised when any run diverges; carries whatever completed so the caller can
/// dump a partial report before exiting.
class ExperimentAborted : public NumericalError {
public:
    ExperimentAborted(Report partial, std::size_t failed_run, std::size_t step,
                      const std::string& what)
        : NumericalError(what), partial_(std::move(partial)), failed_run_(failed_run),
          step_(step) {}
    const Report& partial() const noexcept { return partial_; }
    std::size_t failed_run() const noexcept { return failed_run_; }
    std::size_t step() const noexcept { return step_; }

private:
    Report partial_;
    std::size_t failed_run_;
    std::size_t step_;
};

/// FNV-1a over the full-precision decimal forms of the parameters; enough to
/// show two report entries reference the same trained model.
inline std::string param_fingerprint(const std::vector<double>& params) {
    std::uint64_t h = 1469598103934665603ull;
    char buf[40];
    for (double p : params) {
        const int n = std::snprintf(buf, sizeof(buf), "%.17g;", p);
        for (int i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

/// Parallelism for experiment runs: explicit argument, else INCENT_JOBS, else
/// the hardware count. Output is identical at any setting — results land in
/// per-run slots and are reduced in run order.
inline std::size_t resolve_jobs(std::size_t requested, std::size_t runs) {
    if (requested == 0) {
        if (const char* env = std::getenv("INCENT_JOBS"); env && *env) {
            char* end = nullptr;
            const unsigned long v = std::strtoul(env, &end, 10);
            if (end == env || *end != '\0' || v == 0) {
                throw ValidationError("INCENT_JOBS must be a positive integer");
            }
            requested = static_cast<std::size_t>(v);
        } else {
            requested = std::max<std::size_t>(1, std::thread::hardware_concurrency());
        }
    }
    return std::max<std::size_t>(1, std::min(requested, runs));
}

namespace detail {

struct RunArtifacts {
    std::optional<RunTrace> weighted;
    std::optional<RunTrace> unweighted;
};

struct RunFailure {
    std::size_t run = 0;
    std::size_t step = 0;
    std::string message;
};

struct BestMetrics {
    double loss = 0.0;
    double utility = 0.0;
};

/// Per-interval regime metrics from a trace, reporting-rounded so every
/// downstream aggregate can be reproduced from the emitted series.
inline void regime_series(const RunTrace& trace, Regime regime, std::size_t run,
                          std::vector<SeriesPoint>& out) {
    for (const IntervalRecord& rec : trace.records) {
        const EvalMetrics& ev = *rec.eval;
        const SpecMetrics& sm = ev.per_spec.front();
        SeriesPoint pt;
        pt.run = run;
        pt.regime = regime;
        pt.step = rec.step;
        switch (regime) {
            case Regime::weighted_training:
                pt.weighted_loss = sm.raw_loss;
                pt.classification_utility = ev.raw_utility;
                break;
            case Regime::ex_post_weighting:
                pt.weighted_loss = sm.adjusted_loss;
                pt.classification_utility = ev.adjusted_utility;
                break;
            case Regime::unweighted_raw:
                pt.weighted_loss = sm.raw_loss;
                pt.classification_utility = ev.raw_utility;
                break;
        }
        pt.weighted_loss = round12(pt.weighted_loss);
        pt.classification_utility = round12(pt.classification_utility);
        out.push_back(pt);
    }
}

/// Best interval per metric, independently; the step-0 baseline never counts.
inline BestMetrics best_of(const std::vector<SeriesPoint>& series, std::size_t run,
                           Regime regime) {
    BestMetrics best{std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
    for (const SeriesPoint& pt : series) {
        if (pt.run != run || pt.regime != regime || pt.step == 0) continue;
        best.loss = std::min(best.loss, pt.weighted_loss);
        best.utility = std::max(best.utility, pt.classification_utility);
    }
    return best;
}

}  // namespace detail

/// The three-regime protocol: per run seed, train once on the weighted loss
/// and once unweighted; the unweighted model serves both Ex Post Weighting
/// (predictions adjusted at evaluation) and Unweighted Raw (predictions used
/// as-is). Both trainings share the data draw and the parameter init, so any
/// difference is the loss function.
inline Report run_experiment(const ExperimentConfig& config, const Dataset& data,
                             std::size_t jobs = 0) {
    config.validate();
    if (data.m < 2) throw ValidationError("run_experiment: dataset has no classes");
    config.weights.validate(data.m);

    const SimplexVector train_prior = data.split_prior(Split::train);
    std::vector<double> ratio(data.m, 1.0);
    if (config.weights.mode == WeightMode::ratio) {
        ratio[static_cast<std::size_t>(config.weights.emphasized_class - 1)] =
            config.weights.ratio;
    } else {
        for (std::size_t y = 0; y < data.m; ++y) {
            ratio[y] = 1.0 / train_prior.prob(static_cast<int>(y) + 1);
        }
    }
    const std::vector<double> weights = normalize_weights(ratio, train_prior, config.base);
    const UtilityMatrix utility = UtilityMatrix::from_class_weights(weights);
    const LossSpec weighted_spec =
        LossSpec::weighted(config.base, utility, config.clamp_epsilon);
    const LossSpec unweighted_spec = LossSpec::unweighted(config.base, config.clamp_epsilon);
    const EvalPlan plan{utility, {weighted_spec}};

    const bool need_weighted = config.has_regime(Regime::weighted_training);
    const bool need_unweighted = config.has_regime(Regime::ex_post_weighting) ||
                                 config.has_regime(Regime::unweighted_raw);

    std::vector<detail::RunArtifacts> artifacts(config.runs);
    std::vector<std::optional<detail::RunFailure>> failures(config.runs);
    std::atomic<std::size_t> next{0};
    const std::size_t workers = resolve_jobs(jobs, config.runs);

    const auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= config.runs) return;
            TrainConfig cfg;
            cfg.learning_rate = config.learning_rate;
            cfg.decay = config.decay;
            cfg.intervals = config.intervals;
            cfg.max_steps = config.max_steps;
            cfg.batch = config.batch;
            cfg.seed = config.base_seed + k;
            try {
                if (need_weighted) {
                    cfg.loss = weighted_spec;
                    artifacts[k].weighted = train(config.model, data, cfg, plan);
                }
                if (need_unweighted) {
                    cfg.loss = unweighted_spec;
                    artifacts[k].unweighted = train(config.model, data, cfg, plan);
                }
            } catch (const DivergenceError& e) {
                failures[k] = detail::RunFailure{k, e.step(), e.what()};
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    const auto run_complete = [&](std::size_t k) {
        return (!need_weighted || artifacts[k].weighted.has_value()) &&
               (!need_unweighted || artifacts[k].unweighted.has_value());
    };

    Report report;
    report.runs = config.runs;
    report.regimes_included = config.regimes;
    report.train_prior.assign(train_prior.values().begin(), train_prior.values().end());
    for (double& v : report.train_prior) v = round12(v);
    report.normalized_weights = weights;
    for (double& v : report.normalized_weights) v = round12(v);

    std::vector<std::size_t> complete;
    for (std::size_t k = 0; k < config.runs; ++k) {
        if (run_complete(k)) complete.push_back(k);
    }
    for (std::size_t k : complete) {
        RunInfo info;
        info.run = k;
        info.seed = config.base_seed + k;
        if (artifacts[k].weighted) {
            info.weighted_fingerprint = param_fingerprint(artifacts[k].weighted->final_params);
        }
        if (artifacts[k].unweighted) {
            info.unweighted_fingerprint =
                param_fingerprint(artifacts[k].unweighted->final_params);
        }
        report.run_infos.push_back(std::move(info));
        for (Regime r : config.regimes) {
            const RunTrace& trace = (r == Regime::weighted_training) ? *artifacts[k].weighted
                                                                     : *artifacts[k].unweighted;
            detail::regime_series(trace, r, k, report.series);
        }
    }

    for (Regime r : config.regimes) {
        std::vector<double> losses, utilities;
        for (std::size_t k : complete) {
            const detail::BestMetrics best = detail::best_of(report.series, k, r);
            losses.push_back(best.loss);
            utilities.push_back(best.utility);
        }
        RegimeResult result;
        result.regime = r;
        result.weighted_loss = summarize_metric(std::move(losses));
        result.classification_utility = summarize_metric(std::move(utilities));
        report.results.push_back(std::move(result));
    }

    const auto result_of = [&](Regime r) -> const RegimeResult* {
        for (const RegimeResult& res : report.results) {
            if (res.regime == r) return &res;
        }
        return nullptr;
    };
    const auto add_pair = [&](Regime baseline, Regime contender) {
        const RegimeResult* a = result_of(baseline);
        const RegimeResult* b = result_of(contender);
        if (!a || !b || a->weighted_loss.per_run.empty()) return;
        PairGain gain;
        gain.pair = to_string(contender) + "_vs_" + to_string(baseline);
        gain.baseline = baseline;
        gain.contender = contender;
        for (std::size_t i = 0; i < a->weighted_loss.per_run.size(); ++i) {
            gain.loss_per_run.push_back(
                round12(misalignment_gain(a->weighted_loss.per_run[i],
                                          b->weighted_loss.per_run[i], GainDirection::loss)));
            gain.utility_per_run.push_back(round12(
                misalignment_gain(a->classification_utility.per_run[i],
                                  b->classification_utility.per_run[i],
                                  GainDirection::utility)));
        }
        gain.loss_gain_of_means = round12(misalignment_gain(
            a->weighted_loss.mean, b->weighted_loss.mean, GainDirection::loss));
        gain.utility_gain_of_means = round12(
            misalignment_gain(a->classification_utility.mean, b->classification_utility.mean,
                              GainDirection::utility));
        report.gains.push_back(std::move(gain));
    };
    add_pair(Regime::weighted_training, Regime::ex_post_weighting);
    add_pair(Regime::weighted_training, Regime::unweighted_raw);

    for (std::size_t k = 0; k < config.runs; ++k) {
        if (!failures[k]) continue;
        report.partial = true;
        report.abort_message = failures[k]->message;
        throw ExperimentAborted(std::move(report), failures[k]->run, failures[k]->step,
                                failures[k]->message);
    }
    return report;
}

}  // namespace incent
