// Command surface: datagen, train, experiment, curves, recalibrate, audit.
// Exit codes: 0 success, 2 rejected input, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "incent/incent.hpp"

namespace fs = std::filesystem;

namespace {

int run_datagen(const std::string& config_path, const std::string& out_path) {
    const auto j = incent::detail::parse_json_text(incent::read_file(config_path),
                                                   "datagen config '" + config_path + "'");
    const incent::DatagenConfig cfg = incent::datagen_config_from_json(j);
    const incent::Dataset data =
        incent::generate_dataset(cfg.mixture, cfg.n, cfg.fractions, cfg.seed);
    incent::atomic_write_file(out_path, incent::dataset_to_csv(data));
    std::printf("wrote %s: n=%zu m=%zu d=%zu splits=%zu/%zu/%zu seed=%llu\n", out_path.c_str(),
                data.rows.size(), data.m, data.d, data.count(incent::Split::train),
                data.count(incent::Split::validation), data.count(incent::Split::test),
                static_cast<unsigned long long>(data.seed));
    return 0;
}

int run_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_dir) {
    const incent::Dataset data = incent::read_dataset_csv(data_path);
    const auto j = incent::detail::parse_json_text(incent::read_file(config_path),
                                                   "train config '" + config_path + "'");
    const fs::path base_dir = fs::path(config_path).parent_path();
    const incent::ModelSpec model = incent::model_from_json(
        incent::detail::json_field(j, "model", "train config"));
    const incent::TrainConfig cfg = incent::train_config_from_json(
        incent::detail::json_field(j, "train", "train config"), base_dir);

    const incent::RunTrace trace = incent::train(model, data, cfg);
    const fs::path dir(out_dir);
    incent::atomic_write_file(dir / "trace.csv", incent::trace_to_csv(trace));

    const incent::PredictionLog& final_log = trace.records.back().test_log;
    std::vector<incent::SimplexVector> preds;
    std::vector<int> labels;
    preds.reserve(final_log.size());
    labels.reserve(final_log.size());
    for (const incent::PredictionRecord& rec : final_log.records()) {
        preds.push_back(rec.prediction);
        labels.push_back(rec.label);
    }
    incent::atomic_write_file(dir / "predictions.csv", incent::predictions_to_csv(preds));
    incent::atomic_write_file(dir / "labels.csv", incent::labels_to_csv(labels));
    std::printf("wrote %s/{trace.csv,predictions.csv,labels.csv}: %zu intervals, final test "
                "loss %s\n",
                out_dir.c_str(), trace.records.size(),
                incent::fmt12(incent::round12(trace.records.back().test_loss)).c_str());
    return 0;
}

void write_report_files(const fs::path& dir, const incent::Report& report, bool partial) {
    const char* json_name = partial ? "report_partial.json" : "report.json";
    const char* series_name = partial ? "series_partial.csv" : "series.csv";
    incent::atomic_write_file(dir / json_name, incent::report_to_json(report));
    incent::atomic_write_file(dir / series_name, incent::series_to_csv(report));
}

int run_experiment_cmd(const std::string& config_path, const std::string& out_dir,
                       std::size_t jobs) {
    const auto j = incent::detail::parse_json_text(incent::read_file(config_path),
                                                   "experiment config '" + config_path + "'");
    const incent::ExperimentConfig cfg =
        incent::experiment_config_from_json(j, fs::path(config_path).parent_path());
    const incent::Dataset data = incent::load_or_generate_dataset(cfg.data);
    const fs::path dir(out_dir);
    try {
        const incent::Report report = incent::run_experiment(cfg, data, jobs);
        write_report_files(dir, report, false);
    } catch (const incent::ExperimentAborted& e) {
        write_report_files(dir, e.partial(), true);
        std::fprintf(stderr, "run %zu diverged at step %zu; partial report dumped to %s\n",
                     e.failed_run(), e.step(), (dir / "report_partial.json").c_str());
        throw;
    }
    std::printf("wrote %s/{report.json,series.csv}: %zu runs, %zu regimes\n", out_dir.c_str(),
                cfg.runs, cfg.regimes.size());
    return 0;
}

int run_curves(double w1, double step, const std::string& out_path) {
    const incent::CurveTable table = incent::incentive_curves(w1, step);
    incent::atomic_write_file(out_path, incent::curves_to_csv(table));
    std::printf("wrote %s: %zu rows at w1=%s step=%s\n", out_path.c_str(), table.rows.size(),
                incent::fmt12(w1).c_str(), incent::fmt12(step).c_str());
    return 0;
}

int run_recalibrate(const std::string& utility_path, const std::string& predictions_path,
                    const std::string& out_path) {
    const incent::UtilityMatrix u = incent::read_utility_csv(utility_path);
    const std::vector<incent::SimplexVector> preds =
        incent::read_predictions_csv(predictions_path);
    std::vector<incent::SimplexVector> recovered;
    recovered.reserve(preds.size());
    for (const incent::SimplexVector& p : preds) {
        recovered.push_back(incent::analytic_recalibration(u, p));
    }
    incent::atomic_write_file(out_path, incent::predictions_to_csv(recovered));
    std::printf("wrote %s: %zu posteriors recovered (condition %s)\n", out_path.c_str(),
                recovered.size(), incent::fmt12(u.condition_estimate()).c_str());
    return 0;
}

int run_audit(const std::string& predictions_path, const std::string& labels_path,
              const std::string& utility_path, const std::string& quantize,
              const std::string& base_name, const std::string& out_path) {
    const std::vector<incent::SimplexVector> preds =
        incent::read_predictions_csv(predictions_path);
    const std::vector<int> labels = incent::read_labels_csv(labels_path);
    if (preds.size() != labels.size()) {
        throw incent::ValidationError("audit: " + std::to_string(preds.size()) +
                                      " predictions but " + std::to_string(labels.size()) +
                                      " labels");
    }
    const std::size_t m = preds.front().dim();
    std::vector<incent::PredictionRecord> records;
    records.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        records.push_back(incent::PredictionRecord{preds[i], labels[i]});
    }
    const incent::PredictionLog log(std::move(records), m);
    const incent::UtilityMatrix u = utility_path.empty()
                                        ? incent::UtilityMatrix::identity(m)
                                        : incent::read_utility_csv(utility_path);
    const incent::BaseLoss base = incent::base_loss_from_string(base_name);
    const incent::LossSpec spec = u.is_identity() ? incent::LossSpec::unweighted(base)
                                                  : incent::LossSpec::weighted(base, u);
    const incent::Quantization quant = incent::Quantization::parse(quantize);

    const incent::LearnedSummary summary = incent::recover_what_is_learned(log, quant);
    const incent::LearningIdentityResult identity =
        incent::learning_identity_check(log, spec, quant);
    const incent::LossCalibrationResult calibration =
        incent::loss_calibration_check(u, log, quant);
    incent::atomic_write_file(out_path,
                              incent::audit_report_to_json(summary, identity, calibration));
    std::printf("wrote %s: %zu groups, identity gap %s, max calibration deviation %s\n",
                out_path.c_str(), summary.groups.size(), incent::fmt12(identity.gap).c_str(),
                incent::fmt12(calibration.max_deviation).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incentive design toolkit for machine classifiers"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path;
    std::string utility_path, predictions_path, labels_path;
    std::string quantize = "exact";
    std::string base_name = "logistic";
    double w1 = 0.5;
    double step = 0.01;
    std::size_t jobs = 0;

    CLI::App* datagen = app.add_subcommand("datagen", "draw a labeled mixture dataset");
    datagen->add_option("--config", config_path, "mixture JSON config")->required();
    datagen->add_option("--out", out_path, "output dataset CSV")->required();

    CLI::App* train = app.add_subcommand("train", "run one training configuration");
    train->add_option("--data", data_path, "dataset CSV")->required();
    train->add_option("--config", config_path, "model+train JSON config")->required();
    train->add_option("--out", out_path, "output directory")->required();

    CLI::App* experiment = app.add_subcommand("experiment", "run the three-regime comparison");
    experiment->add_option("--config", config_path, "experiment JSON config")->required();
    experiment->add_option("--out", out_path, "output directory")->required();
    experiment->add_option("--jobs", jobs, "parallel runs (default: INCENT_JOBS or cores)");

    CLI::App* curves = app.add_subcommand("curves", "binary incentive curves");
    curves->add_option("--w1", w1, "class-1 weight in (0,1), unit-sum convention")->required();
    curves->add_option("--step", step, "grid step in (0,1)")->required();
    curves->add_option("--out", out_path, "output CSV")->required();

    CLI::App* recalibrate =
        app.add_subcommand("recalibrate", "recover posteriors from weighted predictions");
    recalibrate->add_option("--utility", utility_path, "utility matrix CSV")->required();
    recalibrate->add_option("--predictions", predictions_path, "predictions CSV")->required();
    recalibrate->add_option("--out", out_path, "output CSV")->required();

    CLI::App* audit = app.add_subcommand("audit", "learning-identity and calibration audit");
    audit->add_option("--predictions", predictions_path, "predictions CSV")->required();
    audit->add_option("--labels", labels_path, "labels CSV")->required();
    audit->add_option("--utility", utility_path, "utility matrix CSV (default identity)");
    audit->add_option("--quantize", quantize, "exact or grid:<resolution>");
    audit->add_option("--base", base_name, "base loss: logistic or brier");
    audit->add_option("--out", out_path, "output report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (datagen->parsed()) return run_datagen(config_path, out_path);
        if (train->parsed()) return run_train(data_path, config_path, out_path);
        if (experiment->parsed()) return run_experiment_cmd(config_path, out_path, jobs);
        if (curves->parsed()) return run_curves(w1, step, out_path);
        if (recalibrate->parsed()) {
            return run_recalibrate(utility_path, predictions_path, out_path);
        }
        if (audit->parsed()) {
            return run_audit(predictions_path, labels_path, utility_path, quantize, base_name,
                             out_path);
        }
    } catch (const incent::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const incent::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 2;
}
