#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <algorithm>
#include <random>

using Catch::Approx;
using namespace incent;

namespace {

PredictionLog four_record_log() {
    const SimplexVector pa{0.8, 0.2};
    const SimplexVector pb{0.3, 0.7};
    std::vector<PredictionRecord> records{{pa, 1}, {pa, 1}, {pa, 2}, {pb, 2}};
    return PredictionLog(std::move(records), 2);
}

}  // namespace

TEST_CASE("PredictionLog validates its records") {
    REQUIRE_THROWS_AS(PredictionLog({}, 2), ValidationError);
    std::vector<PredictionRecord> wrong_dim{{SimplexVector{0.2, 0.3, 0.5}, 1}};
    REQUIRE_THROWS_AS(PredictionLog(std::move(wrong_dim), 2), DimensionError);
    std::vector<PredictionRecord> bad_label{{SimplexVector{0.5, 0.5}, 3}};
    REQUIRE_THROWS_AS(PredictionLog(std::move(bad_label), 2), ValidationError);
}

TEST_CASE("Exact grouping recovers label frequencies") {
    const LearnedSummary summary =
        recover_what_is_learned(four_record_log(), Quantization::exact());
    REQUIRE(summary.total == 4);
    REQUIRE(summary.groups.size() == 2);
    // Groups arrive sorted by key; "0.3,0.7" precedes "0.8,0.2".
    REQUIRE(summary.groups[0].key == "0.3,0.7");
    REQUIRE(summary.groups[0].count == 1);
    REQUIRE(summary.groups[0].q_hat.prob(2) == 1.0);
    REQUIRE(summary.groups[1].count == 3);
    REQUIRE(summary.groups[1].q_hat.prob(1) == Approx(2.0 / 3.0).margin(1e-15));
    REQUIRE(summary.groups[1].label_counts == std::vector<std::size_t>{2, 1});
    REQUIRE(summary.groups[1].diameter == 0.0);
}

TEST_CASE("Singleton log forms one pure group") {
    std::vector<PredictionRecord> one{{SimplexVector{1.0, 0.0}, 1}};
    const LearnedSummary summary =
        recover_what_is_learned(PredictionLog(std::move(one), 2), Quantization::exact());
    REQUIRE(summary.groups.size() == 1);
    REQUIRE(summary.groups[0].q_hat.prob(1) == 1.0);
}

TEST_CASE("Grid grouping at one half keeps the fixture groups apart") {
    const LearnedSummary summary =
        recover_what_is_learned(four_record_log(), Quantization::grid(0.5));
    REQUIRE(summary.groups.size() == 2);
    for (const LearnedGroup& g : summary.groups) {
        REQUIRE(g.diameter == 0.0);
    }
}

TEST_CASE("Probability one lands in the top grid cell") {
    std::vector<PredictionRecord> recs{{SimplexVector{1.0, 0.0}, 1},
                                       {SimplexVector{0.8, 0.2}, 1}};
    const LearnedSummary summary =
        recover_what_is_learned(PredictionLog(std::move(recs), 2), Quantization::grid(0.25));
    // Both predictions fall in cell index 3 of 4 on the first coordinate.
    REQUIRE(summary.groups.size() == 1);
    REQUIRE(summary.groups[0].count == 2);
}

TEST_CASE("Grid groups have bounded diameter and conserve counts") {
    testutil::Rng rng(17);
    std::vector<PredictionRecord> recs;
    for (int i = 0; i < 400; ++i) {
        recs.push_back({testutil::random_simplex(rng, 3),
                        1 + static_cast<int>(rng.uniform() * 3.0)});
    }
    const PredictionLog log(std::move(recs), 3);
    const LearnedSummary summary = recover_what_is_learned(log, Quantization::grid(0.1));
    std::size_t total = 0;
    for (const LearnedGroup& g : summary.groups) {
        total += g.count;
        REQUIRE(g.diameter < 0.1 + 1e-12);
        std::size_t label_total = 0;
        for (std::size_t c : g.label_counts) label_total += c;
        REQUIRE(label_total == g.count);
    }
    REQUIRE(total == 400);
}

TEST_CASE("Quantization parses its textual forms") {
    REQUIRE(Quantization::parse("exact").kind == Quantization::Kind::exact);
    const Quantization g = Quantization::parse("grid:0.05");
    REQUIRE(g.kind == Quantization::Kind::grid);
    REQUIRE(g.resolution == 0.05);
    REQUIRE(g.describe() == "grid:0.05");
    REQUIRE_THROWS_AS(Quantization::parse("grid:0.005"), ValidationError);
    REQUIRE_THROWS_AS(Quantization::parse("grid:abc"), ValidationError);
    REQUIRE_THROWS_AS(Quantization::parse("grid:0.1junk"), ValidationError);
    REQUIRE_THROWS_AS(Quantization::parse("fuzzy"), ValidationError);
    REQUIRE_THROWS_AS(Quantization::grid(2.0), ValidationError);
}

TEST_CASE("Learning identity on the four-record fixture") {
    const LearningIdentityResult res = learning_identity_check(
        four_record_log(), LossSpec::unweighted(BaseLoss::logistic), Quantization::exact());
    REQUIRE(res.lhs == Approx(0.6030999897503131).margin(1e-12));
    REQUIRE(res.rhs == Approx(0.6030999897503131).margin(1e-12));
    REQUIRE(res.gap < 1e-12);
}

TEST_CASE("Learning identity gap vanishes on random logs under exact grouping") {
    testutil::Rng rng(18);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 3.0);
        // A small pool of distinct predictions reused many times forces
        // nontrivial groups.
        std::vector<SimplexVector> pool;
        for (int i = 0; i < 8; ++i) pool.push_back(testutil::random_simplex(rng, m));
        std::vector<PredictionRecord> recs;
        for (int i = 0; i < 150; ++i) {
            recs.push_back({pool[static_cast<std::size_t>(rng.uniform() * 8.0)],
                            1 + static_cast<int>(rng.uniform() * static_cast<double>(m))});
        }
        const PredictionLog log(std::move(recs), m);
        const LossSpec spec =
            (trial % 2 == 0)
                ? LossSpec::unweighted(BaseLoss::logistic)
                : LossSpec::weighted(BaseLoss::brier, testutil::random_utility(rng, m));
        const LearningIdentityResult res =
            learning_identity_check(log, spec, Quantization::exact());
        REQUIRE(res.gap < 1e-12);
    }
}

TEST_CASE("Perfect singleton prediction has zero loss on both sides") {
    std::vector<PredictionRecord> one{{SimplexVector{1.0, 0.0}, 1}};
    const LearningIdentityResult res =
        learning_identity_check(PredictionLog(std::move(one), 2),
                                LossSpec::unweighted(BaseLoss::logistic),
                                Quantization::exact());
    REQUIRE(res.lhs == 0.0);
    REQUIRE(res.rhs == 0.0);
}

TEST_CASE("Loss calibration accepts synthetically calibrated logs") {
    const UtilityMatrix w = UtilityMatrix::from_class_weights({99.0, 1.0});
    const SimplexVector qa{2.0 / 3.0, 1.0 / 3.0};
    const SimplexVector qb{0.2, 0.8};
    const SimplexVector pa = optimal_weighted_prediction(w, qa);
    const SimplexVector pb = optimal_weighted_prediction(w, qb);
    REQUIRE(pa.prob(1) == Approx(0.9949748743718594).margin(1e-15));
    // Label counts realize the defining posteriors exactly: 2/1 and 1/4.
    std::vector<PredictionRecord> recs{{pa, 1}, {pa, 1}, {pa, 2},
                                       {pb, 1}, {pb, 2}, {pb, 2}, {pb, 2}, {pb, 2}};
    const PredictionLog log(std::move(recs), 2);
    const LossCalibrationResult res =
        loss_calibration_check(w, log, Quantization::exact());
    REQUIRE(res.max_deviation < 1e-12);
    REQUIRE(res.per_group.size() == 2);
}

TEST_CASE("Loss calibration flags raw posterior reporting under heavy weights") {
    const UtilityMatrix w = UtilityMatrix::from_class_weights({99.0, 1.0});
    const SimplexVector qa{2.0 / 3.0, 1.0 / 3.0};
    std::vector<PredictionRecord> recs{{qa, 1}, {qa, 1}, {qa, 2}};
    const PredictionLog log(std::move(recs), 2);
    const LossCalibrationResult res =
        loss_calibration_check(w, log, Quantization::exact());
    REQUIRE(res.max_deviation == Approx(0.32830820770519276).margin(1e-12));
}

TEST_CASE("Identity utility reduces loss calibration to plain calibration") {
    const SimplexVector q{0.25, 0.75};
    std::vector<PredictionRecord> recs{{q, 1}, {q, 2}, {q, 2}, {q, 2}};
    const LossCalibrationResult res = loss_calibration_check(
        UtilityMatrix::identity(2), PredictionLog(std::move(recs), 2), Quantization::exact());
    REQUIRE(res.max_deviation == 0.0);
}

TEST_CASE("Grouping is independent of record order") {
    testutil::Rng rng(19);
    std::vector<SimplexVector> pool;
    for (int i = 0; i < 5; ++i) pool.push_back(testutil::random_simplex(rng, 2));
    std::vector<PredictionRecord> recs;
    for (int i = 0; i < 60; ++i) {
        recs.push_back({pool[static_cast<std::size_t>(rng.uniform() * 5.0)],
                        1 + static_cast<int>(rng.uniform() * 2.0)});
    }
    std::vector<PredictionRecord> shuffled = recs;
    std::mt19937 shuffle_rng(99);
    std::shuffle(shuffled.begin(), shuffled.end(), shuffle_rng);
    const LearnedSummary a = recover_what_is_learned(PredictionLog(std::move(recs), 2),
                                                     Quantization::exact());
    const LearnedSummary b = recover_what_is_learned(PredictionLog(std::move(shuffled), 2),
                                                     Quantization::exact());
    REQUIRE(a.groups.size() == b.groups.size());
    for (std::size_t i = 0; i < a.groups.size(); ++i) {
        REQUIRE(a.groups[i].key == b.groups[i].key);
        REQUIRE(a.groups[i].count == b.groups[i].count);
        REQUIRE(a.groups[i].label_counts == b.groups[i].label_counts);
    }
}

TEST_CASE("Misalignment gain reproduces the reference arithmetic") {
    REQUIRE(misalignment_gain(0.805, 0.749, GainDirection::loss) ==
            Approx(6.96).margin(0.005));
    REQUIRE(misalignment_gain(0.292, 0.309, GainDirection::utility) ==
            Approx(5.82).margin(0.005));
    REQUIRE(misalignment_gain(0.5, 0.5, GainDirection::loss) == 0.0);

    // Swapping the roles flips the sign of the improvement.
    const double forward = misalignment_gain(0.805, 0.749, GainDirection::loss);
    const double backward = misalignment_gain(0.749, 0.805, GainDirection::loss);
    REQUIRE(forward > 0.0);
    REQUIRE(backward < 0.0);

    REQUIRE_THROWS_AS(misalignment_gain(0.0, 1.0, GainDirection::loss), ValidationError);
    REQUIRE_THROWS_AS(
        misalignment_gain(std::numeric_limits<double>::quiet_NaN(), 1.0, GainDirection::loss),
        ValidationError);
}
