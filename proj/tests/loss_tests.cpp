#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using Catch::Approx;
using namespace incent;

TEST_CASE("Logistic point loss matches hand values") {
    const LossSpec logistic = LossSpec::unweighted(BaseLoss::logistic);
    REQUIRE(point_loss(logistic, SimplexVector{0.5, 0.5}, 1) == 0.6931471805599453);
    REQUIRE(point_loss(logistic, SimplexVector{0.5, 0.5}, 2) == 0.6931471805599453);
    // Probability below the clamp floor evaluates at the floor.
    const SimplexVector tiny(std::vector<double>{1e-15, 1.0 - 1e-15});
    REQUIRE(point_loss(logistic, tiny, 1) == Approx(27.631021115928547).margin(1e-12));
}

TEST_CASE("Brier point loss matches hand values") {
    const LossSpec brier = LossSpec::unweighted(BaseLoss::brier);
    REQUIRE(point_loss(brier, SimplexVector{0.6, 0.4}, 1) == Approx(0.32).margin(1e-15));
    REQUIRE(point_loss(brier, SimplexVector{1.0, 0.0}, 1) == 0.0);
    REQUIRE(point_loss(brier, SimplexVector{0.0, 1.0}, 1) == 2.0);
}

TEST_CASE("Expected loss fixture") {
    const LossSpec logistic = LossSpec::unweighted(BaseLoss::logistic);
    REQUIRE(expected_loss(logistic, SimplexVector{0.6, 0.4}, SimplexVector{0.5, 0.5}) ==
            Approx(0.7135581778200728).margin(1e-15));
}

TEST_CASE("Utility-weighted loss fixture and diagonal reduction") {
    const UtilityMatrix w = UtilityMatrix::from_class_weights({99.0, 1.0});
    REQUIRE(utility_weighted_loss(w, BaseLoss::logistic, SimplexVector{0.5, 0.5}, 1,
                                  kDefaultClampEpsilon) ==
            Approx(68.62157087543459).margin(1e-12));

    // Diagonal weighting is literally w_y times the base loss: one term survives.
    testutil::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
        const UtilityMatrix d = testutil::random_diagonal_utility(rng, m);
        const SimplexVector p = testutil::random_simplex(rng, m);
        const int y = 1 + static_cast<int>(rng.uniform() * static_cast<double>(m));
        const BaseLoss base = (trial % 2 == 0) ? BaseLoss::logistic : BaseLoss::brier;
        const double weighted = utility_weighted_loss(d, base, p, y, kDefaultClampEpsilon);
        const double direct = d.entry(y, y) * point_loss(LossSpec::unweighted(base), p, y);
        REQUIRE(weighted == direct);
    }
}

TEST_CASE("Weighted loss equals the utility column dotted with base losses") {
    testutil::Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
        const UtilityMatrix u = testutil::random_utility(rng, m);
        const SimplexVector p = testutil::random_simplex(rng, m);
        const int y = 1 + static_cast<int>(rng.uniform() * static_cast<double>(m));
        double byhand = 0.0;
        for (std::size_t j = 1; j <= m; ++j) {
            byhand += u.entry(static_cast<int>(j), y) *
                      point_loss(LossSpec::unweighted(BaseLoss::logistic), p,
                                 static_cast<int>(j));
        }
        REQUIRE(utility_weighted_loss(u, BaseLoss::logistic, p, y, kDefaultClampEpsilon) ==
                Approx(byhand).margin(1e-12));
    }
}

TEST_CASE("Both base losses are strictly proper on a binary grid") {
    for (BaseLoss base : {BaseLoss::logistic, BaseLoss::brier}) {
        const LossSpec spec = LossSpec::unweighted(base);
        for (int qi = 1; qi <= 19; ++qi) {
            const double q1 = 0.05 * qi;
            const SimplexVector q{q1, 1.0 - q1};
            const double at_truth = expected_loss(spec, q, q);
            for (int pi = 1; pi <= 19; ++pi) {
                if (pi == qi) continue;
                const double p1 = 0.05 * pi;
                REQUIRE(expected_loss(spec, SimplexVector{p1, 1.0 - p1}, q) > at_truth);
            }
        }
    }
}

TEST_CASE("Weight normalization reproduces the hand-computed fixtures") {
    SECTION("99:1 against a uniform binary prior") {
        const std::vector<double> w =
            normalize_weights({99.0, 1.0}, SimplexVector{0.5, 0.5}, BaseLoss::logistic);
        REQUIRE(w[0] == Approx(1.98).margin(1e-12));
        REQUIRE(w[1] == Approx(0.02).margin(1e-12));
    }
    SECTION("ten classes, one emphasized") {
        std::vector<double> ratio(10, 1.0);
        ratio[0] = 99.0;
        const std::vector<double> w =
            normalize_weights(ratio, SimplexVector(std::vector<double>(10, 0.1)),
                              BaseLoss::logistic);
        REQUIRE(w[0] == Approx(9.166666666666666).margin(1e-12));
        double sum = 0.0;
        for (double v : w) sum += v;
        REQUIRE(sum == Approx(10.0).margin(1e-9));
    }
}

TEST_CASE("Normalized weights preserve the agnostic-prior cost") {
    testutil::Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 5.0);
        const BaseLoss base = (trial % 2 == 0) ? BaseLoss::logistic : BaseLoss::brier;
        const SimplexVector prior = testutil::random_simplex(rng, m);
        std::vector<double> ratio(m);
        for (double& r : ratio) r = 0.1 + 20.0 * rng.uniform();
        const std::vector<double> w = normalize_weights(ratio, prior, base);
        const LossSpec weighted =
            LossSpec::weighted(base, UtilityMatrix::from_class_weights(w));
        const LossSpec unweighted = LossSpec::unweighted(base);
        REQUIRE(expected_loss(weighted, prior, prior) ==
                Approx(expected_loss(unweighted, prior, prior)).margin(1e-12));
    }
}

TEST_CASE("normalize_weights rejects degenerate inputs") {
    REQUIRE_THROWS_AS(normalize_weights({0.0, 1.0}, SimplexVector{0.5, 0.5},
                                        BaseLoss::logistic),
                      ValidationError);
    REQUIRE_THROWS_AS(normalize_weights({1.0, 1.0}, SimplexVector{1.0, 0.0},
                                        BaseLoss::logistic),
                      ValidationError);
    REQUIRE_THROWS_AS(normalize_weights({1.0, 1.0, 1.0}, SimplexVector{0.5, 0.5},
                                        BaseLoss::logistic),
                      DimensionError);
}

TEST_CASE("LossSpec validation bounds the clamp and gates weighted use") {
    REQUIRE_THROWS_AS(LossSpec::unweighted(BaseLoss::logistic, 0.0).validate(),
                      ValidationError);
    REQUIRE_THROWS_AS(LossSpec::unweighted(BaseLoss::logistic, 2e-6).validate(),
                      ValidationError);
    LossSpec ok = LossSpec::unweighted(BaseLoss::logistic, 1e-6);
    REQUIRE_NOTHROW(ok.validate());

    const LossSpec weighted =
        LossSpec::weighted(BaseLoss::logistic, UtilityMatrix::from_class_weights({2.0, 1.0}));
    REQUIRE(weighted.is_weighted());
    REQUIRE_THROWS_AS(point_loss(weighted, SimplexVector{0.5, 0.5}, 1), ValidationError);
    REQUIRE(spec_loss(weighted, SimplexVector{0.5, 0.5}, 1) ==
            Approx(2.0 * 0.6931471805599453).margin(1e-12));
}

TEST_CASE("Base loss names round trip") {
    REQUIRE(base_loss_from_string("logistic") == BaseLoss::logistic);
    REQUIRE(base_loss_from_string("brier") == BaseLoss::brier);
    REQUIRE(to_string(BaseLoss::brier) == "brier");
    REQUIRE_THROWS_AS(base_loss_from_string("hinge"), ValidationError);
}
