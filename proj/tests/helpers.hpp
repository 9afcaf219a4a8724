#pragma once

#include <incent/incent.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace testutil {

using incent::detail::Rng;

// Interior simplex point; after normalization every coordinate stays above
// floor / (m * (1 + floor)), enough margin for finite-difference probes.
inline incent::SimplexVector random_simplex(Rng& rng, std::size_t m, double floor = 0.02) {
    std::vector<double> v(m);
    double sum = 0.0;
    for (double& x : v) {
        x = floor + rng.uniform();
        sum += x;
    }
    for (double& x : v) x /= sum;
    return incent::SimplexVector(std::move(v));
}

// Strictly positive utility with a boosted diagonal; redrawn until the
// condition estimate is comfortable so recalibration round trips stay tight.
inline incent::UtilityMatrix random_utility(Rng& rng, std::size_t m,
                                            double max_condition = 1e6) {
    for (;;) {
        std::vector<double> e(m * m);
        for (double& x : e) x = 0.05 + 2.0 * rng.uniform();
        for (std::size_t i = 0; i < m; ++i) e[i * m + i] += 2.0;
        incent::UtilityMatrix u = incent::UtilityMatrix::validated(std::move(e), m);
        if (u.invertible() && u.condition_estimate() < max_condition) return u;
    }
}

inline incent::UtilityMatrix random_diagonal_utility(Rng& rng, std::size_t m) {
    std::vector<double> w(m);
    for (double& x : w) x = 0.1 + 10.0 * rng.uniform();
    return incent::UtilityMatrix::from_class_weights(w);
}

// Binary two-feature mixture dataset small enough for fast training tests.
inline incent::Dataset small_dataset(std::size_t n = 120, std::uint64_t seed = 11) {
    incent::MixtureSpec mix{incent::SimplexVector{0.3, 0.7},
                            {{1.0, 0.5}, {-1.0, -0.5}},
                            {1.0, 1.0}};
    return incent::generate_dataset(mix, n, incent::SplitFractions{}, seed);
}

// Expected weighted loss at prediction p under posterior q, computed from
// first principles: E = sum_j base_loss(p, j) * (U q)_j. Independent of the
// library's expected_loss so oracle comparisons cross two implementations.
inline double oracle_expected_weighted_loss(const incent::UtilityMatrix& u,
                                            const std::vector<double>& p,
                                            const std::vector<double>& col,
                                            incent::BaseLoss base) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        double lj = 0.0;
        if (base == incent::BaseLoss::logistic) {
            lj = -std::log(std::max(p[j], 1e-12));
        } else {
            for (std::size_t t = 0; t < p.size(); ++t) {
                const double target = (t == j) ? 1.0 : 0.0;
                lj += (p[t] - target) * (p[t] - target);
            }
        }
        acc += lj * col[j];
    }
    (void)u;
    return acc;
}

inline std::vector<double> utility_times(const incent::UtilityMatrix& u,
                                         const incent::SimplexVector& q) {
    std::vector<double> col(u.dim(), 0.0);
    for (std::size_t j = 0; j < u.dim(); ++j) {
        for (std::size_t y = 0; y < u.dim(); ++y) {
            col[j] += u.entry(static_cast<int>(j) + 1, static_cast<int>(y) + 1) *
                      q.prob(static_cast<int>(y) + 1);
        }
    }
    return col;
}

struct GridSearchResult {
    double min_loss = 0.0;
    std::vector<double> argmin;
};

// Exhaustive minimum of the expected weighted loss over the simplex grid
// {c / steps : c a composition of steps into m parts}.
inline GridSearchResult grid_search_min(const incent::UtilityMatrix& u,
                                        const incent::SimplexVector& q, incent::BaseLoss base,
                                        std::size_t steps = 20) {
    const std::size_t m = u.dim();
    const std::vector<double> col = utility_times(u, q);
    GridSearchResult best;
    best.min_loss = std::numeric_limits<double>::infinity();
    std::vector<double> p(m, 0.0);
    std::vector<std::size_t> counts(m, 0);
    const auto visit = [&](const auto& self, std::size_t slot, std::size_t remaining) -> void {
        if (slot + 1 == m) {
            counts[slot] = remaining;
            for (std::size_t j = 0; j < m; ++j) {
                p[j] = static_cast<double>(counts[j]) / static_cast<double>(steps);
            }
            const double loss = oracle_expected_weighted_loss(u, p, col, base);
            if (loss < best.min_loss) {
                best.min_loss = loss;
                best.argmin = p;
            }
            return;
        }
        for (std::size_t c = 0; c <= remaining; ++c) {
            counts[slot] = c;
            self(self, slot + 1, remaining - c);
        }
    };
    visit(visit, 0, steps);
    return best;
}

}  // namespace testutil
