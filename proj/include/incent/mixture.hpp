#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "incent/errors.hpp"
#include "incent/simplex.hpp"

namespace incent {

namespace detail {

/// All sampling is built from mt19937_64 plus hand-rolled transforms, so a
/// seed pins the byte stream; the std distribution objects are
/// implementation-defined and would tie datasets to one standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the spare deviate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Index 1..m drawn by CDF scan over a simplex vector.
    int categorical(const SimplexVector& probs) {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t y = 1; y < probs.dim(); ++y) {
            acc += probs.prob(static_cast<int>(y));
            if (u < acc) return static_cast<int>(y);
        }
        return static_cast<int>(probs.dim());
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace detail

/// Gaussian mixture with isotropic per-class components: class y has density
/// N(mean_y, sigma_y² I) in d dimensions, with strictly positive priors.
struct MixtureSpec {
    SimplexVector priors;
    std::vector<std::vector<double>> means;  // m rows of d coordinates
    std::vector<double> sigmas;              // per-class isotropic std

    std::size_t classes() const noexcept { return priors.dim(); }
    std::size_t features() const { return means.empty() ? 0 : means.front().size(); }

    void validate() const {
        const std::size_t m = priors.dim();
        detail::require(means.size() == m, "MixtureSpec: need one mean per class");
        detail::require(sigmas.size() == m, "MixtureSpec: need one sigma per class");
        const std::size_t d = means.front().size();
        detail::require(d >= 1, "MixtureSpec: feature dimension must be at least 1");
        for (std::size_t y = 0; y < m; ++y) {
            detail::require(means[y].size() == d,
                            "MixtureSpec: mean of class " + std::to_string(y + 1) +
                                " has wrong dimension");
            if (!(sigmas[y] > 0.0)) {
                throw ValidationError("MixtureSpec: sigma of class " + std::to_string(y + 1) +
                                      " must be positive");
            }
            if (!(priors.prob(static_cast<int>(y) + 1) > 0.0)) {
                throw ValidationError("MixtureSpec: prior of class " + std::to_string(y + 1) +
                                      " must be strictly positive");
            }
        }
    }
};

/// Bayes posterior over classes at x: q_y ∝ prior_y · N(x; mean_y, sigma_y² I).
/// Computed in log space and max-shifted so far-out x stays finite.
inline SimplexVector true_posterior(const MixtureSpec& spec, const std::vector<double>& x) {
    spec.validate();
    if (x.size() != spec.features()) {
        throw DimensionError("true_posterior: x has dimension " + std::to_string(x.size()) +
                             ", spec expects " + std::to_string(spec.features()));
    }
    const std::size_t m = spec.classes();
    const std::size_t d = spec.features();
    std::vector<double> logit(m);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < m; ++y) {
        double sq = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double diff = x[t] - spec.means[y][t];
            sq += diff * diff;
        }
        const double s = spec.sigmas[y];
        logit[y] = std::log(spec.priors.prob(static_cast<int>(y) + 1)) -
                   static_cast<double>(d) * std::log(s) - sq / (2.0 * s * s);
        max_logit = std::max(max_logit, logit[y]);
    }
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
        logit[y] = std::exp(logit[y] - max_logit);
        sum += logit[y];
    }
    for (double& v : logit) v /= sum;
    return SimplexVector(std::move(logit));
}

enum class Split { train, validation, test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        default: return "test";
    }
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ValidationError("unknown split tag '" + s + "'");
}

struct DatasetRow {
    std::vector<double> x;
    int label = 1;
    SimplexVector q_true;
    Split split = Split::train;
};

struct SplitFractions {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;

    void validate() const {
        if (!(train > 0.0 && validation > 0.0 && test > 0.0)) {
            throw ValidationError("split fractions must all be positive");
        }
        if (std::abs(train + validation + test - 1.0) > 1e-9) {
            throw ValidationError("split fractions must sum to 1");
        }
    }
};

struct Dataset {
    std::size_t m = 0;
    std::size_t d = 0;
    SplitFractions fractions;
    std::uint64_t seed = 0;
    std::vector<DatasetRow> rows;

    std::size_t count(Split s) const {
        std::size_t c = 0;
        for (const DatasetRow& r : rows) c += (r.split == s) ? 1 : 0;
        return c;
    }

    /// Empirical label frequencies within one split.
    SimplexVector split_prior(Split s) const {
        std::vector<double> counts(m, 0.0);
        double total = 0.0;
        for (const DatasetRow& r : rows) {
            if (r.split != s) continue;
            counts[static_cast<std::size_t>(r.label - 1)] += 1.0;
            total += 1.0;
        }
        if (!(total > 0.0)) {
            throw ValidationError("Dataset: split '" + to_string(s) + "' is empty");
        }
        for (double& c : counts) c /= total;
        return simplex_normalize(std::move(counts));
    }
};

/// Draw n labeled points: class by prior, features from that class's
/// isotropic normal, exact posterior attached to every row. Split tags are
/// assigned by contiguous index blocks (rows are exchangeable).
inline Dataset generate_dataset(const MixtureSpec& spec, std::size_t n,
                                const SplitFractions& fractions, std::uint64_t seed) {
    spec.validate();
    fractions.validate();
    if (n < spec.classes()) {
        throw ValidationError("generate_dataset: need at least one sample per class (n >= m)");
    }
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions.train));
    const std::size_t n_val =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions.validation));

    detail::Rng rng(seed);
    Dataset data;
    data.m = spec.classes();
    data.d = spec.features();
    data.fractions = fractions;
    data.seed = seed;
    data.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        DatasetRow row{std::vector<double>(spec.features()), rng.categorical(spec.priors),
                       SimplexVector{0.5, 0.5}, Split::train};
        const std::size_t y = static_cast<std::size_t>(row.label - 1);
        for (std::size_t t = 0; t < spec.features(); ++t) {
            row.x[t] = spec.means[y][t] + spec.sigmas[y] * rng.normal();
        }
        row.q_true = true_posterior(spec, row.x);
        if (i < n_train) {
            row.split = Split::train;
        } else if (i < n_train + n_val) {
            row.split = Split::validation;
        } else {
            row.split = Split::test;
        }
        data.rows.push_back(std::move(row));
    }
    return data;
}

}  // namespace incent
