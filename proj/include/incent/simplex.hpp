#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "incent/errors.hpp"

namespace incent {

/// Class indices are 1-based everywhere in the public interface.
/// Internal storage is 0-based; callers never see it.
constexpr double kSimplexSumTolerance = 1e-9;

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

inline void check_class_index(int y, std::size_t m, const char* where) {
    if (y < 1 || static_cast<std::size_t>(y) > m) {
        throw ValidationError(std::string(where) + ": class index " + std::to_string(y) +
                              " outside 1.." + std::to_string(m));
    }
}

}  // namespace detail

/// Named, ordered set of m classes.
class ClassSpace {
public:
    explicit ClassSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
        detail::require(labels_.size() >= 2, "ClassSpace: need at least 2 classes");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            for (std::size_t j = i + 1; j < labels_.size(); ++j) {
                detail::require(labels_[i] != labels_[j],
                                "ClassSpace: duplicate label '" + labels_[i] + "'");
            }
        }
    }

    /// Default labels "1".."m".
    static ClassSpace numbered(std::size_t m) {
        detail::require(m >= 2, "ClassSpace: need at least 2 classes");
        std::vector<std::string> labels;
        labels.reserve(m);
        for (std::size_t i = 1; i <= m; ++i) labels.push_back(std::to_string(i));
        return ClassSpace(std::move(labels));
    }

    std::size_t size() const noexcept { return labels_.size(); }

    const std::string& label(int y) const {
        detail::check_class_index(y, labels_.size(), "ClassSpace::label");
        return labels_[static_cast<std::size_t>(y - 1)];
    }

    const std::vector<std::string>& labels() const noexcept { return labels_; }

private:
    std::vector<std::string> labels_;
};

/// A probability distribution over m classes. Entries are nonnegative and sum
/// to one; construction renormalizes inputs whose sum drifts within tolerance
/// so downstream divisions do not accumulate error.
class SimplexVector {
public:
    explicit SimplexVector(std::vector<double> values) : values_(std::move(values)) {
        detail::require(values_.size() >= 2, "SimplexVector: need at least 2 entries");
        double sum = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] >= 0.0)) {
                throw ValidationError("SimplexVector: negative entry at index " +
                                      std::to_string(i + 1));
            }
            sum += values_[i];
        }
        if (std::abs(sum - 1.0) > kSimplexSumTolerance) {
            throw ValidationError("SimplexVector: entries sum to " + std::to_string(sum) +
                                  ", not 1");
        }
        for (double& v : values_) v /= sum;
    }

    SimplexVector(std::initializer_list<double> values)
        : SimplexVector(std::vector<double>(values)) {}

    std::size_t dim() const noexcept { return values_.size(); }

    /// Probability of class y (1-based).
    double prob(int y) const {
        detail::check_class_index(y, values_.size(), "SimplexVector::prob");
        return values_[static_cast<std::size_t>(y - 1)];
    }

    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const SimplexVector& other) const noexcept {
        return values_ == other.values_;
    }

private:
    std::vector<double> values_;
};

/// Rescale a nonnegative vector onto the simplex.
inline SimplexVector simplex_normalize(std::vector<double> v) {
    detail::require(v.size() >= 2, "simplex_normalize: need at least 2 entries");
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0)) {
            throw ValidationError("simplex_normalize: negative entry at index " +
                                  std::to_string(i + 1));
        }
        sum += v[i];
    }
    if (!(sum > 0.0)) {
        throw ValidationError("simplex_normalize: all entries are zero, nothing to scale");
    }
    for (double& x : v) x /= sum;
    return SimplexVector(std::move(v));
}

/// Nonnegative, nondegenerate m×m classification utility. Entry (y', y) is the
/// utility of deciding y' when the true class is y. Nondegeneracy means every
/// class admits some decision with strictly positive utility (no zero column).
///
/// Invertibility is a reported property, not a requirement: the optimal
/// prediction formula needs only nondegeneracy, while recalibration needs the
/// inverse. The factorization is a direct LU with partial pivoting; the
/// condition number is the exact 1-norm condition of the factored matrix.
class UtilityMatrix {
public:
    /// Validate a row-major m×m matrix.
    static UtilityMatrix validated(std::vector<double> row_major, std::size_t m) {
        detail::require(m >= 2, "UtilityMatrix: need at least 2 classes");
        detail::require(row_major.size() == m * m,
                        "UtilityMatrix: expected " + std::to_string(m * m) + " entries, got " +
                            std::to_string(row_major.size()));
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < m; ++c) {
                if (!(row_major[r * m + c] >= 0.0)) {
                    throw NonnegativityError("UtilityMatrix: negative entry at (" +
                                             std::to_string(r + 1) + "," + std::to_string(c + 1) +
                                             ")");
                }
            }
        }
        for (std::size_t c = 0; c < m; ++c) {
            bool positive = false;
            for (std::size_t r = 0; r < m; ++r) {
                if (row_major[r * m + c] > 0.0) {
                    positive = true;
                    break;
                }
            }
            if (!positive) {
                throw DegeneracyError("UtilityMatrix: class " + std::to_string(c + 1) +
                                      " has no decision with positive utility");
            }
        }
        return UtilityMatrix(std::move(row_major), m);
    }

    /// Diagonal utility for per-class weights w (all strictly positive).
    static UtilityMatrix from_class_weights(const std::vector<double>& w) {
        detail::require(w.size() >= 2, "class weights: need at least 2 classes");
        const std::size_t m = w.size();
        std::vector<double> entries(m * m, 0.0);
        for (std::size_t y = 0; y < m; ++y) {
            if (!(w[y] > 0.0)) {
                throw ValidationError("class weights: weight for class " + std::to_string(y + 1) +
                                      " must be positive");
            }
            entries[y * m + y] = w[y];
        }
        return UtilityMatrix(std::move(entries), m);
    }

    static UtilityMatrix identity(std::size_t m) {
        return from_class_weights(std::vector<double>(m, 1.0));
    }

    std::size_t dim() const noexcept { return m_; }

    /// Utility of deciding `decided` when the true class is `actual` (both 1-based).
    double entry(int decided, int actual) const {
        detail::check_class_index(decided, m_, "UtilityMatrix::entry");
        detail::check_class_index(actual, m_, "UtilityMatrix::entry");
        return entries_[static_cast<std::size_t>(decided - 1) * m_ +
                        static_cast<std::size_t>(actual - 1)];
    }

    std::span<const double> row(int decided) const {
        detail::check_class_index(decided, m_, "UtilityMatrix::row");
        return {entries_.data() + static_cast<std::size_t>(decided - 1) * m_, m_};
    }

    std::span<const double> entries_row_major() const noexcept { return entries_; }

    bool diagonal() const noexcept { return diagonal_; }
    bool is_identity() const noexcept { return identity_; }
    bool invertible() const noexcept { return invertible_; }

    /// 1-norm condition number; +inf when singular.
    double condition_estimate() const noexcept { return condition_; }

    /// Row-major inverse; only meaningful when invertible().
    const std::vector<double>& inverse_row_major() const {
        if (!invertible_) throw InvertibilityError("UtilityMatrix: matrix is singular");
        return inverse_;
    }

    /// Diagonal entries as a weight vector; only meaningful when diagonal().
    std::vector<double> diagonal_weights() const {
        detail::require(diagonal_, "UtilityMatrix: not diagonal");
        std::vector<double> w(m_);
        for (std::size_t y = 0; y < m_; ++y) w[y] = entries_[y * m_ + y];
        return w;
    }

    bool operator==(const UtilityMatrix& other) const noexcept {
        return m_ == other.m_ && entries_ == other.entries_;
    }

private:
    UtilityMatrix(std::vector<double> entries, std::size_t m)
        : entries_(std::move(entries)), m_(m) {
        diagonal_ = true;
        identity_ = true;
        for (std::size_t r = 0; r < m_ && (diagonal_ || identity_); ++r) {
            for (std::size_t c = 0; c < m_; ++c) {
                const double v = entries_[r * m_ + c];
                if (r != c && v != 0.0) diagonal_ = false;
                if (v != (r == c ? 1.0 : 0.0)) identity_ = false;
            }
        }
        if (!diagonal_) identity_ = false;
        factorize();
    }

    void factorize() {
        using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const Mat> a(entries_.data(), static_cast<Eigen::Index>(m_),
                                static_cast<Eigen::Index>(m_));
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        bool singular = false;
        for (Eigen::Index i = 0; i < lu.matrixLU().rows(); ++i) {
            const double pivot = lu.matrixLU()(i, i);
            if (pivot == 0.0 || !std::isfinite(pivot)) singular = true;
        }
        if (singular) {
            invertible_ = false;
            condition_ = std::numeric_limits<double>::infinity();
            return;
        }
        const Eigen::MatrixXd inv = lu.inverse();
        const double norm_a = a.colwise().template lpNorm<1>().maxCoeff();
        const double norm_inv = inv.colwise().template lpNorm<1>().maxCoeff();
        condition_ = norm_a * norm_inv;
        if (!std::isfinite(condition_)) {
            invertible_ = false;
            condition_ = std::numeric_limits<double>::infinity();
            return;
        }
        invertible_ = true;
        inverse_.resize(m_ * m_);
        for (std::size_t r = 0; r < m_; ++r) {
            for (std::size_t c = 0; c < m_; ++c) {
                inverse_[r * m_ + c] = inv(static_cast<Eigen::Index>(r),
                                           static_cast<Eigen::Index>(c));
            }
        }
    }

    std::vector<double> entries_;
    std::vector<double> inverse_;
    std::size_t m_ = 0;
    double condition_ = std::numeric_limits<double>::infinity();
    bool diagonal_ = false;
    bool identity_ = false;
    bool invertible_ = false;
};

/// Checked constructor for a raw matrix; same contract as UtilityMatrix::validated.
inline UtilityMatrix validate_utility(std::vector<double> row_major, std::size_t m) {
    return UtilityMatrix::validated(std::move(row_major), m);
}

inline UtilityMatrix class_weights_to_utility(const std::vector<double>& w) {
    return UtilityMatrix::from_class_weights(w);
}

/// Expected utility of deciding y under class distribution q: row y of U dotted with q.
inline double expected_utility(int y, const SimplexVector& q, const UtilityMatrix& u) {
    if (q.dim() != u.dim()) {
        throw DimensionError("expected_utility: dimension mismatch (q has " +
                             std::to_string(q.dim()) + " classes, utility has " +
                             std::to_string(u.dim()) + ")");
    }
    detail::check_class_index(y, u.dim(), "expected_utility");
    const auto row = u.row(y);
    const auto qv = q.values();
    double acc = 0.0;
    for (std::size_t t = 0; t < qv.size(); ++t) acc += row[t] * qv[t];
    return acc;
}

}  // namespace incent
