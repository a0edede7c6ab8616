#ifndef FAIRENS_CORE_HPP
#define FAIRENS_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fairens {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SizeMismatch : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Warnings
//
// Non-fatal conditions (ridge fallback, degenerate kernels, greedy fallback)
// are reported through a process-wide handler. Replacing the handler is not
// synchronised; do it before spawning workers.

using WarningHandler = std::function<void(std::string_view)>;

inline WarningHandler& warning_handler()
{
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

inline void warn(std::string_view msg)
{
    if (auto& h = warning_handler()) {
        h(msg);
    }
}

/// Installs a handler for the lifetime of the guard and restores the old one.
class ScopedWarningHandler {
public:
    explicit ScopedWarningHandler(WarningHandler handler)
        : previous_(std::exchange(warning_handler(), std::move(handler)))
    {
    }
    ~ScopedWarningHandler() { warning_handler() = std::move(previous_); }
    ScopedWarningHandler(const ScopedWarningHandler&) = delete;
    ScopedWarningHandler& operator=(const ScopedWarningHandler&) = delete;

private:
    WarningHandler previous_;
};

// ---------------------------------------------------------------------------
// Domain types

/// Tabular data: one row per instance. Group ids are contiguous 0..v-1.
struct Dataset {
    std::string name;
    Matrix features;  // n x m
    std::vector<int> groups;
    std::optional<std::vector<int>> labels;  // 1 = outlier
    std::vector<std::string> feature_names;

    [[nodiscard]] std::size_t size() const { return groups.size(); }
    [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
    [[nodiscard]] int group_count() const
    {
        return groups.empty() ? 0 : *std::max_element(groups.begin(), groups.end()) + 1;
    }

    friend bool operator==(const Dataset& a, const Dataset& b)
    {
        return a.name == b.name && a.features.rows() == b.features.rows() &&
               a.features.cols() == b.features.cols() && a.features == b.features &&
               a.groups == b.groups && a.labels == b.labels && a.feature_names == b.feature_names;
    }
};

/// Throws InvalidInput when the dataset breaks any structural invariant.
inline void validate(const Dataset& d)
{
    const auto n = d.groups.size();
    if (n < 2) {
        throw InvalidInput("dataset '" + d.name + "' needs at least 2 instances");
    }
    if (static_cast<std::size_t>(d.features.rows()) != n) {
        throw InvalidInput("dataset '" + d.name + "': feature rows do not match group count");
    }
    if (d.labels && d.labels->size() != n) {
        throw InvalidInput("dataset '" + d.name + "': label count does not match group count");
    }
    if (!d.feature_names.empty() && d.feature_names.size() != d.dims()) {
        throw InvalidInput("dataset '" + d.name + "': feature name count does not match columns");
    }
    if (!d.features.allFinite()) {
        throw InvalidInput("dataset '" + d.name + "': features contain NaN or Inf");
    }
    const int v = d.group_count();
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(v, 0)), 0);
    for (int g : d.groups) {
        if (g < 0) {
            throw InvalidInput("dataset '" + d.name + "': negative group id");
        }
        ++counts[static_cast<std::size_t>(g)];
    }
    for (std::size_t g = 0; g < counts.size(); ++g) {
        if (counts[g] == 0) {
            throw InvalidInput("dataset '" + d.name + "': group id " + std::to_string(g) +
                               " has no members (ids must be contiguous from 0)");
        }
    }
    if (v < 2) {
        throw InvalidInput("dataset '" + d.name + "': at least 2 distinct groups are required");
    }
    if (d.labels) {
        for (int l : *d.labels) {
            if (l != 0 && l != 1) {
                throw InvalidInput("dataset '" + d.name + "': labels must be 0 or 1");
            }
        }
    }
}

/// k x n matrix of base-detector scores, one row per detector.
struct ScoreMatrix {
    Matrix scores;
    std::vector<std::string> detector_ids;

    [[nodiscard]] Eigen::Index k() const { return scores.rows(); }
    [[nodiscard]] Eigen::Index n() const { return scores.cols(); }
};

struct TargetVector {
    Vector values;
    std::string source;

    [[nodiscard]] Eigen::Index size() const { return values.size(); }
};

struct EnsembleWeights {
    Vector w;

    [[nodiscard]] Eigen::Index size() const { return w.size(); }
};

struct Group {
    int id = 0;
    std::vector<std::size_t> members;  // ascending
};

/// Instances split by protected group, plus the unordered list of group pairs.
struct GroupPartition {
    std::vector<Group> groups;  // ascending id
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // indices into groups, first < second
    std::size_t n = 0;

    [[nodiscard]] std::size_t pair_count() const { return pairs.size(); }
};

// ---------------------------------------------------------------------------
// Operations

/// Min-max scaling to [0,1]. A constant vector maps to all zeros.
inline Vector minmax_normalize(const Eigen::Ref<const Vector>& v)
{
    if (v.size() == 0) {
        throw InvalidInput("minmax_normalize: empty vector");
    }
    if (!v.allFinite()) {
        throw InvalidInput("minmax_normalize: input contains NaN or Inf");
    }
    const double lo = v.minCoeff();
    const double hi = v.maxCoeff();
    if (hi == lo) {
        return Vector::Zero(v.size());
    }
    Vector out = (v.array() - lo) / (hi - lo);
    // Guard the endpoints against rounding in the division.
    Eigen::Index imin = 0;
    Eigen::Index imax = 0;
    v.minCoeff(&imin);
    v.maxCoeff(&imax);
    out = out.cwiseMax(0.0).cwiseMin(1.0);
    out[imin] = 0.0;
    out[imax] = 1.0;
    return out;
}

inline GroupPartition partition_groups(const std::vector<int>& groups)
{
    std::vector<int> ids(groups);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2) {
        throw InvalidInput("fairness undefined for one group");
    }

    GroupPartition part;
    part.n = groups.size();
    part.groups.reserve(ids.size());
    for (int id : ids) {
        part.groups.push_back(Group{id, {}});
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto it = std::lower_bound(ids.begin(), ids.end(), groups[i]);
        part.groups[static_cast<std::size_t>(it - ids.begin())].members.push_back(i);
    }
    for (std::size_t p = 0; p < ids.size(); ++p) {
        for (std::size_t q = p + 1; q < ids.size(); ++q) {
            part.pairs.emplace_back(p, q);
        }
    }
    return part;
}

inline constexpr double kDefaultRidge = 1e-8;

/// Reciprocal-condition threshold below which a factorisation counts as singular.
inline constexpr double kSingularRcond = 1e-13;

struct LinearSolution {
    Vector x;
    double ridge = 0.0;  // ridge actually applied
    bool ridge_fallback = false;
};

namespace detail {

inline std::optional<Vector> try_ldlt(const Matrix& A, const Vector& b, double ridge)
{
    Matrix M = A;
    M.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> ldlt(M);
    if (ldlt.info() != Eigen::Success || ldlt.isNegative()) {
        return std::nullopt;
    }
    // Zero pivots are skipped by Eigen's solve rather than reported, so
    // check the pivot ratio as well as the condition estimate.
    const Vector& pivots = ldlt.vectorD();
    const double largest = pivots.cwiseAbs().maxCoeff();
    if (!(pivots.minCoeff() > kSingularRcond * largest) || !(ldlt.rcond() >= kSingularRcond)) {
        return std::nullopt;
    }
    Vector x = ldlt.solve(b);
    if (!x.allFinite()) {
        return std::nullopt;
    }
    return x;
}

}  // namespace detail

/// Solves (A + ridge I) x = b for symmetric positive semidefinite A.
///
/// With ridge = 0 a singular system is retried once with `fallback_ridge`
/// and a warning; the returned struct records whether that happened.
inline LinearSolution solve_symmetric(const Matrix& A, const Vector& b, double ridge = 0.0,
                                      double fallback_ridge = kDefaultRidge)
{
    if (A.rows() != A.cols() || A.rows() != b.size()) {
        throw InvalidInput("solve_linear: dimension mismatch");
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw InvalidInput("solve_linear: ridge must be finite and >= 0");
    }
    if (!A.allFinite() || !b.allFinite()) {
        throw InvalidInput("solve_linear: non-finite input");
    }
    if (auto x = detail::try_ldlt(A, b, ridge)) {
        return {std::move(*x), ridge, false};
    }
    if (ridge == 0.0 && fallback_ridge > 0.0) {
        warn("solve_linear: singular system, retrying with ridge " + std::to_string(fallback_ridge));
        if (auto x = detail::try_ldlt(A, b, fallback_ridge)) {
            return {std::move(*x), fallback_ridge, true};
        }
    }
    throw SingularSystem("solve_linear: system is singular even with ridge " +
                         std::to_string(ridge == 0.0 ? fallback_ridge : ridge));
}

inline Vector solve_linear(const Matrix& A, const Vector& b, double ridge = 0.0)
{
    return solve_symmetric(A, b, ridge).x;
}

/// Column-wise z-scoring (population variance). Constant columns become zero.
inline Matrix standardize_columns(const Matrix& X)
{
    Matrix out(X.rows(), X.cols());
    const auto n = static_cast<double>(X.rows());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double mean = X.col(c).mean();
        const double var = (X.col(c).array() - mean).square().sum() / n;
        if (var > 0.0) {
            out.col(c) = (X.col(c).array() - mean) / std::sqrt(var);
        } else {
            out.col(c).setZero();
        }
    }
    return out;
}

}  // namespace fairens

#endif  // FAIRENS_CORE_HPP
