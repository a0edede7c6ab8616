#ifndef FAIRENS_BASE_ENSEMBLE_HPP
#define FAIRENS_BASE_ENSEMBLE_HPP

#include "fairens/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace fairens {

enum class BaseMethod { Max, Average, Greedy };

inline std::string to_string(BaseMethod m)
{
    switch (m) {
    case BaseMethod::Max: return "max";
    case BaseMethod::Average: return "average";
    case BaseMethod::Greedy: return "greedy";
    }
    return "?";
}

inline BaseMethod parse_base_method(const std::string& s)
{
    if (s == "max" || s == "MAX") return BaseMethod::Max;
    if (s == "average" || s == "avg" || s == "AVERAGE") return BaseMethod::Average;
    if (s == "greedy" || s == "GREEDY") return BaseMethod::Greedy;
    throw InvalidConfig("unknown base method '" + s + "' (expected max, average or greedy)");
}

/// Maximum Combination: column max divided by k, then min-max renormalised.
/// The division does not survive renormalisation; it is kept for fidelity
/// with the published formula.
inline TargetVector max_combination(const ScoreMatrix& S)
{
    const Vector raw = S.scores.colwise().maxCoeff().transpose() / static_cast<double>(S.k());
    return {minmax_normalize(raw), "max"};
}

inline TargetVector average_combination(const ScoreMatrix& S)
{
    const Vector raw = S.scores.colwise().mean().transpose();
    return {minmax_normalize(raw), "average"};
}

/// Pearson correlation; defined as 0 when either side is constant.
inline double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b)
{
    const Vector da = a.array() - a.mean();
    const Vector db = b.array() - b.mean();
    const double na = da.norm();
    const double nb = db.norm();
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(da.dot(db) / (na * nb), -1.0, 1.0);
}

namespace detail {

inline double mean_pairwise_correlation(const Matrix& corr, const std::vector<Eigen::Index>& chosen)
{
    if (chosen.size() < 2) {
        return 1.0;  // a singleton ensemble has no diversity
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t a = 0; a < chosen.size(); ++a) {
        for (std::size_t b = a + 1; b < chosen.size(); ++b) {
            sum += corr(chosen[a], chosen[b]);
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace detail

/// Correlation changes below this are rounding noise (a duplicate row
/// correlates with itself at 1 - 1ulp, not exactly 1).
inline constexpr double kGreedyTolerance = 1e-12;

/// Indices of the rows picked by greedy diversity selection, in pick order.
///
/// Detectors are ranked by correlation with the all-row average; starting
/// from the best-ranked one, each remaining detector is added iff it strictly
/// lowers the mean pairwise correlation of the selection.
inline std::vector<Eigen::Index> greedy_selection(const ScoreMatrix& S)
{
    const auto k = S.k();
    const Vector provisional = S.scores.colwise().mean().transpose();
    Matrix corr(k, k);
    Vector to_target(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const Vector ri = S.scores.row(i).transpose();
        to_target[i] = pearson(ri, provisional);
        corr(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < k; ++j) {
            corr(i, j) = corr(j, i) = pearson(ri, S.scores.row(j).transpose());
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return to_target[a] > to_target[b]; });

    std::vector<Eigen::Index> chosen{order.front()};
    double current = detail::mean_pairwise_correlation(corr, chosen);
    for (std::size_t pos = 1; pos < order.size(); ++pos) {
        chosen.push_back(order[pos]);
        const double candidate = detail::mean_pairwise_correlation(corr, chosen);
        if (candidate < current - kGreedyTolerance) {
            current = candidate;
        } else {
            chosen.pop_back();
        }
    }
    return chosen;
}

inline TargetVector greedy_model_selection(const ScoreMatrix& S)
{
    if (S.k() < 2) {
        throw InvalidInput("greedy_model_selection: needs at least 2 detectors");
    }
    bool all_constant = true;
    for (Eigen::Index i = 0; i < S.k() && all_constant; ++i) {
        all_constant = S.scores.row(i).maxCoeff() == S.scores.row(i).minCoeff();
    }
    if (all_constant) {
        warn("greedy_model_selection: every detector row is constant; using average combination");
        auto t = average_combination(S);
        t.source = "greedy(fallback=average)";
        return t;
    }
    const auto chosen = greedy_selection(S);
    Vector raw = Vector::Zero(S.n());
    for (auto i : chosen) {
        raw += S.scores.row(i).transpose();
    }
    raw /= static_cast<double>(chosen.size());
    return {minmax_normalize(raw), "greedy"};
}

inline TargetVector make_target(const ScoreMatrix& S, BaseMethod method)
{
    switch (method) {
    case BaseMethod::Max: return max_combination(S);
    case BaseMethod::Average: return average_combination(S);
    case BaseMethod::Greedy: return greedy_model_selection(S);
    }
    throw InvalidConfig("unknown base method");
}

}  // namespace fairens

#endif  // FAIRENS_BASE_ENSEMBLE_HPP
