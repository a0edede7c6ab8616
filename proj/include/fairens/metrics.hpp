#ifndef FAIRENS_METRICS_HPP
#define FAIRENS_METRICS_HPP

#include "fairens/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace fairens {

/// Area under the ROC curve as the Mann-Whitney statistic with midranks:
/// P(score_out > score_in) + 0.5 P(tie).
inline double auc(const Eigen::Ref<const Vector>& y, const std::vector<int>& labels)
{
    const auto n = static_cast<std::size_t>(y.size());
    if (labels.size() != n) {
        throw InvalidInput("auc: score and label lengths differ");
    }
    if (!y.allFinite()) {
        throw InvalidInput("auc: non-finite scores");
    }
    std::size_t n_out = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) {
            throw InvalidInput("auc: labels must be 0 or 1");
        }
        n_out += static_cast<std::size_t>(l);
    }
    const std::size_t n_in = n - n_out;
    if (n_out == 0 || n_in == 0) {
        throw InvalidInput("auc: labels must contain both classes");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return y[static_cast<Eigen::Index>(a)] < y[static_cast<Eigen::Index>(b)];
    });
    // Twice the outlier rank sum keeps midranks integral.
    double twice_rank_sum = 0.0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo + 1;
        while (hi < n && y[static_cast<Eigen::Index>(order[hi])] == y[static_cast<Eigen::Index>(order[lo])]) {
            ++hi;
        }
        // Ranks lo+1 .. hi share the midrank (lo + 1 + hi) / 2.
        const auto twice_midrank = static_cast<double>(lo + 1 + hi);
        for (std::size_t m = lo; m < hi; ++m) {
            if (labels[order[m]] == 1) {
                twice_rank_sum += twice_midrank;
            }
        }
        lo = hi;
    }
    const auto no = static_cast<double>(n_out);
    const double u = 0.5 * (twice_rank_sum - no * (no + 1.0));
    return u / (no * static_cast<double>(n_in));
}

/// One point of an alpha sweep.
struct SweepRecord {
    double alpha = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double auc = 0.5;
    double dp = 0.0;
    double if_value = 0.0;
    EnsembleWeights w;
    bool ridge_triggered = false;
};

/// AUC changes smaller than this make the cost of fairness undefined.
inline constexpr double kCofAucEpsilon = 1e-12;

/// Fairness gained per unit of AUC lost relative to the alpha = 0 record.
/// Sign is kept: a negative value means AUC moved up while bias moved down
/// (or the reverse). Returns nullopt when AUC did not move.
inline std::optional<double> cost_of_fairness(const SweepRecord& rec0, const SweepRecord& rec)
{
    const double auc_drop = rec0.auc - rec.auc;
    if (std::abs(auc_drop) < kCofAucEpsilon) {
        return std::nullopt;
    }
    return (rec0.f2 - rec.f2) / auc_drop;
}

}  // namespace fairens

#endif  // FAIRENS_METRICS_HPP
