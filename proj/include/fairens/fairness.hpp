#ifndef FAIRENS_FAIRNESS_HPP
#define FAIRENS_FAIRNESS_HPP

#include "fairens/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace fairens {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

// ---------------------------------------------------------------------------
// Importance weights

struct ImportanceWeights {
    Vector beta;
};

/// beta_i = exp(rank(i)/n), rank 1 = smallest target score. Ties keep index order.
inline ImportanceWeights importance_weights(const TargetVector& t)
{
    const auto n = t.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return t.values[a] < t.values[b]; });
    ImportanceWeights w{Vector(n)};
    for (Eigen::Index r = 0; r < n; ++r) {
        w.beta[order[static_cast<std::size_t>(r)]] = std::exp(static_cast<double>(r + 1) / static_cast<double>(n));
    }
    return w;
}

// ---------------------------------------------------------------------------
// Group fairness

inline Vector group_means(const Eigen::Ref<const Vector>& y, const GroupPartition& part)
{
    Vector means(static_cast<Eigen::Index>(part.groups.size()));
    for (std::size_t g = 0; g < part.groups.size(); ++g) {
        CompensatedSum s;
        for (auto i : part.groups[g].members) {
            s.add(y[static_cast<Eigen::Index>(i)]);
        }
        means[static_cast<Eigen::Index>(g)] = s.value() / static_cast<double>(part.groups[g].members.size());
    }
    return means;
}

/// Mean squared gap between group score means over the N unordered group pairs.
inline double demographic_parity(const Eigen::Ref<const Vector>& y, const GroupPartition& part)
{
    if (static_cast<std::size_t>(y.size()) != part.n) {
        throw InvalidInput("demographic_parity: score length does not match partition");
    }
    if (!y.allFinite()) {
        throw InvalidInput("demographic_parity: non-finite scores");
    }
    const Vector means = group_means(y, part);
    CompensatedSum s;
    for (const auto& [p, q] : part.pairs) {
        const double gap = means[static_cast<Eigen::Index>(p)] - means[static_cast<Eigen::Index>(q)];
        s.add(gap * gap);
    }
    return s.value() / static_cast<double>(part.pair_count());
}

struct GroupMeanDiff {
    std::pair<std::size_t, std::size_t> group_pair;
    Vector d_pq;  // k-vector
};

/// Per group pair, mean of the score columns in p minus mean in q.
inline std::vector<GroupMeanDiff> group_mean_diffs(const ScoreMatrix& S, const GroupPartition& part)
{
    std::vector<Vector> col_means;
    col_means.reserve(part.groups.size());
    for (const auto& g : part.groups) {
        Vector m = Vector::Zero(S.k());
        for (auto i : g.members) {
            m += S.scores.col(static_cast<Eigen::Index>(i));
        }
        col_means.push_back(m / static_cast<double>(g.members.size()));
    }
    std::vector<GroupMeanDiff> out;
    out.reserve(part.pair_count());
    for (const auto& pq : part.pairs) {
        out.push_back({pq, col_means[pq.first] - col_means[pq.second]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Individual fairness

/// d(X_i, X_j) for every i in group p, j in group q.
struct PairWeightBlock {
    std::pair<std::size_t, std::size_t> group_pair;
    Matrix weights;  // |p| x |q|
};

/// Rows S_{.,i} - S_{.,j} for i in p, j in q, row index = a * |q| + b.
struct PairDifferenceBlock {
    std::pair<std::size_t, std::size_t> group_pair;
    Matrix diffs;  // (|p||q|) x k
};

inline PairDifferenceBlock pair_difference_block(const ScoreMatrix& S, const GroupPartition& part,
                                                 std::size_t pair_index)
{
    const auto [p, q] = part.pairs.at(pair_index);
    const auto& mp = part.groups[p].members;
    const auto& mq = part.groups[q].members;
    PairDifferenceBlock out{{p, q}, Matrix(static_cast<Eigen::Index>(mp.size() * mq.size()), S.k())};
    Eigen::Index row = 0;
    for (auto i : mp) {
        for (auto j : mq) {
            out.diffs.row(row++) =
                (S.scores.col(static_cast<Eigen::Index>(i)) - S.scores.col(static_cast<Eigen::Index>(j))).transpose();
        }
    }
    return out;
}

/// Similarity kernel d = exp(-normalised Euclidean distance) over cross-group
/// pairs. The min-max normalisation spans all cross-group pairs of all group
/// pairs at once; blocks are produced on demand so large inputs never hold
/// the full n x n kernel.
class PairKernel {
public:
    PairKernel(Matrix features, GroupPartition part)
        : features_(std::move(features)), part_(std::move(part))
    {
        if (static_cast<std::size_t>(features_.rows()) != part_.n) {
            throw InvalidInput("pair kernel: feature rows do not match partition");
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& [p, q] : part_.pairs) {
            for (auto i : part_.groups[p].members) {
                for (auto j : part_.groups[q].members) {
                    const double dist = distance(i, j);
                    lo = std::min(lo, dist);
                    hi = std::max(hi, dist);
                }
            }
        }
        min_distance_ = lo;
        max_distance_ = hi;
        if (!(hi > lo)) {
            warn("pair kernel: all cross-group distances are identical; every weight is 1");
        }
    }

    [[nodiscard]] const GroupPartition& partition() const { return part_; }
    [[nodiscard]] double min_distance() const { return min_distance_; }
    [[nodiscard]] double max_distance() const { return max_distance_; }
    [[nodiscard]] bool degenerate() const { return !(max_distance_ > min_distance_); }

    [[nodiscard]] double weight_for_distance(double dist) const
    {
        if (degenerate()) {
            return 1.0;
        }
        const double scaled = std::clamp((dist - min_distance_) / (max_distance_ - min_distance_), 0.0, 1.0);
        return std::exp(-scaled);
    }

    [[nodiscard]] PairWeightBlock block(std::size_t pair_index) const
    {
        const auto [p, q] = part_.pairs.at(pair_index);
        const auto& mp = part_.groups[p].members;
        const auto& mq = part_.groups[q].members;
        PairWeightBlock out{{p, q}, Matrix(static_cast<Eigen::Index>(mp.size()), static_cast<Eigen::Index>(mq.size()))};
        for (std::size_t a = 0; a < mp.size(); ++a) {
            for (std::size_t b = 0; b < mq.size(); ++b) {
                out.weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    weight_for_distance(distance(mp[a], mq[b]));
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<PairWeightBlock> blocks() const
    {
        std::vector<PairWeightBlock> out;
        out.reserve(part_.pair_count());
        for (std::size_t k = 0; k < part_.pair_count(); ++k) {
            out.push_back(block(k));
        }
        return out;
    }

private:
    [[nodiscard]] double distance(std::size_t i, std::size_t j) const
    {
        return (features_.row(static_cast<Eigen::Index>(i)) - features_.row(static_cast<Eigen::Index>(j))).norm();
    }

    Matrix features_;
    GroupPartition part_;
    double min_distance_ = 0.0;
    double max_distance_ = 0.0;
};

/// Kernel over the dataset's (optionally standardised) feature columns.
inline PairKernel make_pair_kernel(const Dataset& d, const GroupPartition& part, bool standardize = true)
{
    return PairKernel(standardize ? standardize_columns(d.features) : d.features, part);
}

inline std::vector<PairWeightBlock> pair_distance_weights(const Dataset& d, const GroupPartition& part,
                                                          bool standardize = true)
{
    return make_pair_kernel(d, part, standardize).blocks();
}

namespace detail {

inline double pair_block_term(const Eigen::Ref<const Vector>& y, const GroupPartition& part,
                              const PairWeightBlock& blk)
{
    const auto& mp = part.groups[blk.group_pair.first].members;
    const auto& mq = part.groups[blk.group_pair.second].members;
    if (blk.weights.rows() != static_cast<Eigen::Index>(mp.size()) ||
        blk.weights.cols() != static_cast<Eigen::Index>(mq.size())) {
        throw Error("individual_fairness: block shape does not match its group pair");
    }
    CompensatedSum s;
    for (std::size_t a = 0; a < mp.size(); ++a) {
        const double yi = y[static_cast<Eigen::Index>(mp[a])];
        for (std::size_t b = 0; b < mq.size(); ++b) {
            const double diff = yi - y[static_cast<Eigen::Index>(mq[b])];
            s.add(blk.weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * diff * diff);
        }
    }
    return s.value() / (static_cast<double>(mp.size()) * static_cast<double>(mq.size()));
}

inline void check_scores(const Eigen::Ref<const Vector>& y, const GroupPartition& part)
{
    if (static_cast<std::size_t>(y.size()) != part.n) {
        throw InvalidInput("individual_fairness: score length does not match partition");
    }
    if (!y.allFinite()) {
        throw InvalidInput("individual_fairness: non-finite scores");
    }
}

}  // namespace detail

/// Kernel-weighted squared score gaps across groups, averaged per group pair
/// and then over the N group pairs.
inline double individual_fairness(const Eigen::Ref<const Vector>& y, const GroupPartition& part,
                                  const std::vector<PairWeightBlock>& blocks)
{
    detail::check_scores(y, part);
    CompensatedSum total;
    for (const auto& pq : part.pairs) {
        const auto it = std::find_if(blocks.begin(), blocks.end(),
                                     [&](const PairWeightBlock& b) { return b.group_pair == pq; });
        if (it == blocks.end()) {
            throw Error("individual_fairness: missing weight block for group pair (" +
                        std::to_string(pq.first) + "," + std::to_string(pq.second) + ")");
        }
        total.add(detail::pair_block_term(y, part, *it));
    }
    return total.value() / static_cast<double>(part.pair_count());
}

inline double individual_fairness(const Eigen::Ref<const Vector>& y, const PairKernel& kernel)
{
    const auto& part = kernel.partition();
    detail::check_scores(y, part);
    CompensatedSum total;
    for (std::size_t k = 0; k < part.pair_count(); ++k) {
        total.add(detail::pair_block_term(y, part, kernel.block(k)));
    }
    return total.value() / static_cast<double>(part.pair_count());
}

}  // namespace fairens

#endif  // FAIRENS_FAIRNESS_HPP
