#ifndef FAIRENS_DETECTORS_HPP
#define FAIRENS_DETECTORS_HPP

#include "fairens/core.hpp"
#include "fairens/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace fairens {

enum class DetectorKind { Lof, Knn, IForest };

inline std::string to_string(DetectorKind kind)
{
    switch (kind) {
    case DetectorKind::Lof: return "LOF";
    case DetectorKind::Knn: return "KNN";
    case DetectorKind::IForest: return "IFOREST";
    }
    return "?";
}

/// One base detector. `parameter` is the neighbour count (LOF, KNN) or the
/// number of trees (IFOREST); `seed` is only read by IFOREST.
struct DetectorConfig {
    DetectorKind kind = DetectorKind::Knn;
    int parameter = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] std::string describe() const
    {
        if (kind == DetectorKind::IForest) {
            return "IFOREST(trees=" + std::to_string(parameter) + ",seed=" + std::to_string(seed) + ")";
        }
        return to_string(kind) + "(k=" + std::to_string(parameter) + ")";
    }

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// ---------------------------------------------------------------------------
// Neighbour search

namespace detail {

struct Neighbor {
    double dist;
    std::size_t index;
};

inline double euclidean(const Matrix& X, Eigen::Index a, Eigen::Index b)
{
    return (X.row(a) - X.row(b)).norm();
}

/// For every point, all other points within its k-th nearest distance (ties
/// at the boundary included), sorted by (distance, index). O(n^2) scan.
inline std::vector<std::vector<Neighbor>> neighbor_table(const Matrix& X, std::size_t k)
{
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<std::vector<Neighbor>> table(n);
    std::vector<Neighbor> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        all.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                all.push_back({euclidean(X, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), j});
            }
        }
        const auto by_dist = [](const Neighbor& a, const Neighbor& b) {
            return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
        };
        std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k - 1), all.end(), by_dist);
        const double kdist = all[k - 1].dist;
        auto& row = table[i];
        for (const auto& nb : all) {
            if (nb.dist <= kdist) {
                row.push_back(nb);
            }
        }
        std::sort(row.begin(), row.end(), by_dist);
    }
    return table;
}

inline void check_neighbor_count(const Matrix& X, int k, const char* what)
{
    if (k < 1 || static_cast<Eigen::Index>(k) >= X.rows()) {
        throw InvalidConfig(std::string(what) + ": neighbour count " + std::to_string(k) +
                            " must satisfy 1 <= k < n = " + std::to_string(X.rows()));
    }
}

inline Vector knn_from_table(const std::vector<std::vector<Neighbor>>& table, int k)
{
    Vector out(static_cast<Eigen::Index>(table.size()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = table[i][static_cast<std::size_t>(k - 1)].dist;
    }
    return out;
}

// Guards lrd against zero reachability (duplicate points), as in scikit-learn.
inline constexpr double kLrdEpsilon = 1e-10;

inline Vector lof_from_table(const std::vector<std::vector<Neighbor>>& table, int k)
{
    const auto n = table.size();
    const auto kk = static_cast<std::size_t>(k);
    std::vector<double> kdist(n);
    std::vector<std::size_t> hood(n);  // neighbourhood size, ties included
    for (std::size_t i = 0; i < n; ++i) {
        kdist[i] = table[i][kk - 1].dist;
        std::size_t m = kk;
        while (m < table[i].size() && table[i][m].dist <= kdist[i]) {
            ++m;
        }
        hood[i] = m;
    }
    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t m = 0; m < hood[i]; ++m) {
            const auto& nb = table[i][m];
            sum += std::max(kdist[nb.index], nb.dist);
        }
        lrd[i] = 1.0 / (sum / static_cast<double>(hood[i]) + kLrdEpsilon);
    }
    Vector out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t m = 0; m < hood[i]; ++m) {
            sum += lrd[table[i][m].index];
        }
        out[static_cast<Eigen::Index>(i)] = sum / static_cast<double>(hood[i]) / lrd[i];
    }
    return out;
}

}  // namespace detail

/// Distance to the k-th nearest neighbour (self excluded).
inline Vector knn_scores(const Matrix& X, int k)
{
    detail::check_neighbor_count(X, k, "KNN");
    return detail::knn_from_table(detail::neighbor_table(X, static_cast<std::size_t>(k)), k);
}

/// Local Outlier Factor over Euclidean distance. k-distance neighbourhoods
/// include every point tied at the k-th distance.
inline Vector lof_scores(const Matrix& X, int n_neighbors)
{
    detail::check_neighbor_count(X, n_neighbors, "LOF");
    return detail::lof_from_table(detail::neighbor_table(X, static_cast<std::size_t>(n_neighbors)), n_neighbors);
}

// ---------------------------------------------------------------------------
// Isolation Forest

namespace iforest {

inline constexpr std::size_t kMaxSubsample = 256;

inline double harmonic(std::size_t i)
{
    double h = 0.0;
    for (std::size_t j = i; j >= 1; --j) {
        h += 1.0 / static_cast<double>(j);
    }
    return h;
}

/// Average unsuccessful-search path length in a BST of m points; c(1) = 0.
inline double average_path_length(std::size_t m)
{
    if (m <= 1) {
        return 0.0;
    }
    const auto md = static_cast<double>(m);
    return 2.0 * harmonic(m - 1) - 2.0 * (md - 1.0) / md;
}

struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t size = 0;
};

class Tree {
public:
    Tree(const Matrix& X, std::vector<std::size_t> sample, int height_limit, Rng& rng)
    {
        nodes_.reserve(2 * sample.size());
        build(X, std::span<std::size_t>(sample), 0, height_limit, rng);
    }

    [[nodiscard]] double path_length(const Matrix& X, Eigen::Index row) const
    {
        std::size_t at = 0;
        double depth = 0.0;
        while (nodes_[at].feature >= 0) {
            const auto& nd = nodes_[at];
            at = X(row, nd.feature) < nd.threshold ? nd.left : nd.right;
            depth += 1.0;
        }
        return depth + average_path_length(nodes_[at].size);
    }

private:
    std::size_t build(const Matrix& X, std::span<std::size_t> idx, int depth, int limit, Rng& rng)
    {
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{-1, 0.0, 0, 0, idx.size()});
        if (depth >= limit || idx.size() <= 1) {
            return id;
        }
        // Only features that vary inside this node can split it.
        std::vector<int> candidates;
        std::vector<std::pair<double, double>> ranges;
        for (Eigen::Index f = 0; f < X.cols(); ++f) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (auto i : idx) {
                lo = std::min(lo, X(static_cast<Eigen::Index>(i), f));
                hi = std::max(hi, X(static_cast<Eigen::Index>(i), f));
            }
            if (hi > lo) {
                candidates.push_back(static_cast<int>(f));
                ranges.emplace_back(lo, hi);
            }
        }
        if (candidates.empty()) {
            return id;
        }
        const auto pick = rng.uniform_index(candidates.size());
        const int feature = candidates[pick];
        const auto [lo, hi] = ranges[pick];
        double threshold = lo + rng.uniform01() * (hi - lo);
        if (threshold <= lo) {
            threshold = std::nextafter(lo, hi);
        }
        const auto mid = std::partition(idx.begin(), idx.end(), [&](std::size_t i) {
            return X(static_cast<Eigen::Index>(i), feature) < threshold;
        });
        const auto split = static_cast<std::size_t>(mid - idx.begin());
        const auto left = build(X, idx.first(split), depth + 1, limit, rng);
        const auto right = build(X, idx.subspan(split), depth + 1, limit, rng);
        nodes_[id].feature = feature;
        nodes_[id].threshold = threshold;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    std::vector<Node> nodes_;
};

}  // namespace iforest

/// Isolation Forest anomaly score s(x) = 2^(-E[h(x)] / c(psi)), psi = min(256, n).
/// Deterministic given `seed`.
inline Vector iforest_scores(const Matrix& X, int n_trees, std::uint64_t seed)
{
    if (n_trees < 1) {
        throw InvalidConfig("IFOREST: tree count must be >= 1");
    }
    const auto n = static_cast<std::size_t>(X.rows());
    if (n == 0) {
        throw InvalidInput("IFOREST: empty data");
    }
    const std::size_t psi = std::min(iforest::kMaxSubsample, n);
    const int height_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
    // c(1) = 0 would divide by zero; a single-point forest scores 2^0 = 1.
    const double norm = psi <= 1 ? 1.0 : iforest::average_path_length(psi);

    Vector total = Vector::Zero(static_cast<Eigen::Index>(n));
    std::vector<std::size_t> pool(n);
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < psi; ++i) {
            const auto j = i + rng.uniform_index(n - i);
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::size_t> sample(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(psi));
        const iforest::Tree tree(X, std::move(sample), height_limit, rng);
        for (std::size_t i = 0; i < n; ++i) {
            total[static_cast<Eigen::Index>(i)] += tree.path_length(X, static_cast<Eigen::Index>(i));
        }
    }
    Vector out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double mean_path = total[static_cast<Eigen::Index>(i)] / n_trees;
        out[static_cast<Eigen::Index>(i)] = std::exp2(-mean_path / norm);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset-level entry points

struct DetectorOptions {
    bool standardize = true;  // z-score feature columns before detection
};

inline Matrix detector_features(const Dataset& d, const DetectorOptions& opt = {})
{
    return opt.standardize ? standardize_columns(d.features) : d.features;
}

inline Vector lof_scores(const Dataset& d, int n_neighbors, const DetectorOptions& opt = {})
{
    return lof_scores(detector_features(d, opt), n_neighbors);
}

inline Vector knn_scores(const Dataset& d, int k, const DetectorOptions& opt = {})
{
    return knn_scores(detector_features(d, opt), k);
}

inline Vector iforest_scores(const Dataset& d, int n_trees, std::uint64_t seed, const DetectorOptions& opt = {})
{
    return iforest_scores(detector_features(d, opt), n_trees, seed);
}

inline const std::vector<int>& lof_grid()
{
    static const std::vector<int> grid{5, 10, 15, 20, 25, 30};
    return grid;
}

inline const std::vector<int>& knn_grid()
{
    static const std::vector<int> grid{2, 4, 6, 8, 10};
    return grid;
}

inline const std::vector<int>& iforest_grid()
{
    static const std::vector<int> grid{25, 50, 75, 100, 125, 150, 175};
    return grid;
}

/// The 18-detector zoo: 6 LOF, 5 KNN, 7 IFOREST. Each forest gets its own
/// seed derived from `seed` and its tree count.
inline std::vector<DetectorConfig> default_detector_grid(std::uint64_t seed)
{
    std::vector<DetectorConfig> out;
    for (int k : lof_grid()) {
        out.push_back({DetectorKind::Lof, k, 0});
    }
    for (int k : knn_grid()) {
        out.push_back({DetectorKind::Knn, k, 0});
    }
    for (int trees : iforest_grid()) {
        out.push_back({DetectorKind::IForest, trees, mix_seed(seed, static_cast<std::uint64_t>(trees))});
    }
    return out;
}

/// One min-max normalised row per config, in the order given.
inline ScoreMatrix build_score_matrix(const Dataset& d, const std::vector<DetectorConfig>& configs,
                                      const DetectorOptions& opt = {})
{
    if (configs.empty()) {
        throw InvalidConfig("build_score_matrix: empty detector list");
    }
    const Matrix X = detector_features(d, opt);
    const auto n = X.rows();

    // Shared neighbour table for all distance-based configs.
    int max_k = 0;
    for (const auto& c : configs) {
        if (c.kind != DetectorKind::IForest) {
            try {
                detail::check_neighbor_count(X, c.parameter, to_string(c.kind).c_str());
            } catch (const InvalidConfig& e) {
                throw InvalidConfig("detector " + c.describe() + ": " + e.what());
            }
            max_k = std::max(max_k, c.parameter);
        }
    }
    std::vector<std::vector<detail::Neighbor>> table;
    if (max_k > 0) {
        table = detail::neighbor_table(X, static_cast<std::size_t>(max_k));
    }

    ScoreMatrix S;
    S.scores.resize(static_cast<Eigen::Index>(configs.size()), n);
    for (std::size_t r = 0; r < configs.size(); ++r) {
        const auto& c = configs[r];
        try {
            Vector raw;
            switch (c.kind) {
            case DetectorKind::Lof: raw = detail::lof_from_table(table, c.parameter); break;
            case DetectorKind::Knn: raw = detail::knn_from_table(table, c.parameter); break;
            case DetectorKind::IForest: raw = iforest_scores(X, c.parameter, c.seed); break;
            }
            S.scores.row(static_cast<Eigen::Index>(r)) = minmax_normalize(raw).transpose();
        } catch (const InvalidConfig& e) {
            throw InvalidConfig("detector " + c.describe() + ": " + e.what());
        } catch (const InvalidInput& e) {
            throw InvalidInput("detector " + c.describe() + ": " + e.what());
        }
        S.detector_ids.push_back(c.describe());
    }
    return S;
}

}  // namespace fairens

#endif  // FAIRENS_DETECTORS_HPP
