#ifndef FAIRENS_SOLVER_HPP
#define FAIRENS_SOLVER_HPP

#include "fairens/core.hpp"
#include "fairens/fairness.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fairens {

enum class FairnessKind { Group, Individual };

inline std::string to_string(FairnessKind k)
{
    return k == FairnessKind::Group ? "group" : "individual";
}

inline FairnessKind parse_fairness_kind(const std::string& s)
{
    if (s == "group" || s == "GROUP" || s == "dp") return FairnessKind::Group;
    if (s == "individual" || s == "INDIVIDUAL" || s == "if") return FairnessKind::Individual;
    throw InvalidConfig("unknown fairness kind '" + s + "' (expected group or individual)");
}

/// `ridge` is the fallback regulariser applied only when the unregularised
/// system turns out singular.
struct SolveConfig {
    double alpha = 0.0;
    FairnessKind fairness_kind = FairnessKind::Group;
    bool weighted_f1 = true;
    double ridge = kDefaultRidge;
};

inline void validate(const SolveConfig& cfg)
{
    if (!std::isfinite(cfg.alpha) || cfg.alpha < 0.0) {
        throw InvalidConfig("alpha must be finite and >= 0");
    }
    if (!std::isfinite(cfg.ridge) || cfg.ridge < 0.0) {
        throw InvalidConfig("ridge must be finite and >= 0");
    }
}

// ---------------------------------------------------------------------------
// Quadratic pieces of the objective
//
// Every objective here has the form
//     (SW - t)' diag(w) (SW - t) + alpha * W' P W
// so its minimiser solves (S diag(w) S' + alpha P) W = S diag(w) t.

/// S diag(w) S' and S diag(w) t, with w = beta (weighted) or 1 (unweighted).
struct FitTerms {
    Matrix gram;
    Vector rhs;
};

inline void check_shapes(const ScoreMatrix& S, const TargetVector& t, const ImportanceWeights& beta)
{
    if (S.k() < 1 || t.size() != S.n() || beta.beta.size() != S.n()) {
        throw InvalidInput("solver: score matrix, target and importance weights disagree in length");
    }
}

inline FitTerms fit_terms(const ScoreMatrix& S, const TargetVector& t, const ImportanceWeights& beta,
                          bool weighted)
{
    check_shapes(S, t, beta);
    if (weighted) {
        const Matrix scaled = S.scores * beta.beta.asDiagonal();
        return {scaled * S.scores.transpose(), scaled * t.values};
    }
    return {S.scores * S.scores.transpose(), S.scores * t.values};
}

/// (1/N) sum over group pairs of d_pq d_pq'. W' G W equals DP(W'S).
inline Matrix group_penalty(const ScoreMatrix& S, const GroupPartition& part)
{
    Matrix P = Matrix::Zero(S.k(), S.k());
    for (const auto& diff : group_mean_diffs(S, part)) {
        P.noalias() += diff.d_pq * diff.d_pq.transpose();
    }
    return P / static_cast<double>(part.pair_count());
}

namespace detail {

inline Matrix gather_columns(const ScoreMatrix& S, const std::vector<std::size_t>& idx)
{
    Matrix out(S.k(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
        out.col(static_cast<Eigen::Index>(c)) = S.scores.col(static_cast<Eigen::Index>(idx[c]));
    }
    return out;
}

}  // namespace detail

/// sum_{i in p, j in q} d_ij (S_i - S_j)(S_i - S_j)', expanded so the cost is
/// two k x |p| x |q| products instead of |p||q| outer products.
inline Matrix pair_penalty_block(const ScoreMatrix& S, const GroupPartition& part, const PairWeightBlock& blk)
{
    const auto& mp = part.groups[blk.group_pair.first].members;
    const auto& mq = part.groups[blk.group_pair.second].members;
    const Matrix Sp = detail::gather_columns(S, mp);
    const Matrix Sq = detail::gather_columns(S, mq);
    const Vector row_mass = blk.weights.rowwise().sum();
    const Vector col_mass = blk.weights.colwise().sum().transpose();
    const Matrix cross = Sp * blk.weights * Sq.transpose();
    Matrix P = Sp * row_mass.asDiagonal() * Sp.transpose() + Sq * col_mass.asDiagonal() * Sq.transpose() - cross -
               cross.transpose();
    return 0.5 * (P + P.transpose());
}

/// (1/N) sum over group pairs of P_pq / (|p||q|). W' L W equals IF(W'S).
template <typename BlockFn>
Matrix individual_penalty_from(const ScoreMatrix& S, const GroupPartition& part, BlockFn&& block_for_pair)
{
    Matrix L = Matrix::Zero(S.k(), S.k());
    for (std::size_t k = 0; k < part.pair_count(); ++k) {
        const PairWeightBlock blk = block_for_pair(k);
        const double size = static_cast<double>(part.groups[blk.group_pair.first].members.size()) *
                            static_cast<double>(part.groups[blk.group_pair.second].members.size());
        L += pair_penalty_block(S, part, blk) / size;
    }
    return L / static_cast<double>(part.pair_count());
}

inline Matrix individual_penalty(const ScoreMatrix& S, const PairKernel& kernel)
{
    return individual_penalty_from(S, kernel.partition(), [&](std::size_t k) { return kernel.block(k); });
}

inline Matrix individual_penalty(const ScoreMatrix& S, const GroupPartition& part,
                                 const std::vector<PairWeightBlock>& blocks)
{
    return individual_penalty_from(S, part, [&](std::size_t k) -> const PairWeightBlock& {
        const auto& pq = part.pairs[k];
        for (const auto& b : blocks) {
            if (b.group_pair == pq) {
                return b;
            }
        }
        throw Error("individual_penalty: missing weight block for a group pair");
    });
}

// ---------------------------------------------------------------------------
// Solves

struct Solution {
    EnsembleWeights weights;
    bool ridge_triggered = false;
};

/// Minimiser of fit + alpha * W' penalty W.
inline Solution solve_penalized(const FitTerms& fit, const Matrix& penalty, double alpha, double fallback_ridge)
{
    if (!std::isfinite(alpha) || alpha < 0.0) {
        throw InvalidConfig("alpha must be finite and >= 0");
    }
    const Matrix A = alpha == 0.0 ? fit.gram : Matrix(fit.gram + alpha * penalty);
    auto sol = solve_symmetric(A, fit.rhs, 0.0, fallback_ridge);
    return {EnsembleWeights{std::move(sol.x)}, sol.ridge_fallback};
}

inline Solution solve_group_detailed(const ScoreMatrix& S, const TargetVector& t, const ImportanceWeights& beta,
                                     const GroupPartition& part, const SolveConfig& cfg)
{
    validate(cfg);
    if (cfg.fairness_kind != FairnessKind::Group) {
        throw InvalidConfig("solve_group called with an individual-fairness config");
    }
    return solve_penalized(fit_terms(S, t, beta, cfg.weighted_f1), group_penalty(S, part), cfg.alpha, cfg.ridge);
}

inline EnsembleWeights solve_group(const ScoreMatrix& S, const TargetVector& t, const ImportanceWeights& beta,
                                   const GroupPartition& part, const SolveConfig& cfg)
{
    return solve_group_detailed(S, t, beta, part, cfg).weights;
}

inline Solution solve_individual_detailed(const ScoreMatrix& S, const TargetVector& t,
                                          const ImportanceWeights& beta, const GroupPartition& part,
                                          const std::vector<PairWeightBlock>& blocks, const SolveConfig& cfg)
{
    validate(cfg);
    if (cfg.fairness_kind != FairnessKind::Individual) {
        throw InvalidConfig("solve_individual called with a group-fairness config");
    }
    return solve_penalized(fit_terms(S, t, beta, cfg.weighted_f1), individual_penalty(S, part, blocks), cfg.alpha,
                           cfg.ridge);
}

inline EnsembleWeights solve_individual(const ScoreMatrix& S, const TargetVector& t, const ImportanceWeights& beta,
                                        const GroupPartition& part, const std::vector<PairWeightBlock>& blocks,
                                        const SolveConfig& cfg)
{
    return solve_individual_detailed(S, t, beta, part, blocks, cfg).weights;
}

/// y = W'S.
inline Vector combine(const EnsembleWeights& W, const ScoreMatrix& S)
{
    if (W.size() != S.k()) {
        throw InvalidInput("combine: weight length " + std::to_string(W.size()) + " does not match " +
                           std::to_string(S.k()) + " detectors");
    }
    return S.scores.transpose() * W.w;
}

struct ObjectiveTerms {
    double f1 = 0.0;
    double f2 = 0.0;
};

/// f1 = sum_i beta_i (y_i - t_i)^2 (beta = 1 when unweighted); f2 = DP or IF of y.
/// `blocks` is only read for individual fairness.
inline ObjectiveTerms objective_terms(const EnsembleWeights& W, const ScoreMatrix& S, const TargetVector& t,
                                      const ImportanceWeights& beta, const GroupPartition& part,
                                      const std::vector<PairWeightBlock>& blocks, const SolveConfig& cfg)
{
    check_shapes(S, t, beta);
    const Vector y = combine(W, S);
    CompensatedSum f1;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double r = y[i] - t.values[i];
        f1.add((cfg.weighted_f1 ? beta.beta[i] : 1.0) * r * r);
    }
    const double f2 = cfg.fairness_kind == FairnessKind::Group ? demographic_parity(y, part)
                                                               : individual_fairness(y, part, blocks);
    return {f1.value(), f2};
}

}  // namespace fairens

#endif  // FAIRENS_SOLVER_HPP
