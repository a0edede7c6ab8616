#include "fairens/solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace fairens;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ScoreMatrix rows(const Matrix& M)
{
    ScoreMatrix S;
    S.scores = M;
    return S;
}

/// A random problem plus the same problem in the library's types.
struct Instance {
    oracle::Problem ref;
    ScoreMatrix S;
    TargetVector t;
    ImportanceWeights beta;
    GroupPartition part;
    std::vector<PairWeightBlock> blocks;
    SolveConfig cfg;
};

Instance random_instance(std::mt19937_64& rng, Eigen::Index k, std::size_t n, int v, double alpha, bool individual,
                         bool weighted = true)
{
    Instance in;
    in.S.scores = oracle::random_matrix(rng, k, static_cast<Eigen::Index>(n));
    in.t = {minmax_normalize(oracle::random_matrix(rng, static_cast<Eigen::Index>(n), 1).col(0)), "random"};
    in.beta = importance_weights(in.t);
    const auto groups = oracle::random_groups(rng, n, v);
    in.part = partition_groups(groups);
    const Matrix X = oracle::random_matrix(rng, static_cast<Eigen::Index>(n), 3, -1.0, 1.0);
    in.blocks = PairKernel(X, in.part).blocks();
    in.cfg.alpha = alpha;
    in.cfg.fairness_kind = individual ? FairnessKind::Individual : FairnessKind::Group;
    in.cfg.weighted_f1 = weighted;

    in.ref.S = in.S.scores;
    in.ref.t = in.t.values;
    in.ref.beta = weighted ? in.beta.beta : Vector::Ones(static_cast<Eigen::Index>(n));
    in.ref.groups = groups;
    in.ref.kernel = oracle::similarity_kernel(X, groups);
    in.ref.alpha = alpha;
    in.ref.individual = individual;
    return in;
}

Solution solve(const Instance& in)
{
    return in.cfg.fairness_kind == FairnessKind::Group
               ? solve_group_detailed(in.S, in.t, in.beta, in.part, in.cfg)
               : solve_individual_detailed(in.S, in.t, in.beta, in.part, in.blocks, in.cfg);
}

double scalarized(const Instance& in, const Vector& W)
{
    const auto terms = objective_terms(EnsembleWeights{W}, in.S, in.t, in.beta, in.part, in.blocks, in.cfg);
    return terms.f1 + in.cfg.alpha * terms.f2;
}

}  // namespace

TEST(SolveGroup, ExactFitAtAlphaZero)
{
    const ScoreMatrix S = rows(Matrix{{0.0, 1.0}});
    const TargetVector t{vec({0, 1}), "t"};
    const ImportanceWeights beta{vec({1.3, 2.1})};
    SolveConfig cfg;
    const auto W = solve_group(S, t, beta, partition_groups({0, 1}), cfg);
    ASSERT_EQ(W.size(), 1);
    EXPECT_NEAR(W.w[0], 1.0, 1e-14);
    const auto terms = objective_terms(W, S, t, beta, partition_groups({0, 1}), {}, cfg);
    EXPECT_NEAR(terms.f1, 0.0, 1e-24);
}

TEST(SolveGroup, HugeAlphaDrivesWeightsToZero)
{
    const ScoreMatrix S = rows(Matrix{{0.1, 0.3, 0.8, 0.9}});
    const TargetVector t{vec({0, 0.2, 0.9, 1}), "t"};
    const auto beta = importance_weights(t);
    const auto part = partition_groups({0, 0, 1, 1});
    SolveConfig cfg;
    double prev = std::abs(solve_group(S, t, beta, part, cfg).w[0]);
    for (double alpha : {1.0, 1e3, 1e6, 1e9, 1e12}) {
        cfg.alpha = alpha;
        const double w = std::abs(solve_group(S, t, beta, part, cfg).w[0]);
        EXPECT_LT(w, prev);
        prev = w;
    }
    EXPECT_LT(prev, 1e-9);
}

TEST(SolveGroup, MatchesNumericalMinimiserOnThreeByTwenty)
{
    std::mt19937_64 rng(51);
    const auto in = random_instance(rng, 3, 20, 2, 1.0, false);
    const Vector W = solve(in).weights.w;
    const auto ref = oracle::minimize(in.ref);
    ASSERT_LE(ref.grad_norm, 1e-10);
    EXPECT_NEAR(oracle::objective(in.ref, W), ref.value, 1e-4 * std::max(1.0, std::abs(ref.value)));
    EXPECT_NEAR(scalarized(in, W), oracle::objective(in.ref, W), 1e-12);
}

TEST(SolveIndividual, AlphaZeroMatchesGroupSolve)
{
    std::mt19937_64 rng(52);
    auto in = random_instance(rng, 4, 30, 3, 0.0, true);
    const Vector Wi = solve(in).weights.w;
    in.cfg.fairness_kind = FairnessKind::Group;
    const Vector Wg = solve(in).weights.w;
    EXPECT_EQ(Wi, Wg);
}

TEST(SolveIndividual, ZeroKernelLeavesTheFitAlone)
{
    std::mt19937_64 rng(53);
    auto in = random_instance(rng, 3, 25, 2, 0.0, true);
    const Vector W0 = solve(in).weights.w;
    for (auto& b : in.blocks) b.weights.setZero();
    for (double alpha : {0.5, 10.0, 1e6}) {
        in.cfg.alpha = alpha;
        EXPECT_LE((solve(in).weights.w - W0).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SolveIndividual, MatchesNumericalMinimiserAndBruteForcePenalty)
{
    std::mt19937_64 rng(54);
    const auto in = random_instance(rng, 3, 15, 2, 0.5, true);
    const Vector W = solve(in).weights.w;
    const auto ref = oracle::minimize(in.ref);
    ASSERT_LE(ref.grad_norm, 1e-10);
    EXPECT_NEAR(oracle::objective(in.ref, W), ref.value, 1e-4 * std::max(1.0, std::abs(ref.value)));

    const auto& blk = in.blocks.front();
    const Matrix fast = pair_penalty_block(in.S, in.part, blk);
    const Matrix slow = oracle::pair_penalty(in.S.scores, in.part.groups[0].members, in.part.groups[1].members,
                                             blk.weights);
    EXPECT_LE((fast - slow).norm(), 1e-10 * slow.norm());
}

TEST(Solver, PenaltyAssemblyMatchesBruteForce)
{
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(4, 100)(rng);
        const int v = std::uniform_int_distribution<int>(2, 4)(rng);
        const auto k = std::uniform_int_distribution<Eigen::Index>(1, 6)(rng);
        const auto in = random_instance(rng, k, n, v, 1.0, true);
        const Matrix L = individual_penalty(in.S, in.part, in.blocks);
        Matrix brute = Matrix::Zero(k, k);
        for (const auto& blk : in.blocks) {
            const auto& mp = in.part.groups[blk.group_pair.first].members;
            const auto& mq = in.part.groups[blk.group_pair.second].members;
            brute += oracle::pair_penalty(in.S.scores, mp, mq, blk.weights) /
                     (static_cast<double>(mp.size()) * static_cast<double>(mq.size()));
        }
        brute /= static_cast<double>(in.part.pair_count());
        ASSERT_LE((L - brute).norm(), 1e-10 * std::max(brute.norm(), 1e-300)) << "trial " << trial;

        // W'LW reproduces IF and W'GW reproduces DP.
        const Vector W = oracle::random_matrix(rng, k, 1, -1.0, 1.0).col(0);
        const Vector y = in.S.scores.transpose() * W;
        ASSERT_NEAR(W.dot(L * W), individual_fairness(y, in.part, in.blocks), 1e-12);
        ASSERT_NEAR(W.dot(group_penalty(in.S, in.part) * W), demographic_parity(y, in.part), 1e-12);
    }
}

TEST(Solver, PenaltiesAreSymmetricPsd)
{
    std::mt19937_64 rng(56);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(4, 40)(rng);
        const int v = std::uniform_int_distribution<int>(2, 4)(rng);
        const auto k = std::uniform_int_distribution<Eigen::Index>(1, 6)(rng);
        const auto in = random_instance(rng, k, n, v, 1.0, true);
        for (const Matrix& P : {group_penalty(in.S, in.part), individual_penalty(in.S, in.part, in.blocks)}) {
            ASSERT_EQ(P, P.transpose());
            const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues();
            ASSERT_GE(ev.minCoeff(), -1e-10);
        }
    }
}

TEST(Solver, StationarityAndOracleAgreement)
{
    std::mt19937_64 rng(57);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = std::uniform_int_distribution<Eigen::Index>(2, 6)(rng);
        const auto n = std::uniform_int_distribution<std::size_t>(20, 60)(rng);
        const int v = std::uniform_int_distribution<int>(2, 4)(rng);
        const double alpha = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 3.0)(rng));
        const bool individual = trial % 2 == 1;
        const bool weighted = trial % 3 != 0;
        const auto in = random_instance(rng, k, n, v, alpha, individual, weighted);
        const auto sol = solve(in);
        ASSERT_FALSE(sol.ridge_triggered);
        const Vector rhs_scale = in.S.scores * in.ref.beta.asDiagonal() * in.t.values;
        const Vector g = oracle::gradient(in.ref, sol.weights.w);
        ASSERT_LE(g.cwiseAbs().maxCoeff(), 1e-6 * (1.0 + rhs_scale.cwiseAbs().maxCoeff())) << "trial " << trial;
    }
}

TEST(Solver, UnweightedEqualsUnitImportance)
{
    std::mt19937_64 rng(58);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = std::uniform_int_distribution<Eigen::Index>(1, 6)(rng);
        const auto n = std::uniform_int_distribution<std::size_t>(8, 40)(rng);
        auto in = random_instance(rng, k, n, 2 + trial % 3, 0.7, trial % 2 == 1, false);
        const Vector unweighted = solve(in).weights.w;
        in.cfg.weighted_f1 = true;
        in.beta.beta = Vector::Ones(static_cast<Eigen::Index>(n));
        ASSERT_EQ(solve(in).weights.w, unweighted);
    }
}

TEST(Solver, AlphaMonotonicity)
{
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = std::uniform_int_distribution<Eigen::Index>(2, 6)(rng);
        const auto n = std::uniform_int_distribution<std::size_t>(10, 50)(rng);
        auto in = random_instance(rng, k, n, 2 + trial % 3, 0.0, trial % 2 == 1, trial % 4 != 0);
        const double a1 = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 4.0)(rng));
        const double a2 = a1 * std::pow(10.0, std::uniform_real_distribution<double>(0.01, 3.0)(rng));
        in.cfg.alpha = a1;
        const auto w1 = solve(in).weights;
        const auto t1 = objective_terms(w1, in.S, in.t, in.beta, in.part, in.blocks, in.cfg);
        in.cfg.alpha = a2;
        const auto w2 = solve(in).weights;
        const auto t2 = objective_terms(w2, in.S, in.t, in.beta, in.part, in.blocks, in.cfg);
        ASSERT_LE(t2.f2, t1.f2 + 1e-9) << "trial " << trial;
        ASSERT_GE(t2.f1, t1.f1 - 1e-9) << "trial " << trial;
    }
}

TEST(Solver, LocalMinimalityProbe)
{
    std::mt19937_64 rng(60);
    for (bool individual : {false, true}) {
        const auto in = random_instance(rng, 5, 40, 3, 2.0, individual);
        const Vector W = solve(in).weights.w;
        const double best = scalarized(in, W);
        std::normal_distribution<double> g(0.0, 1.0);
        for (int probe = 0; probe < 100; ++probe) {
            Vector delta(W.size());
            for (Eigen::Index i = 0; i < W.size(); ++i) delta[i] = g(rng);
            delta *= std::uniform_real_distribution<double>(1e-6, 1e-2)(rng) / delta.norm();
            EXPECT_LE(best, scalarized(in, W + delta));
        }
    }
}

TEST(Solver, DuplicateDetectorsTriggerTheRidge)
{
    std::vector<std::string> warnings;
    ScopedWarningHandler guard([&](std::string_view m) { warnings.emplace_back(m); });
    const ScoreMatrix S = rows(Matrix{{0.1, 0.5, 0.9, 0.3}, {0.1, 0.5, 0.9, 0.3}});
    const TargetVector t{vec({0, 0.5, 1, 0.25}), "t"};
    const auto sol = solve_group_detailed(S, t, importance_weights(t), partition_groups({0, 1, 0, 1}), SolveConfig{});
    EXPECT_TRUE(sol.ridge_triggered);
    EXPECT_TRUE(sol.weights.w.allFinite());
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Solver, RejectsBadConfig)
{
    const ScoreMatrix S = rows(Matrix{{0.0, 1.0}});
    const TargetVector t{vec({0, 1}), "t"};
    const ImportanceWeights beta{vec({1, 1})};
    SolveConfig cfg;
    cfg.alpha = -1.0;
    EXPECT_THROW(solve_group(S, t, beta, partition_groups({0, 1}), cfg), InvalidConfig);
    cfg.alpha = 1.0;
    cfg.fairness_kind = FairnessKind::Individual;
    EXPECT_THROW(solve_group(S, t, beta, partition_groups({0, 1}), cfg), InvalidConfig);
    EXPECT_THROW(solve_group(S, TargetVector{vec({0, 1, 2}), "t"}, beta, partition_groups({0, 1}), SolveConfig{}),
                 InvalidInput);
}

TEST(Combine, Examples)
{
    const Matrix S{{0.3, 0.6}, {0.1, 0.2}};
    const Vector sel = combine(EnsembleWeights{vec({1, 0})}, rows(S));
    EXPECT_EQ(sel, Vector(S.row(0).transpose()));
    const Vector avg = combine(EnsembleWeights{vec({0.5, 0.5})}, rows(Matrix{{0, 1}, {1, 0}}));
    EXPECT_DOUBLE_EQ(avg[0], 0.5);
    EXPECT_DOUBLE_EQ(avg[1], 0.5);
    const Vector mixed = combine(EnsembleWeights{vec({2, -1})}, rows(S));
    EXPECT_NEAR(mixed[0], 0.5, 1e-15);
    EXPECT_NEAR(mixed[1], 1.0, 1e-15);
    EXPECT_THROW(combine(EnsembleWeights{vec({1})}, rows(S)), InvalidInput);
}

TEST(ObjectiveTerms, ZeroWeights)
{
    const ScoreMatrix S = rows(Matrix{{0.3, 0.6, 0.2}});
    const TargetVector t{vec({0.5, 1.0, 0.0}), "t"};
    const auto beta = importance_weights(t);
    const auto terms =
        objective_terms(EnsembleWeights{vec({0})}, S, t, beta, partition_groups({0, 1, 1}), {}, SolveConfig{});
    EXPECT_NEAR(terms.f1, beta.beta[0] * 0.25 + beta.beta[1] * 1.0, 1e-15);
    EXPECT_EQ(terms.f2, 0.0);
}
