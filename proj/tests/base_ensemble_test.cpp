#include "fairens/base_ensemble.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

using namespace fairens;

namespace {

ScoreMatrix scores(std::initializer_list<std::initializer_list<double>> rows)
{
    ScoreMatrix S;
    S.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double x : row) S.scores(r, c++) = x;
        ++r;
    }
    return S;
}

ScoreMatrix random_scores(std::mt19937_64& rng, Eigen::Index k, Eigen::Index n)
{
    ScoreMatrix S;
    S.scores = oracle::random_matrix(rng, k, n);
    return S;
}

ScoreMatrix permute_rows(const ScoreMatrix& S, std::mt19937_64& rng)
{
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(S.k()));
    for (Eigen::Index i = 0; i < S.k(); ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    ScoreMatrix out;
    out.scores.resize(S.k(), S.n());
    for (Eigen::Index i = 0; i < S.k(); ++i) out.scores.row(i) = S.scores.row(perm[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

TEST(MaxCombination, ConstantAfterMaxIsZeros)
{
    const auto t = max_combination(scores({{0, 1}, {1, 0}}));
    EXPECT_TRUE(t.values.isZero(0.0));
    EXPECT_EQ(t.source, "max");
}

TEST(MaxCombination, HandArithmetic)
{
    // Column maxima [0.4, 0.8] / 2 = [0.2, 0.4] -> [0, 1].
    const auto t = max_combination(scores({{0.2, 0.8}, {0.4, 0.6}}));
    EXPECT_DOUBLE_EQ(t.values[0], 0.0);
    EXPECT_DOUBLE_EQ(t.values[1], 1.0);
}

TEST(MaxCombination, SingleDetector)
{
    const auto t = max_combination(scores({{0.1, 0.9}}));
    EXPECT_DOUBLE_EQ(t.values[0], 0.0);
    EXPECT_DOUBLE_EQ(t.values[1], 1.0);
}

TEST(AverageCombination, Examples)
{
    EXPECT_TRUE(average_combination(scores({{0, 1}, {1, 0}})).values.isZero(0.0));
    const auto same = average_combination(scores({{0, 1}, {0, 1}}));
    EXPECT_DOUBLE_EQ(same.values[0], 0.0);
    EXPECT_DOUBLE_EQ(same.values[1], 1.0);
    const auto mixed = average_combination(scores({{0.2, 0.8}, {0.6, 0.4}}));
    EXPECT_DOUBLE_EQ(mixed.values[0], 0.0);
    EXPECT_DOUBLE_EQ(mixed.values[1], 1.0);
}

TEST(Pearson, ConstantSideIsZero)
{
    Vector a(3);
    a << 1, 1, 1;
    Vector b(3);
    b << 1, 2, 3;
    EXPECT_EQ(pearson(a, b), 0.0);
    EXPECT_NEAR(pearson(b, b), 1.0, 1e-15);
    EXPECT_NEAR(pearson(b, -b), -1.0, 1e-15);
}

TEST(Greedy, DuplicateDetectorsSelectOne)
{
    const auto S = scores({{0.1, 0.7, 0.3, 1.0}, {0.1, 0.7, 0.3, 1.0}});
    EXPECT_EQ(greedy_selection(S).size(), 1u);
    const auto t = greedy_model_selection(S);
    EXPECT_EQ(t.values, minmax_normalize(S.scores.row(0).transpose()));
}

TEST(Greedy, DuplicatePlusDistinctSelectsTwo)
{
    // Rows a, a, b on four integer points. corr(a,b) = 0.6 so the duplicate is
    // rejected (mean stays 1) and b is accepted (mean drops to 0.6).
    const auto S = scores({{1, 2, 3, 4}, {1, 2, 3, 4}, {2, 1, 4, 3}});
    EXPECT_NEAR(pearson(S.scores.row(0).transpose(), S.scores.row(2).transpose()), 0.6, 1e-12);
    auto chosen = greedy_selection(S);
    std::sort(chosen.begin(), chosen.end());
    EXPECT_EQ(chosen, (std::vector<Eigen::Index>{0, 2}));
}

TEST(Greedy, AnticorrelatedPairAreBothKept)
{
    const auto S = scores({{0.0, 0.2, 0.9, 1.0}, {1.0, 0.7, 0.3, 0.0}});
    EXPECT_EQ(greedy_selection(S).size(), 2u);
    const auto t = greedy_model_selection(S);
    EXPECT_EQ(t.values, average_combination(S).values);
}

TEST(Greedy, AllConstantFallsBackToAverageWithWarning)
{
    std::vector<std::string> warnings;
    ScopedWarningHandler guard([&](std::string_view m) { warnings.emplace_back(m); });
    const auto t = greedy_model_selection(scores({{0.5, 0.5, 0.5}, {0.2, 0.2, 0.2}}));
    EXPECT_TRUE(t.values.isZero(0.0));
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Greedy, NeedsTwoDetectors)
{
    EXPECT_THROW(greedy_model_selection(scores({{0.1, 0.9}})), InvalidInput);
}

TEST(BaseEnsemble, ParseNames)
{
    EXPECT_EQ(parse_base_method("max"), BaseMethod::Max);
    EXPECT_EQ(parse_base_method("AVERAGE"), BaseMethod::Average);
    EXPECT_EQ(parse_base_method("greedy"), BaseMethod::Greedy);
    EXPECT_THROW(parse_base_method("median"), InvalidConfig);
}

TEST(BaseEnsemble, RowOrderInvarianceAndRange)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = std::uniform_int_distribution<Eigen::Index>(2, 8)(rng);
        const auto n = std::uniform_int_distribution<Eigen::Index>(2, 30)(rng);
        const ScoreMatrix S = random_scores(rng, k, n);
        const ScoreMatrix P = permute_rows(S, rng);
        for (BaseMethod m : {BaseMethod::Max, BaseMethod::Average}) {
            const Vector a = make_target(S, m).values;
            const Vector b = make_target(P, m).values;
            ASSERT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
        }
        for (BaseMethod m : {BaseMethod::Max, BaseMethod::Average, BaseMethod::Greedy}) {
            const Vector t = make_target(S, m).values;
            ASSERT_EQ(t.size(), n);
            ASSERT_GE(t.minCoeff(), 0.0);
            ASSERT_LE(t.maxCoeff(), 1.0);
        }
        // With n >= 5 random rows have distinct correlations, so greedy picks
        // the same set. At n = 2 every correlation is +-1 and ties decide.
        if (n < 5) continue;
        const Vector g1 = make_target(S, BaseMethod::Greedy).values;
        const Vector g2 = make_target(P, BaseMethod::Greedy).values;
        ASSERT_LE((g1 - g2).cwiseAbs().maxCoeff(), 1e-12);
    }
}
