#include "fairens/core.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>
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

}  // namespace

TEST(MinmaxNormalize, AffineCase)
{
    const Vector out = minmax_normalize(vec({1, 3, 5}));
    EXPECT_DOUBLE_EQ(out[0], 0.0);
    EXPECT_DOUBLE_EQ(out[1], 0.5);
    EXPECT_DOUBLE_EQ(out[2], 1.0);
}

TEST(MinmaxNormalize, ConstantVectorIsZeros)
{
    const Vector out = minmax_normalize(vec({2, 2, 2}));
    EXPECT_TRUE(out.isZero(0.0));
}

TEST(MinmaxNormalize, HandArithmetic)
{
    // (0.8954 - 0.7696) / 0.2088 = 0.60249...
    const Vector out = minmax_normalize(vec({0.7696, 0.8954, 0.9784}));
    EXPECT_DOUBLE_EQ(out[0], 0.0);
    EXPECT_NEAR(out[1], 0.1258 / 0.2088, 1e-12);
    EXPECT_NEAR(out[1], 0.6025, 1e-4);
    EXPECT_DOUBLE_EQ(out[2], 1.0);
}

TEST(MinmaxNormalize, RejectsNonFinite)
{
    EXPECT_THROW(minmax_normalize(vec({1, std::nan(""), 2})), InvalidInput);
    EXPECT_THROW(minmax_normalize(vec({1, std::numeric_limits<double>::infinity()})), InvalidInput);
    EXPECT_THROW(minmax_normalize(Vector()), InvalidInput);
}

TEST(MinmaxNormalize, IdempotentOnNormalizedVectors)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = std::uniform_int_distribution<int>(2, 40)(rng);
        const Vector v = oracle::random_matrix(rng, n, 1, -5.0, 5.0).col(0);
        if (v.maxCoeff() == v.minCoeff()) continue;
        const Vector once = minmax_normalize(v);
        const Vector twice = minmax_normalize(once);
        ASSERT_LE((once - twice).cwiseAbs().maxCoeff(), 1e-15);
        ASSERT_GE(once.minCoeff(), 0.0);
        ASSERT_LE(once.maxCoeff(), 1.0);
    }
}

TEST(PartitionGroups, TwoGroups)
{
    const auto part = partition_groups({0, 1, 0, 1});
    ASSERT_EQ(part.groups.size(), 2u);
    EXPECT_EQ(part.groups[0].id, 0);
    EXPECT_EQ(part.groups[0].members, (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(part.groups[1].members, (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(part.pair_count(), 1u);
}

TEST(PartitionGroups, ThreeGroupsHaveThreePairs)
{
    const auto part = partition_groups({0, 1, 2, 0});
    EXPECT_EQ(part.groups.size(), 3u);
    EXPECT_EQ(part.pair_count(), 3u);
}

TEST(PartitionGroups, SingleGroupIsAnError)
{
    try {
        partition_groups({0, 0, 0});
        FAIL() << "expected an error";
    } catch (const InvalidInput& e) {
        EXPECT_EQ(std::string(e.what()), "fairness undefined for one group");
    }
}

TEST(PartitionGroups, DisjointCoverProperty)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
        const int v = std::uniform_int_distribution<int>(2, static_cast<int>(std::min<std::size_t>(n, 6)))(rng);
        const auto groups = oracle::random_groups(rng, n, v);
        const auto part = partition_groups(groups);
        std::vector<int> seen(n, 0);
        int prev_id = -1;
        for (const auto& g : part.groups) {
            ASSERT_GT(g.id, prev_id);
            prev_id = g.id;
            ASSERT_TRUE(std::is_sorted(g.members.begin(), g.members.end()));
            for (auto i : g.members) {
                ASSERT_EQ(groups[i], g.id);
                ++seen[i];
            }
        }
        for (int s : seen) ASSERT_EQ(s, 1);
        ASSERT_EQ(part.pair_count(), part.groups.size() * (part.groups.size() - 1) / 2);
    }
}

TEST(SolveLinear, Identity)
{
    const Vector x = solve_linear(Matrix::Identity(2, 2), vec({3, 4}), 0.0);
    EXPECT_DOUBLE_EQ(x[0], 3.0);
    EXPECT_DOUBLE_EQ(x[1], 4.0);
}

TEST(SolveLinear, Diagonal)
{
    Matrix A(2, 2);
    A << 2, 0, 0, 4;
    const Vector x = solve_linear(A, vec({2, 8}), 0.0);
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(SolveLinear, RankDeficientMatchesPseudoInverse)
{
    Matrix A(2, 2);
    A << 1, 1, 1, 1;
    const Vector b = vec({1, 1});
    const Vector x = solve_linear(A, b, 1e-8);
    // Minimum-norm solution from an SVD pseudo-inverse.
    const Vector pinv = A.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(b);
    EXPECT_NEAR(x[0], 0.5, 1e-7);
    EXPECT_NEAR(x[1], 0.5, 1e-7);
    EXPECT_NEAR((x - pinv).norm(), 0.0, 1e-7);
}

TEST(SolveLinear, SingularFallsBackToRidgeWithWarning)
{
    std::vector<std::string> warnings;
    ScopedWarningHandler guard([&](std::string_view m) { warnings.emplace_back(m); });
    Matrix A(2, 2);
    A << 1, 1, 1, 1;
    const auto sol = solve_symmetric(A, vec({1, 1}), 0.0);
    EXPECT_TRUE(sol.ridge_fallback);
    EXPECT_EQ(sol.ridge, kDefaultRidge);
    EXPECT_NEAR(sol.x[0], 0.5, 1e-7);
    ASSERT_EQ(warnings.size(), 1u);
}

TEST(SolveLinear, StillSingularIsAnError)
{
    ScopedWarningHandler guard([](std::string_view) {});
    const Matrix A = Matrix::Zero(2, 2);
    EXPECT_THROW(solve_symmetric(A, vec({1, 1}), 0.0, 0.0), SingularSystem);
}

TEST(SolveLinear, RejectsBadArguments)
{
    EXPECT_THROW(solve_linear(Matrix::Identity(2, 2), vec({1, 2, 3})), InvalidInput);
    EXPECT_THROW(solve_linear(Matrix::Identity(2, 2), vec({1, 2}), -1.0), InvalidInput);
}

TEST(SolveLinear, ResidualBoundOnRandomSpdSystems)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = std::uniform_int_distribution<int>(1, 8)(rng);
        const Matrix B = oracle::random_matrix(rng, k, k + 3, -1.0, 1.0);
        const Matrix A = B * B.transpose();
        const Vector b = oracle::random_matrix(rng, k, 1, -10.0, 10.0).col(0);
        const auto sol = solve_symmetric(A, b, 0.0);
        ASSERT_FALSE(sol.ridge_fallback);
        ASSERT_LE((A * sol.x - b).cwiseAbs().maxCoeff(), 1e-8 * b.cwiseAbs().maxCoeff());
    }
}

TEST(Dataset, ValidateCatchesBrokenInvariants)
{
    Dataset d;
    d.name = "t";
    d.features = Matrix::Zero(3, 2);
    d.groups = {0, 1, 1};
    EXPECT_NO_THROW(validate(d));

    auto one_group = d;
    one_group.groups = {0, 0, 0};
    EXPECT_THROW(validate(one_group), InvalidInput);

    auto gap = d;
    gap.groups = {0, 2, 2};
    EXPECT_THROW(validate(gap), InvalidInput);

    auto nan = d;
    nan.features(1, 1) = std::nan("");
    EXPECT_THROW(validate(nan), InvalidInput);

    auto labels = d;
    labels.labels = std::vector<int>{0, 1};
    EXPECT_THROW(validate(labels), InvalidInput);
}

TEST(StandardizeColumns, ZeroMeanUnitVarianceAndConstantColumns)
{
    Matrix X(4, 2);
    X << 1, 5, 2, 5, 3, 5, 4, 5;
    const Matrix Z = standardize_columns(X);
    EXPECT_NEAR(Z.col(0).mean(), 0.0, 1e-15);
    EXPECT_NEAR(Z.col(0).squaredNorm() / 4.0, 1.0, 1e-12);
    EXPECT_TRUE(Z.col(1).isZero(0.0));
}
