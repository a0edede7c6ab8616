#ifndef FAIRENS_FIXTURES_HPP
#define FAIRENS_FIXTURES_HPP

// Small synthetic stand-ins for the eight benchmark datasets. Each keeps the
// benchmark's group count and rough outlier ratio at n <= 300, with planted
// outliers, so the whole pipeline can run without downloads.

#include "fairens/core.hpp"
#include "fairens/ingestion.hpp"
#include "fairens/random.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fairens::fixtures {

struct FixtureShape {
    const char* name;
    int n;
    int dims;
    int outliers;
    int groups;
    bool native_groups;  // groups drawn with the features instead of injected
    double bias_strength;  // injected fixtures only
};

inline constexpr std::array<FixtureShape, 8> kShapes{{
    {"communities", 300, 10, 42, 4, true, 0.0},
    {"german_credit", 300, 12, 90, 4, true, 0.0},
    {"annthyroid", 300, 6, 24, 2, false, 0.6},
    {"cardio", 300, 10, 30, 2, false, 0.6},
    {"japanese_vowels", 300, 12, 12, 3, false, 0.7},
    {"breast_cancer", 240, 9, 84, 3, false, 0.5},
    {"mammography", 300, 6, 10, 4, false, 0.8},
    {"pima", 250, 8, 87, 4, false, 0.5},
}};

inline const FixtureShape& shape(const std::string& name)
{
    for (const auto& s : kShapes) {
        if (name == s.name) {
            return s;
        }
    }
    throw InvalidConfig("no fixture named '" + name + "'");
}

/// Inliers: a two-cluster Gaussian mixture. Outliers: a wider Gaussian offset
/// by a random direction of length ~3, so detection is good but imperfect.
/// Native-group fixtures draw the group first, give group 0 a higher outlier
/// rate and shift two feature means by group.
inline Dataset make_fixture(const FixtureShape& s, std::uint64_t seed)
{
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto& eng = rng.engine();

    Dataset d;
    d.name = std::string(s.name) + "_fixture";
    d.features.resize(s.n, s.dims);
    d.labels.emplace(static_cast<std::size_t>(s.n), 0);
    d.groups.assign(static_cast<std::size_t>(s.n), 0);

    // Outlier placement: the first s.outliers slots of a random permutation.
    std::vector<int> perm(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i) {
        perm[static_cast<std::size_t>(i)] = i;
    }
    if (s.native_groups) {
        // Group sizes roughly balanced; outliers preferentially in group 0.
        std::vector<int> group_of(static_cast<std::size_t>(s.n));
        for (int i = 0; i < s.n; ++i) {
            group_of[static_cast<std::size_t>(i)] = i % s.groups;
        }
        for (int i = s.n - 1; i > 0; --i) {
            std::swap(group_of[static_cast<std::size_t>(i)],
                      group_of[rng.uniform_index(static_cast<std::size_t>(i) + 1)]);
        }
        d.groups = group_of;
        std::vector<double> weight(static_cast<std::size_t>(s.n));
        for (int i = 0; i < s.n; ++i) {
            weight[static_cast<std::size_t>(i)] = group_of[static_cast<std::size_t>(i)] == 0 ? 4.0 : 1.0;
        }
        // Weighted sampling without replacement for the outlier slots.
        for (int slot = 0; slot < s.outliers; ++slot) {
            double total = 0.0;
            for (int i = slot; i < s.n; ++i) {
                total += weight[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            }
            double u = rng.uniform01() * total;
            int pick = s.n - 1;
            for (int i = slot; i < s.n; ++i) {
                u -= weight[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
                if (u < 0.0) {
                    pick = i;
                    break;
                }
            }
            std::swap(perm[static_cast<std::size_t>(slot)], perm[static_cast<std::size_t>(pick)]);
        }
    } else {
        for (int i = s.n - 1; i > 0; --i) {
            std::swap(perm[static_cast<std::size_t>(i)], perm[rng.uniform_index(static_cast<std::size_t>(i) + 1)]);
        }
    }
    for (int slot = 0; slot < s.outliers; ++slot) {
        (*d.labels)[static_cast<std::size_t>(perm[static_cast<std::size_t>(slot)])] = 1;
    }

    Vector centre_b(s.dims);
    for (int c = 0; c < s.dims; ++c) {
        centre_b[c] = 1.5 * gauss(eng);
    }
    for (int i = 0; i < s.n; ++i) {
        const bool outlier = (*d.labels)[static_cast<std::size_t>(i)] == 1;
        if (!outlier) {
            const bool second = rng.uniform01() < 0.35;
            for (int c = 0; c < s.dims; ++c) {
                d.features(i, c) = (second ? centre_b[c] : 0.0) + 0.6 * gauss(eng);
            }
        } else {
            Vector dir(s.dims);
            for (int c = 0; c < s.dims; ++c) {
                dir[c] = gauss(eng);
            }
            dir /= dir.norm();
            const double radius = 2.0 + 2.0 * rng.uniform01();
            for (int c = 0; c < s.dims; ++c) {
                d.features(i, c) = radius * dir[c] + 1.0 * gauss(eng);
            }
        }
        if (s.native_groups) {
            const int g = d.groups[static_cast<std::size_t>(i)];
            d.features(i, 0) += 0.4 * g;
            d.features(i, 1) -= 0.3 * g;
        }
    }
    for (int c = 0; c < s.dims; ++c) {
        d.feature_names.push_back("x" + std::to_string(c));
    }

    if (!s.native_groups) {
        d = inject_protected_attribute(std::move(d), s.groups, s.bias_strength, mix_seed(seed, 1));
    }
    validate(d);
    return d;
}

inline Dataset make_fixture(const std::string& name, std::uint64_t seed)
{
    return make_fixture(shape(name), seed);
}

}  // namespace fairens::fixtures

#endif  // FAIRENS_FIXTURES_HPP
