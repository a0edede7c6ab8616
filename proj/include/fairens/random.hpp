#ifndef FAIRENS_RANDOM_HPP
#define FAIRENS_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <random>

namespace fairens {

/// Derives an independent stream seed from a base seed and a stream id
/// (splitmix64 finaliser).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// mt19937_64 with explicit, library-independent mappings to doubles and
/// indices, so seeded runs are reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in {0, ..., m-1}; m > 0.
    std::size_t uniform_index(std::size_t m)
    {
        const auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(m));
        return i < m ? i : m - 1;
    }

    std::uint64_t next() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fairens

#endif  // FAIRENS_RANDOM_HPP
