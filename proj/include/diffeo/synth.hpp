#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "diffeo/grid.hpp"

namespace diffeo::synth {

struct Identity {};

// T(p) = s * p, s > 0.
struct UniformScale {
    double s;
};

// T(p) = A p with A row-major, rank x rank.
struct Linear {
    std::vector<double> matrix;
};

// T(p) negates coordinate `axis`.
struct Reflection {
    int axis;
};

// u = displacement at `point`, zero elsewhere.
struct SinglePoint {
    GridPoint point;
    std::vector<double> displacement;
};

// Uniform noise in [-1, 1) per component from the counter-based generator,
// box-smoothed along each axis with the given radius (window clipped at the
// border), then scaled so the largest |component| equals `amplitude`.
struct RandomSmooth {
    std::uint64_t seed;
    double amplitude;
    int radius;
};

using Kind = std::variant<Identity, UniformScale, Linear, Reflection, SinglePoint, RandomSmooth>;

struct SynthSpec {
    GridDims dims;
    Kind kind;
};

// Throws invalid_spec for out-of-range parameters.
DisplacementField generate(const SynthSpec& spec);

/// SplitMix64 evaluated at a counter: the n-th output of the SplitMix64
/// sequence started at `seed`. Pure integer arithmetic, identical on every
/// platform.
constexpr std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t n) noexcept
{
    std::uint64_t z = seed + (n + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Top 53 bits mapped onto [-1, 1).
constexpr double unit_symmetric(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
}

} // namespace diffeo::synth
