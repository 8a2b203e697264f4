#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diffeo/grid.hpp"

namespace diffeo {

enum class Difference : std::uint8_t { backward, forward };

/// One finite-difference direction per axis.
///
/// Bit `a` of forward_bits() is set when axis `a` uses the forward difference
/// T(p + e_a) - T(p), clear for the backward difference T(p) - T(p - e_a).
/// There are 4 patterns in 2D and 8 in 3D; the all-backward pattern has bits 0.
class SignPattern {
public:
    SignPattern(int rank, unsigned forward_bits);
    SignPattern(std::initializer_list<Difference> per_axis);

    // Accepts "+-+", "(+,-,+)" and "corner(+,-,+)".
    static SignPattern parse(std::string_view text);
    static std::vector<SignPattern> all(int rank);

    int rank() const noexcept { return rank_; }
    unsigned forward_bits() const noexcept { return bits_; }
    bool forward(int axis) const noexcept { return (bits_ >> axis) & 1u; }
    int sign(int axis) const noexcept { return forward(axis) ? 1 : -1; }

    // Product of the per-axis signs: the orientation of the untransformed
    // corner simplex spanned by p and its pattern neighbors.
    int orientation() const noexcept;

    std::string to_string() const;

    friend bool operator==(const SignPattern&, const SignPattern&) = default;

private:
    int rank_;
    unsigned bits_;
};

struct Corner {
    SignPattern pattern;
    friend bool operator==(const Corner&, const Corner&) = default;
};

struct Central {
    friend bool operator==(const Central&, const Central&) = default;
};

enum class StarKind { first, second };

// Central tetrahedron of a 3D cube split: `first` spans p and its (-,-)
// diagonal neighbors, `second` spans p and its (+,+) diagonal neighbors.
struct Star {
    StarKind kind;
    friend bool operator==(const Star&, const Star&) = default;
};

using JacobianVariant = std::variant<Corner, Central, Star>;

// "corner(+,-,+)", "central", "star1", "star2"
std::string to_string(const JacobianVariant& variant);
JacobianVariant parse_variant(std::string_view text);

// Ordering used to pick the first violation at a point: corners by
// forward_bits, then star1, then star2, then central.
int variant_order(const JacobianVariant& variant) noexcept;

/// Dense per-point scalar values with an explicit defined flag per point.
/// Undefined entries hold NaN and are never treated as zero.
class ScalarMap {
public:
    explicit ScalarMap(GridDims dims);

    const GridDims& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return values_.size(); }

    bool is_defined(std::size_t i) const noexcept { return defined_[i] != 0; }
    double value(std::size_t i) const noexcept { return values_[i]; }
    std::optional<double> at(const GridPoint& p) const;

    void set(std::size_t i, double v) noexcept
    {
        values_[i] = v;
        defined_[i] = 1;
    }
    void unset(std::size_t i) noexcept;

    std::size_t defined_count() const noexcept;
    std::span<const double> values() const noexcept { return values_; }
    std::span<const std::uint8_t> defined_flags() const noexcept { return defined_; }

private:
    GridDims dims_;
    std::vector<double> values_;
    std::vector<std::uint8_t> defined_;
};

// Determinant of the rank x rank matrix whose column a is the pattern's
// difference of T along axis a. Voxel units. Throws out_of_bounds,
// boundary_undefined, or rank_mismatch.
double corner_det(const DisplacementField& field, const GridPoint& p, const SignPattern& pattern);

// Column a is (T(p + e_a) - T(p - e_a)) / 2.
double central_det(const DisplacementField& field, const GridPoint& p);

// 3D only. first: (a x b) . c over T(p-x-y), T(p-x-z), T(p-y-z) relative to
// T(p); second: over T(p+x+y), T(p+y+z), T(p+x+z).
double star_det(const DisplacementField& field, const GridPoint& p, StarKind which);

double determinant(const DisplacementField& field, const GridPoint& p, const JacobianVariant& variant);

// Points lacking the neighbors a variant needs are left undefined.
// threads == 0 uses all hardware threads; output does not depend on it.
ScalarMap jacobian_map(const DisplacementField& field, const JacobianVariant& variant, unsigned threads = 1);

} // namespace diffeo
