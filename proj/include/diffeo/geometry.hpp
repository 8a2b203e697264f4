#pragma once

#include <vector>

#include "diffeo/grid.hpp"
#include "diffeo/jacobian.hpp"
#include "diffeo/vec.hpp"

namespace diffeo {

// Half the 2D cross product of (b - a, c - a); positive for counter-clockwise.
double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) noexcept;

// ((b - a) x (c - a)) . (d - a) / 6, right-hand rule.
double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) noexcept;

enum class SchemeTag { a, b };

/// One way of splitting every grid cell into simplices.
///
/// 2D: `a` cuts along the (1,0)-(0,1) diagonal, giving the corner triangles of
/// patterns (+,+) at the cell origin and (-,-) at the opposite corner; `b` cuts
/// the other diagonal, giving (-,+) and (+,-).
///
/// 3D: `a` is the four corner tetrahedra at the even-parity cell corners
/// (patterns with an even number of backward axes) plus the star1 central
/// tetrahedron anchored at the (1,1,1) corner; `b` is the four odd-parity
/// corners plus star2 anchored at the cell origin.
struct Scheme {
    SchemeTag tag;
    int rank;
};

/// A simplex of a cell split, in cell-local offsets.
///
/// Vertices are ordered so that the untransformed signed measure times
/// `orientation` is positive. The simplex is the geometric counterpart of
/// determinant `variant` evaluated at grid point cell_origin + anchor:
///   corner_det   == 2 * orientation * signed_area    (2D)
///   corner/star  == 6 * orientation * signed_volume  (3D)
struct SimplexRef {
    GridPoint cell_origin;
    std::vector<GridPoint> vertices; // offsets in {0,1}^rank
    int orientation;
    GridPoint anchor;                // offset of the determinant's grid point
    JacobianVariant variant;
};

std::vector<SimplexRef> scheme_simplices(const Scheme& scheme);

// Orientation-corrected signed measure of a simplex after applying T (voxel
// units). Positive iff the simplex keeps its orientation.
double transformed_measure(const DisplacementField& field, const GridPoint& cell_origin, const SimplexRef& simplex);

// Sum over the scheme's simplices in the cell of max(0, -corrected measure).
// Throws out_of_bounds unless the whole cell lies inside the field.
double fold_measure_cell(const DisplacementField& field, const GridPoint& cell, const Scheme& scheme);

struct HalfPlane {
    Vec2 a;
    Vec2 b;

    // Open half-plane of points p with triangle (a, b, p) positively oriented.
    bool contains(const Vec2& p) const noexcept { return signed_area(a, b, p) > 0.0; }
};

// Distance by which the half-planes are shrunk to decide strict feasibility.
inline constexpr double kernel_tolerance = 1e-12;

/// Whether the four open half-planes H(q1,q2), H(q2,q3), H(q3,q4), H(q4,q1)
/// share a point. With q = transformed (-x, -y, +x, +y) neighbors of p this is
/// the region where T(p) makes all four 2D corner determinants positive.
///
/// Decided as a linear program: maximize the common inset distance t of a
/// point from the four boundary lines (t capped at 1); the region is
/// non-empty iff the optimum exceeds kernel_tolerance.
bool kernel_nonempty(const Vec2& q1, const Vec2& q2, const Vec2& q3, const Vec2& q4);

} // namespace diffeo
