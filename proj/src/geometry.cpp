#include "diffeo/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "diffeo/errors.hpp"

namespace diffeo {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) noexcept
{
    return 0.5 * cross(b - a, c - a);
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) noexcept
{
    return triple(b - a, c - a, d - a) / 6.0;
}

namespace {

int parity(const GridPoint& corner, int rank)
{
    int n = 0;
    for (int a = 0; a < rank; ++a) {
        n += static_cast<int>(corner[a]);
    }
    return n % 2;
}

// Corner simplex at cell corner `c`: the pattern points every axis into the cell.
SimplexRef corner_simplex(const GridPoint& c, int rank)
{
    unsigned bits = 0;
    for (int a = 0; a < rank; ++a) {
        if (c[a] == 0) {
            bits |= 1u << a;
        }
    }
    const SignPattern pattern(rank, bits);
    SimplexRef s{GridPoint{}, {c}, pattern.orientation(), c, Corner{pattern}};
    for (int a = 0; a < rank; ++a) {
        GridPoint v = c;
        v[a] += pattern.sign(a);
        s.vertices.push_back(v);
    }
    return s;
}

GridPoint offset(Index x, Index y, Index z = 0)
{
    return GridPoint{{x, y, z}};
}

} // namespace

std::vector<SimplexRef> scheme_simplices(const Scheme& scheme)
{
    if (scheme.rank != 2 && scheme.rank != 3) {
        throw Error(ErrorCode::invalid_argument, "scheme rank must be 2 or 3");
    }
    const int wanted_parity = scheme.tag == SchemeTag::a ? 0 : 1;
    std::vector<SimplexRef> out;
    const unsigned corners = 1u << scheme.rank;
    for (unsigned k = 0; k < corners; ++k) {
        GridPoint c;
        for (int a = 0; a < scheme.rank; ++a) {
            c[a] = (k >> a) & 1u;
        }
        if (parity(c, scheme.rank) == wanted_parity) {
            out.push_back(corner_simplex(c, scheme.rank));
        }
    }
    if (scheme.rank == 3) {
        if (scheme.tag == SchemeTag::a) {
            out.push_back(SimplexRef{GridPoint{},
                                     {offset(1, 1, 1), offset(0, 0, 1), offset(0, 1, 0), offset(1, 0, 0)},
                                     1,
                                     offset(1, 1, 1),
                                     Star{StarKind::first}});
        } else {
            out.push_back(SimplexRef{GridPoint{},
                                     {offset(0, 0, 0), offset(1, 1, 0), offset(0, 1, 1), offset(1, 0, 1)},
                                     1,
                                     offset(0, 0, 0),
                                     Star{StarKind::second}});
        }
    }
    return out;
}

double transformed_measure(const DisplacementField& field, const GridPoint& cell_origin, const SimplexRef& simplex)
{
    auto position = [&](const GridPoint& off) {
        GridPoint q = cell_origin;
        for (int a = 0; a < 3; ++a) {
            q[a] += off[a];
        }
        return field.voxel_position(q);
    };
    if (field.rank() == 2) {
        if (simplex.vertices.size() != 3) {
            throw Error(ErrorCode::rank_mismatch, "2D field needs a triangle");
        }
        const Vec3 a = position(simplex.vertices[0]);
        const Vec3 b = position(simplex.vertices[1]);
        const Vec3 c = position(simplex.vertices[2]);
        return simplex.orientation * signed_area({a[0], a[1]}, {b[0], b[1]}, {c[0], c[1]});
    }
    if (simplex.vertices.size() != 4) {
        throw Error(ErrorCode::rank_mismatch, "3D field needs a tetrahedron");
    }
    return simplex.orientation * signed_volume(position(simplex.vertices[0]), position(simplex.vertices[1]),
                                               position(simplex.vertices[2]), position(simplex.vertices[3]));
}

double fold_measure_cell(const DisplacementField& field, const GridPoint& cell, const Scheme& scheme)
{
    if (scheme.rank != field.rank()) {
        throw Error(ErrorCode::rank_mismatch, "scheme rank differs from field rank");
    }
    GridPoint far = cell;
    for (int a = 0; a < field.rank(); ++a) {
        far[a] += 1;
    }
    if (!field.dims().contains(cell) || !field.dims().contains(far)) {
        throw Error(ErrorCode::out_of_bounds, "cell is not fully inside the field");
    }
    double folded = 0.0;
    for (const auto& s : scheme_simplices(scheme)) {
        folded += std::max(0.0, -transformed_measure(field, cell, s));
    }
    return folded;
}

bool kernel_nonempty(const Vec2& q1, const Vec2& q2, const Vec2& q3, const Vec2& q4)
{
    // Row r of the LP reads  n_r . (x, y) - t >= c_r  with unit normals n_r;
    // row 4 caps t at 1 so the optimum is attained at a vertex.
    const std::array<Vec2, 4> q{q1, q2, q3, q4};
    std::array<Vec3, 5> rows{};
    std::array<double, 5> rhs{};
    double scale = 1.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec2& a = q[i];
        const Vec2& b = q[(i + 1) % 4];
        const Vec2 d = b - a;
        const double len = std::hypot(d[0], d[1]);
        if (len == 0.0) {
            return false;
        }
        const Vec2 n{-d[1] / len, d[0] / len};
        rows[i] = {n[0], n[1], -1.0};
        rhs[i] = dot(n, a);
        scale = std::max(scale, std::abs(rhs[i]));
    }
    rows[4] = {0.0, 0.0, -1.0};
    rhs[4] = -1.0;

    // Parallel normals only arise from four collinear points, whose half-planes
    // include opposite sides of one line.
    double spread = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            spread = std::max(spread, std::abs(rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0]));
        }
    }
    if (spread < 1e-15) {
        return false;
    }

    const double feas_tol = 1e-12 * scale;
    double best_t = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            for (std::size_t k = j + 1; k < 5; ++k) {
                const double det = triple(rows[i], rows[j], rows[k]);
                if (std::abs(det) < 1e-14) {
                    continue;
                }
                // Cramer's rule on the rows: solution = (r_j x r_k, r_k x r_i, r_i x r_j) * rhs / det.
                const Vec3 cjk = cross(rows[j], rows[k]);
                const Vec3 cki = cross(rows[k], rows[i]);
                const Vec3 cij = cross(rows[i], rows[j]);
                Vec3 v{};
                for (std::size_t c = 0; c < 3; ++c) {
                    v[c] = (rhs[i] * cjk[c] + rhs[j] * cki[c] + rhs[k] * cij[c]) / det;
                }
                bool feasible = true;
                for (std::size_t r = 0; r < 5 && feasible; ++r) {
                    feasible = dot(rows[r], v) >= rhs[r] - feas_tol;
                }
                if (feasible) {
                    best_t = std::max(best_t, v[2]);
                }
            }
        }
    }
    return best_t > kernel_tolerance;
}

} // namespace diffeo
