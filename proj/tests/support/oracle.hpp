#pragma once

// Slow reference implementations used only by the tests. They go through the
// public point accessors and explicit vertex lists, never through the
// library's stencil kernels.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "diffeo/grid.hpp"
#include "diffeo/synth.hpp"

namespace oracle {

using diffeo::DisplacementField;
using diffeo::GridDims;
using diffeo::GridPoint;
using diffeo::Index;

using Matrix = std::vector<std::vector<double>>;

// Sum over permutations with their parity.
inline double leibniz_det(const Matrix& m)
{
    const std::size_t n = m.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                inversions += perm[i] > perm[j];
            }
        }
        double term = inversions % 2 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) {
            term *= m[r][perm[r]];
        }
        total += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

inline GridPoint offset(GridPoint p, int axis, Index d)
{
    p[axis] += d;
    return p;
}

inline std::vector<double> position(const DisplacementField& f, const GridPoint& p)
{
    const auto t = f.voxel_position(p);
    return std::vector<double>(t.begin(), t.begin() + f.rank());
}

inline std::vector<double> minus(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return out;
}

// Matrix with the given vectors as columns.
inline Matrix columns(const std::vector<std::vector<double>>& cols)
{
    const std::size_t n = cols.size();
    Matrix m(n, std::vector<double>(n));
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) {
            m[r][c] = cols[c][r];
        }
    }
    return m;
}

inline bool inside(const GridDims& d, const GridPoint& p)
{
    for (int a = 0; a < 3; ++a) {
        const Index ext = a < d.rank() ? d.extent(a) : 1;
        if (p[a] < 0 || p[a] >= ext) {
            return false;
        }
    }
    return true;
}

// bit a of `forward_bits` set: forward difference along a.
inline std::optional<double> corner_det(const DisplacementField& f, const GridPoint& p, unsigned forward_bits)
{
    std::vector<std::vector<double>> cols;
    for (int a = 0; a < f.rank(); ++a) {
        const bool fwd = (forward_bits >> a) & 1u;
        const GridPoint q = offset(p, a, fwd ? 1 : -1);
        if (!inside(f.dims(), q)) {
            return std::nullopt;
        }
        cols.push_back(fwd ? minus(position(f, q), position(f, p)) : minus(position(f, p), position(f, q)));
    }
    return leibniz_det(columns(cols));
}

inline std::optional<double> central_det(const DisplacementField& f, const GridPoint& p)
{
    std::vector<std::vector<double>> cols;
    for (int a = 0; a < f.rank(); ++a) {
        const GridPoint lo = offset(p, a, -1);
        const GridPoint hi = offset(p, a, 1);
        if (!inside(f.dims(), lo) || !inside(f.dims(), hi)) {
            return std::nullopt;
        }
        auto c = minus(position(f, hi), position(f, lo));
        for (double& v : c) {
            v /= 2.0;
        }
        cols.push_back(c);
    }
    return leibniz_det(columns(cols));
}

// which = 1: neighbors p-x-y, p-x-z, p-y-z; which = 2: p+x+y, p+y+z, p+x+z.
inline std::optional<double> star_det(const DisplacementField& f, const GridPoint& p, int which)
{
    const int s = which == 1 ? -1 : 1;
    const std::array<std::array<int, 2>, 3> pairs =
        which == 1 ? std::array<std::array<int, 2>, 3>{{{0, 1}, {0, 2}, {1, 2}}}
                   : std::array<std::array<int, 2>, 3>{{{0, 1}, {1, 2}, {0, 2}}};
    std::vector<std::vector<double>> cols;
    for (const auto& pr : pairs) {
        const GridPoint q = offset(offset(p, pr[0], s), pr[1], s);
        if (!inside(f.dims(), q)) {
            return std::nullopt;
        }
        cols.push_back(minus(position(f, q), position(f, p)));
    }
    return leibniz_det(columns(cols));
}

// Every determinant the digital diffeomorphism criterion uses at p.
inline std::vector<double> criterion_dets(const DisplacementField& f, const GridPoint& p)
{
    std::vector<double> out;
    for (unsigned k = 0; k < (1u << f.rank()); ++k) {
        if (auto d = corner_det(f, p, k)) {
            out.push_back(*d);
        }
    }
    if (f.rank() == 3) {
        for (int which : {1, 2}) {
            if (auto d = star_det(f, p, which)) {
                out.push_back(*d);
            }
        }
    }
    return out;
}

inline std::vector<GridPoint> all_points(const GridDims& d)
{
    std::vector<GridPoint> pts;
    for (std::size_t i = 0; i < d.num_points(); ++i) {
        pts.push_back(d.point_at(i));
    }
    return pts;
}

// -1/2 * sum_p sum_i min(det_i, 0) / (2 or 6), accumulated in long double.
inline double point_form_measure(const DisplacementField& f, const diffeo::VoxelMask* mask = nullptr)
{
    const long double denom = f.rank() == 2 ? 2.0L : 6.0L;
    long double total = 0.0L;
    for (const auto& p : all_points(f.dims())) {
        if (mask && !mask->at(p)) {
            continue;
        }
        for (double d : criterion_dets(f, p)) {
            total += std::min(d, 0.0) / denom;
        }
    }
    return static_cast<double>(-0.5L * total);
}

// ---- explicit cell splits ----------------------------------------------------

using Simplex = std::vector<std::array<int, 3>>; // cell-local vertex offsets

inline std::vector<Simplex> split_2d(bool scheme_a)
{
    if (scheme_a) {
        return {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{1, 1, 0}, {0, 1, 0}, {1, 0, 0}}};
    }
    return {{{1, 0, 0}, {0, 0, 0}, {1, 1, 0}}, {{0, 1, 0}, {1, 1, 0}, {0, 0, 0}}};
}

inline std::vector<Simplex> split_3d(bool scheme_a)
{
    // Corner tetrahedra at the cube corners of one parity plus the central
    // tetrahedron spanned by the other four corners.
    std::vector<Simplex> out;
    std::vector<std::array<int, 3>> central;
    for (int c = 0; c < 8; ++c) {
        const std::array<int, 3> v{c & 1, (c >> 1) & 1, (c >> 2) & 1};
        const bool even = (v[0] + v[1] + v[2]) % 2 == 0;
        if (even == scheme_a) {
            Simplex s{v};
            for (int a = 0; a < 3; ++a) {
                auto w = v;
                w[static_cast<std::size_t>(a)] = 1 - w[static_cast<std::size_t>(a)];
                s.push_back(w);
            }
            out.push_back(s);
        } else {
            central.push_back(v);
        }
    }
    out.push_back(central);
    return out;
}

// Signed measure (area or volume, with the 1/2 or 1/6 factor) of a simplex
// given by rank + 1 points.
inline double simplex_measure(const std::vector<std::vector<double>>& pts)
{
    std::vector<std::vector<double>> cols;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        cols.push_back(minus(pts[k], pts[0]));
    }
    const double fact = pts.size() == 3 ? 2.0 : 6.0;
    return leibniz_det(columns(cols)) / fact;
}

// Folded measure of one cell: simplices whose transformed orientation
// differs from the untransformed one contribute their |volume|.
inline double cell_fold(const DisplacementField& f, const GridPoint& cell, bool scheme_a)
{
    const int r = f.rank();
    double total = 0.0;
    for (const auto& s : r == 2 ? split_2d(scheme_a) : split_3d(scheme_a)) {
        std::vector<std::vector<double>> before;
        std::vector<std::vector<double>> after;
        for (const auto& v : s) {
            GridPoint p = cell;
            std::vector<double> rest;
            for (int a = 0; a < r; ++a) {
                p[a] += v[static_cast<std::size_t>(a)];
                rest.push_back(static_cast<double>(p[a]));
            }
            before.push_back(rest);
            after.push_back(position(f, p));
        }
        const double sign = simplex_measure(before) > 0 ? 1.0 : -1.0;
        total += std::max(0.0, -sign * simplex_measure(after));
    }
    return total;
}

inline double scheme_average(const DisplacementField& f)
{
    const auto& d = f.dims();
    long double a = 0.0L;
    long double b = 0.0L;
    for (const auto& p : all_points(d)) {
        bool complete = true;
        for (int ax = 0; ax < d.rank(); ++ax) {
            complete = complete && p[ax] + 1 < d.extent(ax);
        }
        if (complete) {
            a += cell_fold(f, p, true);
            b += cell_fold(f, p, false);
        }
    }
    return static_cast<double>((a + b) / 2.0L);
}

// ---- rotations -----------------------------------------------------------------

// Quarter turn in the plane (i, j): lattice point x_i -> n_j - 1 - x_j,
// x_j -> x_i, and vectors (v_i, v_j) -> (-v_j, v_i).
inline DisplacementField rotate90(const DisplacementField& f, int i, int j)
{
    const auto& d = f.dims();
    const int r = d.rank();
    std::vector<Index> ext(d.extents().begin(), d.extents().end());
    std::swap(ext[static_cast<std::size_t>(i)], ext[static_cast<std::size_t>(j)]);
    std::vector<double> sp(d.spacings().begin(), d.spacings().end());
    std::swap(sp[static_cast<std::size_t>(i)], sp[static_cast<std::size_t>(j)]);
    GridDims nd(ext, sp);
    std::vector<double> data(f.data().size());
    for (std::size_t k = 0; k < d.num_points(); ++k) {
        const GridPoint p = d.point_at(k);
        GridPoint q = p;
        q[i] = d.extent(j) - 1 - p[j];
        q[j] = p[i];
        const std::size_t m = nd.linear_index(q);
        for (int a = 0; a < r; ++a) {
            data[m * static_cast<std::size_t>(r) + static_cast<std::size_t>(a)] = f.component(k, a);
        }
        data[m * static_cast<std::size_t>(r) + static_cast<std::size_t>(i)] = -f.component(k, j);
        data[m * static_cast<std::size_t>(r) + static_cast<std::size_t>(j)] = f.component(k, i);
    }
    return DisplacementField(nd, std::move(data));
}

// ---- random inputs ---------------------------------------------------------------

inline DisplacementField random_field(const std::vector<Index>& extents, std::uint64_t seed, double amplitude,
                                      int radius = 1)
{
    return diffeo::synth::generate({GridDims(extents), diffeo::synth::RandomSmooth{seed, amplitude, radius}});
}

// Unsmoothed uniform noise in [-amplitude, amplitude).
inline DisplacementField noise_field(const std::vector<Index>& extents, std::uint64_t seed, double amplitude)
{
    GridDims d(extents);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    std::vector<double> data(d.num_points() * static_cast<std::size_t>(d.rank()));
    for (double& v : data) {
        v = u(rng);
    }
    return DisplacementField(d, std::move(data));
}

using P2 = std::array<double, 2>;

inline double orient(const P2& a, const P2& b, const P2& c)
{
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

inline bool segments_cross(const P2& a, const P2& b, const P2& c, const P2& d)
{
    const double d1 = orient(c, d, a);
    const double d2 = orient(c, d, b);
    const double d3 = orient(a, b, c);
    const double d4 = orient(a, b, d);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

// Closed polygon q1 q2 q3 q4 without self-intersection (either orientation).
inline bool simple_quad(const std::array<P2, 4>& q)
{
    return !segments_cross(q[0], q[1], q[2], q[3]) && !segments_cross(q[1], q[2], q[3], q[0]);
}

// Twice the signed area; equals 4x the central determinant of the neighbors.
inline double quad_orientation(const std::array<P2, 4>& q)
{
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& a = q[k];
        const auto& b = q[(k + 1) % 4];
        s += a[0] * b[1] - a[1] * b[0];
    }
    return s;
}

// Grid sampling of the common interior of the four open half-planes. A hit
// proves non-emptiness; a miss proves nothing.
inline bool sampled_kernel_hit(const std::array<P2, 4>& q, int steps = 60)
{
    double lo[2] = {q[0][0], q[0][1]};
    double hi[2] = {q[0][0], q[0][1]};
    for (const auto& v : q) {
        for (int a = 0; a < 2; ++a) {
            lo[a] = std::min(lo[a], v[static_cast<std::size_t>(a)]);
            hi[a] = std::max(hi[a], v[static_cast<std::size_t>(a)]);
        }
    }
    for (int i = 0; i <= steps; ++i) {
        for (int j = 0; j <= steps; ++j) {
            const P2 p{lo[0] + (hi[0] - lo[0]) * i / steps, lo[1] + (hi[1] - lo[1]) * j / steps};
            bool ok = true;
            for (std::size_t k = 0; k < 4 && ok; ++k) {
                ok = orient(q[k], q[(k + 1) % 4], p) > 0;
            }
            if (ok) {
                return true;
            }
        }
    }
    return false;
}

} // namespace oracle
