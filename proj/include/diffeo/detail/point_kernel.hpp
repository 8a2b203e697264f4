#pragma once

#include <array>
#include <cstddef>

#include "diffeo/grid.hpp"
#include "diffeo/vec.hpp"

namespace diffeo::detail {

// Every determinant the library evaluates at one grid point. Each value is
// meaningful only when its defined flag is set.
struct PointDeterminants {
    std::array<double, 8> corner{};
    unsigned corner_defined = 0; // bit k: pattern with forward_bits == k
    double central = 0.0;
    double star1 = 0.0;
    double star2 = 0.0;
    bool central_defined = false;
    bool star1_defined = false;
    bool star2_defined = false;

    bool corner_is_defined(unsigned bits) const noexcept { return (corner_defined >> bits) & 1u; }
};

// Raw view used by the hot loops: x-fastest storage, interleaved components.
struct FieldView {
    const double* u;
    std::array<Index, 3> extent;
    std::ptrdiff_t stride_y;
    std::ptrdiff_t stride_z;

    explicit FieldView(const DisplacementField& f)
        : u(f.data().data()),
          extent{f.dims().extent(0), f.dims().extent(1), f.dims().extent(2)},
          stride_y(static_cast<std::ptrdiff_t>(f.dims().extent(0))),
          stride_z(static_cast<std::ptrdiff_t>(f.dims().extent(0) * f.dims().extent(1)))
    {
    }
};

template <int Rank>
struct Kernel;

template <>
struct Kernel<2> {
    static Vec2 load(const double* u, std::ptrdiff_t i) noexcept { return {u[2 * i], u[2 * i + 1]}; }

    static PointDeterminants evaluate(const FieldView& f, Index x, Index y) noexcept
    {
        PointDeterminants out;
        const std::ptrdiff_t i = x + f.stride_y * y;
        const std::ptrdiff_t step[2] = {1, f.stride_y};
        const bool has_minus[2] = {x > 0, y > 0};
        const bool has_plus[2] = {x + 1 < f.extent[0], y + 1 < f.extent[1]};
        const Vec2 up = load(f.u, i);

        Vec2 fwd[2]{};
        Vec2 bwd[2]{};
        for (int a = 0; a < 2; ++a) {
            Vec2 e{0.0, 0.0};
            e[static_cast<std::size_t>(a)] = 1.0;
            if (has_plus[a]) {
                fwd[a] = e + (load(f.u, i + step[a]) - up);
            }
            if (has_minus[a]) {
                bwd[a] = e + (up - load(f.u, i - step[a]));
            }
        }

        for (unsigned k = 0; k < 4; ++k) {
            const bool fx = k & 1u;
            const bool fy = k & 2u;
            if ((fx ? has_plus[0] : has_minus[0]) && (fy ? has_plus[1] : has_minus[1])) {
                out.corner[k] = cross(fx ? fwd[0] : bwd[0], fy ? fwd[1] : bwd[1]);
                out.corner_defined |= 1u << k;
            }
        }

        if (has_minus[0] && has_minus[1] && has_plus[0] && has_plus[1]) {
            const Vec2 dx = load(f.u, i + 1) - load(f.u, i - 1);
            const Vec2 dy = load(f.u, i + f.stride_y) - load(f.u, i - f.stride_y);
            const Vec2 cx{1.0 + 0.5 * dx[0], 0.5 * dx[1]};
            const Vec2 cy{0.5 * dy[0], 1.0 + 0.5 * dy[1]};
            out.central = cross(cx, cy);
            out.central_defined = true;
        }
        return out;
    }
};

template <>
struct Kernel<3> {
    static Vec3 load(const double* u, std::ptrdiff_t i) noexcept { return {u[3 * i], u[3 * i + 1], u[3 * i + 2]}; }

    static PointDeterminants evaluate(const FieldView& f, Index x, Index y, Index z) noexcept
    {
        PointDeterminants out;
        const std::ptrdiff_t sy = f.stride_y;
        const std::ptrdiff_t sz = f.stride_z;
        const std::ptrdiff_t i = x + sy * y + sz * z;
        const std::ptrdiff_t step[3] = {1, sy, sz};
        const bool has_minus[3] = {x > 0, y > 0, z > 0};
        const bool has_plus[3] = {x + 1 < f.extent[0], y + 1 < f.extent[1], z + 1 < f.extent[2]};
        const Vec3 up = load(f.u, i);

        Vec3 fwd[3]{};
        Vec3 bwd[3]{};
        for (int a = 0; a < 3; ++a) {
            Vec3 e{0.0, 0.0, 0.0};
            e[static_cast<std::size_t>(a)] = 1.0;
            if (has_plus[a]) {
                fwd[a] = e + (load(f.u, i + step[a]) - up);
            }
            if (has_minus[a]) {
                bwd[a] = e + (up - load(f.u, i - step[a]));
            }
        }

        for (unsigned k = 0; k < 8; ++k) {
            bool ok = true;
            for (int a = 0; a < 3 && ok; ++a) {
                ok = ((k >> a) & 1u) ? has_plus[a] : has_minus[a];
            }
            if (!ok) {
                continue;
            }
            const Vec3& c0 = (k & 1u) ? fwd[0] : bwd[0];
            const Vec3& c1 = (k & 2u) ? fwd[1] : bwd[1];
            const Vec3& c2 = (k & 4u) ? fwd[2] : bwd[2];
            out.corner[k] = triple(c0, c1, c2);
            out.corner_defined |= 1u << k;
        }

        const bool all_minus = has_minus[0] && has_minus[1] && has_minus[2];
        const bool all_plus = has_plus[0] && has_plus[1] && has_plus[2];

        if (all_minus && all_plus) {
            Vec3 col[3];
            for (int a = 0; a < 3; ++a) {
                const Vec3 d = load(f.u, i + step[a]) - load(f.u, i - step[a]);
                col[a] = {0.5 * d[0], 0.5 * d[1], 0.5 * d[2]};
                col[a][static_cast<std::size_t>(a)] += 1.0;
            }
            out.central = triple(col[0], col[1], col[2]);
            out.central_defined = true;
        }

        if (all_minus) {
            const Vec3 a = Vec3{-1.0, -1.0, 0.0} + (load(f.u, i - 1 - sy) - up);
            const Vec3 b = Vec3{-1.0, 0.0, -1.0} + (load(f.u, i - 1 - sz) - up);
            const Vec3 c = Vec3{0.0, -1.0, -1.0} + (load(f.u, i - sy - sz) - up);
            out.star1 = triple(a, b, c);
            out.star1_defined = true;
        }
        if (all_plus) {
            const Vec3 a = Vec3{1.0, 1.0, 0.0} + (load(f.u, i + 1 + sy) - up);
            const Vec3 b = Vec3{0.0, 1.0, 1.0} + (load(f.u, i + sy + sz) - up);
            const Vec3 c = Vec3{1.0, 0.0, 1.0} + (load(f.u, i + 1 + sz) - up);
            out.star2 = triple(a, b, c);
            out.star2_defined = true;
        }
        return out;
    }
};

inline PointDeterminants evaluate_point(const DisplacementField& field, const GridPoint& p) noexcept
{
    const FieldView view(field);
    if (field.rank() == 2) {
        return Kernel<2>::evaluate(view, p[0], p[1]);
    }
    return Kernel<3>::evaluate(view, p[0], p[1], p[2]);
}

} // namespace diffeo::detail
