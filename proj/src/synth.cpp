#include "diffeo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffeo/errors.hpp"

namespace diffeo::synth {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void invalid(const std::string& what)
{
    throw Error(ErrorCode::invalid_spec, what);
}

// Fills u = (A - I) p for a row-major rank x rank matrix A.
std::vector<double> linear_displacement(const GridDims& dims, const std::vector<double>& a)
{
    const int rank = dims.rank();
    const auto r = static_cast<std::size_t>(rank);
    std::vector<double> data(dims.num_points() * r);
    for (std::size_t i = 0; i < dims.num_points(); ++i) {
        const GridPoint p = dims.point_at(i);
        for (std::size_t row = 0; row < r; ++row) {
            double t = 0.0;
            for (std::size_t col = 0; col < r; ++col) {
                t += a[row * r + col] * static_cast<double>(p[static_cast<int>(col)]);
            }
            data[i * r + row] = t - static_cast<double>(p[static_cast<int>(row)]);
        }
    }
    return data;
}

// Mean over [i - radius, i + radius] clipped to the line, along one axis,
// for a single-component volume.
void box_smooth_axis(std::vector<double>& v, const GridDims& dims, int axis, int radius)
{
    const Index n = dims.extent(axis);
    const std::size_t stride = axis == 0 ? 1
                             : axis == 1 ? static_cast<std::size_t>(dims.extent(0))
                                         : static_cast<std::size_t>(dims.extent(0) * dims.extent(1));
    std::vector<double> line(static_cast<std::size_t>(n));
    std::vector<double> prefix(static_cast<std::size_t>(n) + 1);
    for (std::size_t start = 0; start < v.size(); ++start) {
        // Visit each line once, from its first element.
        if ((start / stride) % static_cast<std::size_t>(n) != 0) {
            continue;
        }
        for (Index k = 0; k < n; ++k) {
            line[static_cast<std::size_t>(k)] = v[start + static_cast<std::size_t>(k) * stride];
        }
        prefix[0] = 0.0;
        for (Index k = 0; k < n; ++k) {
            prefix[static_cast<std::size_t>(k) + 1] = prefix[static_cast<std::size_t>(k)] + line[static_cast<std::size_t>(k)];
        }
        for (Index k = 0; k < n; ++k) {
            const Index lo = std::max<Index>(0, k - radius);
            const Index hi = std::min<Index>(n - 1, k + radius);
            const double sum = prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)];
            v[start + static_cast<std::size_t>(k) * stride] = sum / static_cast<double>(hi - lo + 1);
        }
    }
}

std::vector<double> random_smooth(const GridDims& dims, const RandomSmooth& spec)
{
    const auto rank = static_cast<std::size_t>(dims.rank());
    const std::size_t n = dims.num_points();
    std::vector<double> data(n * rank);
    std::vector<double> comp(n);
    double peak = 0.0;
    for (std::size_t c = 0; c < rank; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            comp[i] = unit_symmetric(splitmix64(spec.seed, i * rank + c));
        }
        if (spec.radius > 0) {
            for (int a = 0; a < dims.rank(); ++a) {
                box_smooth_axis(comp, dims, a, spec.radius);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            data[i * rank + c] = comp[i];
            peak = std::max(peak, std::abs(comp[i]));
        }
    }
    if (peak > 0.0) {
        const double factor = spec.amplitude / peak;
        for (double& v : data) {
            v = std::clamp(v * factor, -spec.amplitude, spec.amplitude);
        }
    }
    return data;
}

} // namespace

DisplacementField generate(const SynthSpec& spec)
{
    const GridDims& dims = spec.dims;
    const int rank = dims.rank();
    const auto r = static_cast<std::size_t>(rank);

    std::vector<double> data = std::visit(
        overloaded{
            [&](const Identity&) { return std::vector<double>(dims.num_points() * r, 0.0); },
            [&](const UniformScale& s) {
                if (!std::isfinite(s.s) || s.s <= 0.0) {
                    invalid("uniform scale factor must be positive");
                }
                std::vector<double> a(r * r, 0.0);
                for (std::size_t k = 0; k < r; ++k) {
                    a[k * r + k] = s.s;
                }
                return linear_displacement(dims, a);
            },
            [&](const Linear& l) {
                if (l.matrix.size() != r * r) {
                    invalid("linear map needs rank*rank matrix entries");
                }
                if (!std::all_of(l.matrix.begin(), l.matrix.end(), [](double v) { return std::isfinite(v); })) {
                    invalid("linear map entries must be finite");
                }
                return linear_displacement(dims, l.matrix);
            },
            [&](const Reflection& m) {
                if (m.axis < 0 || m.axis >= rank) {
                    invalid("reflection axis out of range");
                }
                std::vector<double> a(r * r, 0.0);
                for (std::size_t k = 0; k < r; ++k) {
                    a[k * r + k] = static_cast<int>(k) == m.axis ? -1.0 : 1.0;
                }
                return linear_displacement(dims, a);
            },
            [&](const SinglePoint& sp) {
                if (!dims.contains(sp.point)) {
                    invalid("single point lies outside the grid");
                }
                if (sp.displacement.size() != r) {
                    invalid("single point displacement needs one value per axis");
                }
                std::vector<double> d(dims.num_points() * r, 0.0);
                const std::size_t i = dims.linear_index(sp.point);
                std::copy(sp.displacement.begin(), sp.displacement.end(), d.begin() + static_cast<std::ptrdiff_t>(i * r));
                return d;
            },
            [&](const RandomSmooth& rs) {
                if (!std::isfinite(rs.amplitude) || rs.amplitude < 0.0) {
                    invalid("amplitude must be finite and non-negative");
                }
                if (rs.radius < 0) {
                    invalid("smoothing radius must be non-negative");
                }
                return random_smooth(dims, rs);
            },
        },
        spec.kind);

    return DisplacementField(dims, std::move(data));
}

} // namespace diffeo::synth
