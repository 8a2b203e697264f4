#include "diffeo/jacobian.hpp"

#include <cmath>
#include <limits>

#include "diffeo/detail/parallel.hpp"
#include "diffeo/detail/point_kernel.hpp"
#include "diffeo/errors.hpp"

namespace diffeo {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

void require_in_bounds(const DisplacementField& field, const GridPoint& p)
{
    if (!field.dims().contains(p)) {
        throw Error(ErrorCode::out_of_bounds, "grid point outside the field");
    }
}

} // namespace

SignPattern::SignPattern(int rank, unsigned forward_bits) : rank_(rank), bits_(forward_bits)
{
    if (rank != 2 && rank != 3) {
        throw Error(ErrorCode::invalid_argument, "sign pattern rank must be 2 or 3");
    }
    if (forward_bits >= (1u << rank)) {
        throw Error(ErrorCode::invalid_argument, "sign pattern bits exceed rank");
    }
}

SignPattern::SignPattern(std::initializer_list<Difference> per_axis)
    : rank_(static_cast<int>(per_axis.size())), bits_(0)
{
    if (rank_ != 2 && rank_ != 3) {
        throw Error(ErrorCode::invalid_argument, "sign pattern rank must be 2 or 3");
    }
    int a = 0;
    for (Difference d : per_axis) {
        if (d == Difference::forward) {
            bits_ |= 1u << a;
        }
        ++a;
    }
}

SignPattern SignPattern::parse(std::string_view text)
{
    if (text.starts_with("corner")) {
        text.remove_prefix(6);
    }
    if (text.starts_with(":")) {
        text.remove_prefix(1);
    }
    int rank = 0;
    unsigned bits = 0;
    for (char c : text) {
        if (c == '+' || c == '-') {
            if (rank == 3) {
                throw Error(ErrorCode::invalid_argument, "too many signs in pattern");
            }
            if (c == '+') {
                bits |= 1u << rank;
            }
            ++rank;
        } else if (c != '(' && c != ')' && c != ',' && c != ' ') {
            throw Error(ErrorCode::invalid_argument, "unexpected character in sign pattern: " + std::string(text));
        }
    }
    return SignPattern(rank, bits);
}

std::vector<SignPattern> SignPattern::all(int rank)
{
    std::vector<SignPattern> out;
    for (unsigned k = 0; k < (1u << rank); ++k) {
        out.emplace_back(rank, k);
    }
    return out;
}

int SignPattern::orientation() const noexcept
{
    int s = 1;
    for (int a = 0; a < rank_; ++a) {
        s *= sign(a);
    }
    return s;
}

std::string SignPattern::to_string() const
{
    std::string s = "(";
    for (int a = 0; a < rank_; ++a) {
        if (a > 0) {
            s += ',';
        }
        s += forward(a) ? '+' : '-';
    }
    return s + ")";
}

std::string to_string(const JacobianVariant& variant)
{
    if (const auto* c = std::get_if<Corner>(&variant)) {
        return "corner" + c->pattern.to_string();
    }
    if (std::holds_alternative<Central>(variant)) {
        return "central";
    }
    return std::get<Star>(variant).kind == StarKind::first ? "star1" : "star2";
}

JacobianVariant parse_variant(std::string_view text)
{
    if (text == "central") {
        return Central{};
    }
    if (text == "star1") {
        return Star{StarKind::first};
    }
    if (text == "star2") {
        return Star{StarKind::second};
    }
    return Corner{SignPattern::parse(text)};
}

int variant_order(const JacobianVariant& variant) noexcept
{
    if (const auto* c = std::get_if<Corner>(&variant)) {
        return static_cast<int>(c->pattern.forward_bits());
    }
    if (const auto* s = std::get_if<Star>(&variant)) {
        return s->kind == StarKind::first ? 8 : 9;
    }
    return 10;
}

ScalarMap::ScalarMap(GridDims dims)
    : dims_(std::move(dims)),
      values_(dims_.num_points(), nan_value),
      defined_(dims_.num_points(), 0)
{
}

std::optional<double> ScalarMap::at(const GridPoint& p) const
{
    if (!dims_.contains(p)) {
        throw Error(ErrorCode::out_of_bounds, "grid point outside the map");
    }
    const std::size_t i = dims_.linear_index(p);
    if (!is_defined(i)) {
        return std::nullopt;
    }
    return values_[i];
}

void ScalarMap::unset(std::size_t i) noexcept
{
    values_[i] = nan_value;
    defined_[i] = 0;
}

std::size_t ScalarMap::defined_count() const noexcept
{
    std::size_t n = 0;
    for (auto d : defined_) {
        n += d != 0;
    }
    return n;
}

double corner_det(const DisplacementField& field, const GridPoint& p, const SignPattern& pattern)
{
    require_in_bounds(field, p);
    if (pattern.rank() != field.rank()) {
        throw Error(ErrorCode::rank_mismatch, "sign pattern rank differs from field rank");
    }
    const auto dets = detail::evaluate_point(field, p);
    if (!dets.corner_is_defined(pattern.forward_bits())) {
        throw Error(ErrorCode::boundary_undefined, "corner" + pattern.to_string() + " needs an out-of-bounds neighbor");
    }
    return dets.corner[pattern.forward_bits()];
}

double central_det(const DisplacementField& field, const GridPoint& p)
{
    require_in_bounds(field, p);
    const auto dets = detail::evaluate_point(field, p);
    if (!dets.central_defined) {
        throw Error(ErrorCode::boundary_undefined, "central difference needs all face neighbors");
    }
    return dets.central;
}

double star_det(const DisplacementField& field, const GridPoint& p, StarKind which)
{
    if (field.rank() != 3) {
        throw Error(ErrorCode::rank_mismatch, "star determinants exist only for 3D fields");
    }
    require_in_bounds(field, p);
    const auto dets = detail::evaluate_point(field, p);
    if (which == StarKind::first) {
        if (!dets.star1_defined) {
            throw Error(ErrorCode::boundary_undefined, "star1 needs the (-,-) diagonal neighbors");
        }
        return dets.star1;
    }
    if (!dets.star2_defined) {
        throw Error(ErrorCode::boundary_undefined, "star2 needs the (+,+) diagonal neighbors");
    }
    return dets.star2;
}

double determinant(const DisplacementField& field, const GridPoint& p, const JacobianVariant& variant)
{
    if (const auto* c = std::get_if<Corner>(&variant)) {
        return corner_det(field, p, c->pattern);
    }
    if (std::holds_alternative<Central>(variant)) {
        return central_det(field, p);
    }
    return star_det(field, p, std::get<Star>(variant).kind);
}

ScalarMap jacobian_map(const DisplacementField& field, const JacobianVariant& variant, unsigned threads)
{
    if (const auto* c = std::get_if<Corner>(&variant); c && c->pattern.rank() != field.rank()) {
        throw Error(ErrorCode::rank_mismatch, "sign pattern rank differs from field rank");
    }
    if (std::holds_alternative<Star>(variant) && field.rank() != 3) {
        throw Error(ErrorCode::rank_mismatch, "star determinants exist only for 3D fields");
    }

    const GridDims& dims = field.dims();
    ScalarMap out(dims);
    const detail::FieldView view(field);
    const detail::RowChunking chunks(dims);
    const auto nx = dims.extent(0);
    const auto ny = static_cast<std::size_t>(dims.extent(1));

    auto pick = [&](const detail::PointDeterminants& d) -> std::optional<double> {
        if (const auto* c = std::get_if<Corner>(&variant)) {
            const unsigned k = c->pattern.forward_bits();
            return d.corner_is_defined(k) ? std::optional(d.corner[k]) : std::nullopt;
        }
        if (std::holds_alternative<Central>(variant)) {
            return d.central_defined ? std::optional(d.central) : std::nullopt;
        }
        if (std::get<Star>(variant).kind == StarKind::first) {
            return d.star1_defined ? std::optional(d.star1) : std::nullopt;
        }
        return d.star2_defined ? std::optional(d.star2) : std::nullopt;
    };

    detail::for_each_chunk(chunks.count(), threads, [&](std::size_t chunk) {
        for (std::size_t row = chunks.first_row(chunk); row < chunks.end_row(chunk); ++row) {
            const auto y = static_cast<Index>(row % ny);
            const auto z = static_cast<Index>(row / ny);
            for (Index x = 0; x < nx; ++x) {
                const auto d = field.rank() == 2 ? detail::Kernel<2>::evaluate(view, x, y)
                                                 : detail::Kernel<3>::evaluate(view, x, y, z);
                if (const auto v = pick(d)) {
                    out.set(row * static_cast<std::size_t>(nx) + static_cast<std::size_t>(x), *v);
                }
            }
        }
    });
    return out;
}

} // namespace diffeo
