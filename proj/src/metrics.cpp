#include "diffeo/metrics.hpp"

#include <algorithm>
#include <vector>

#include "diffeo/detail/parallel.hpp"
#include "diffeo/detail/point_kernel.hpp"
#include "diffeo/errors.hpp"

namespace diffeo {

const char* to_string(MeasureKind kind) noexcept
{
    return kind == MeasureKind::nda ? "nda" : "ndv";
}

namespace {

struct ChunkResult {
    detail::CompensatedSum measure;
    std::size_t considered = 0;
    std::size_t partial = 0;
    std::size_t central_nonpositive = 0;
    std::size_t any_nonpositive = 0;
    std::optional<Violation> first;
};

bool earlier(const Violation& a, const Violation& b)
{
    if (a.point != b.point) {
        return a.point < b.point;
    }
    return variant_order(a.variant) < variant_order(b.variant);
}

void keep_first(std::optional<Violation>& current, const std::optional<Violation>& candidate)
{
    if (candidate && (!current || earlier(*candidate, *current))) {
        current = candidate;
    }
}

// First violating variant at one point, in variant_order.
std::optional<Violation> point_violation(const detail::PointDeterminants& d, int rank, const GridPoint& p)
{
    const unsigned corners = 1u << rank;
    for (unsigned k = 0; k < corners; ++k) {
        if (d.corner_is_defined(k) && d.corner[k] <= 0.0) {
            return Violation{p, Corner{SignPattern(rank, k)}, d.corner[k]};
        }
    }
    if (rank == 3) {
        if (d.star1_defined && d.star1 <= 0.0) {
            return Violation{p, Star{StarKind::first}, d.star1};
        }
        if (d.star2_defined && d.star2 <= 0.0) {
            return Violation{p, Star{StarKind::second}, d.star2};
        }
    }
    return std::nullopt;
}

template <int Rank>
void analyze_chunk(const detail::FieldView& view, const detail::RowChunking& chunks, std::size_t chunk,
                   const VoxelMask* mask, ScalarMap& severity, ChunkResult& result)
{
    constexpr unsigned corners = 1u << Rank;
    constexpr unsigned all_corners = (1u << corners) - 1u;
    // Point share of -1/2 * sum(min(det, 0) / (2 or 6)).
    constexpr double share = Rank == 2 ? -0.25 : -1.0 / 12.0;

    const Index nx = view.extent[0];
    const auto ny = static_cast<std::size_t>(view.extent[1]);

    for (std::size_t row = chunks.first_row(chunk); row < chunks.end_row(chunk); ++row) {
        const auto y = static_cast<Index>(row % ny);
        const auto z = static_cast<Index>(row / ny);
        for (Index x = 0; x < nx; ++x) {
            const std::size_t i = row * static_cast<std::size_t>(nx) + static_cast<std::size_t>(x);
            if (mask && !(*mask)[i]) {
                continue;
            }
            detail::PointDeterminants d;
            if constexpr (Rank == 2) {
                d = detail::Kernel<2>::evaluate(view, x, y);
            } else {
                d = detail::Kernel<3>::evaluate(view, x, y, z);
            }

            ++result.considered;
            double negative_sum = 0.0;
            bool any_nonpositive = false;
            for (unsigned k = 0; k < corners; ++k) {
                if (d.corner_is_defined(k)) {
                    negative_sum += std::min(d.corner[k], 0.0);
                    any_nonpositive |= d.corner[k] <= 0.0;
                }
            }
            bool fully_defined = d.corner_defined == all_corners && d.central_defined;
            if constexpr (Rank == 3) {
                if (d.star1_defined) {
                    negative_sum += std::min(d.star1, 0.0);
                    any_nonpositive |= d.star1 <= 0.0;
                }
                if (d.star2_defined) {
                    negative_sum += std::min(d.star2, 0.0);
                    any_nonpositive |= d.star2 <= 0.0;
                }
                fully_defined = fully_defined && d.star1_defined && d.star2_defined;
            }

            const double contribution = negative_sum == 0.0 ? 0.0 : share * negative_sum;
            severity.set(i, contribution);
            result.measure.add(contribution);

            if (!fully_defined) {
                ++result.partial;
            }
            if (d.central_defined && d.central <= 0.0) {
                ++result.central_nonpositive;
            }
            if (any_nonpositive) {
                ++result.any_nonpositive;
                keep_first(result.first, point_violation(d, Rank, GridPoint{{x, y, z}}));
            }
        }
    }
}

double percent(double value, std::size_t denominator)
{
    return denominator == 0 ? 0.0 : 100.0 * value / static_cast<double>(denominator);
}

} // namespace

Analysis analyze(const DisplacementField& field, const VoxelMask* mask, const AnalysisOptions& options)
{
    const GridDims& dims = field.dims();
    if (mask && !mask->dims().same_shape(dims)) {
        throw Error(ErrorCode::shape_mismatch, "mask grid does not match the field grid");
    }

    Analysis out{DiffeoReport{}, ScalarMap(dims)};
    const detail::FieldView view(field);
    const detail::RowChunking chunks(dims);
    std::vector<ChunkResult> partials(chunks.count());

    detail::for_each_chunk(chunks.count(), options.threads, [&](std::size_t c) {
        if (field.rank() == 2) {
            analyze_chunk<2>(view, chunks, c, mask, out.severity, partials[c]);
        } else {
            analyze_chunk<3>(view, chunks, c, mask, out.severity, partials[c]);
        }
    });

    // Ordered combine: identical result for every thread count.
    ChunkResult total;
    for (const auto& part : partials) {
        total.measure.add(part.measure);
        total.considered += part.considered;
        total.partial += part.partial;
        total.central_nonpositive += part.central_nonpositive;
        total.any_nonpositive += part.any_nonpositive;
        keep_first(total.first, part.first);
    }

    DiffeoReport& r = out.report;
    r.rank = dims.rank();
    r.extents.assign(dims.extents().begin(), dims.extents().end());
    r.spacing.assign(dims.spacings().begin(), dims.spacings().end());
    r.mask_applied = mask != nullptr;
    r.points_considered = total.considered;
    r.partially_defined_points = total.partial;
    r.central_nonpositive_count = total.central_nonpositive;
    r.any_nonpositive_count = total.any_nonpositive;
    r.central_nonpositive_percent = percent(static_cast<double>(total.central_nonpositive), total.considered);
    r.any_nonpositive_percent = percent(static_cast<double>(total.any_nonpositive), total.considered);
    r.measure_kind = dims.rank() == 2 ? MeasureKind::nda : MeasureKind::ndv;
    r.measure = total.measure.value();
    r.measure_physical = r.measure * dims.voxel_measure();
    r.measure_percent = percent(r.measure, total.considered);
    r.digital_diffeomorphism = total.any_nonpositive == 0;
    r.first_violation = total.first;
    return out;
}

Verdict is_digital_diffeomorphism(const DisplacementField& field, const AnalysisOptions& options)
{
    const auto result = analyze(field, nullptr, options);
    return Verdict{result.report.digital_diffeomorphism, result.report.first_violation};
}

Analysis ndv(const DisplacementField& field, const VoxelMask* mask, const AnalysisOptions& options)
{
    if (field.rank() != 3) {
        throw Error(ErrorCode::rank_mismatch, "NDV needs a 3D field");
    }
    return analyze(field, mask, options);
}

Analysis nda(const DisplacementField& field, const VoxelMask* mask, const AnalysisOptions& options)
{
    if (field.rank() != 2) {
        throw Error(ErrorCode::rank_mismatch, "NDA needs a 2D field");
    }
    return analyze(field, mask, options);
}

std::size_t count_central_nonpositive(const DisplacementField& field, const VoxelMask* mask)
{
    return analyze(field, mask).report.central_nonpositive_count;
}

std::size_t count_any_nonpositive(const DisplacementField& field, const VoxelMask* mask)
{
    return analyze(field, mask).report.any_nonpositive_count;
}

} // namespace diffeo
