#include "diffeo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffeo/errors.hpp"

namespace diffeo {

GridDims::GridDims(std::vector<Index> extents, std::vector<double> spacing)
    : rank_(static_cast<int>(extents.size()))
{
    if (rank_ != 2 && rank_ != 3) {
        throw Error(ErrorCode::invalid_dims, "grid rank must be 2 or 3, got " + std::to_string(rank_));
    }
    if (!spacing.empty() && spacing.size() != extents.size()) {
        throw Error(ErrorCode::invalid_dims, "spacing count does not match rank");
    }
    for (std::size_t a = 0; a < extents.size(); ++a) {
        if (extents[a] < 2) {
            throw Error(ErrorCode::invalid_dims,
                        "extent along axis " + std::to_string(a) + " must be at least 2");
        }
        extents_[a] = extents[a];
        if (!spacing.empty()) {
            if (!std::isfinite(spacing[a]) || spacing[a] <= 0.0) {
                throw Error(ErrorCode::invalid_dims, "spacing must be positive and finite");
            }
            spacing_[a] = spacing[a];
        }
    }
}

std::size_t GridDims::num_points() const noexcept
{
    return static_cast<std::size_t>(extents_[0] * extents_[1] * extents_[2]);
}

std::size_t GridDims::num_cells() const noexcept
{
    std::size_t n = 1;
    for (int a = 0; a < rank_; ++a) {
        n *= static_cast<std::size_t>(extent(a) - 1);
    }
    return n;
}

double GridDims::voxel_measure() const noexcept
{
    double m = 1.0;
    for (int a = 0; a < rank_; ++a) {
        m *= spacing(a);
    }
    return m;
}

bool GridDims::contains(const GridPoint& p) const noexcept
{
    for (int a = 0; a < 3; ++a) {
        if (p[a] < 0 || p[a] >= extents_[static_cast<std::size_t>(a)]) {
            return false;
        }
    }
    return true;
}

GridPoint GridDims::point_at(std::size_t linear) const noexcept
{
    const auto nx = static_cast<std::size_t>(extents_[0]);
    const auto ny = static_cast<std::size_t>(extents_[1]);
    GridPoint p;
    p[0] = static_cast<Index>(linear % nx);
    p[1] = static_cast<Index>((linear / nx) % ny);
    p[2] = static_cast<Index>(linear / (nx * ny));
    return p;
}

DisplacementField::DisplacementField(GridDims dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data))
{
    const std::size_t expected = dims_.num_points() * static_cast<std::size_t>(dims_.rank());
    if (data_.size() != expected) {
        throw Error(ErrorCode::length_mismatch,
                    "expected " + std::to_string(expected) + " values, got " + std::to_string(data_.size()));
    }
    const auto bad = std::find_if(data_.begin(), data_.end(), [](double v) { return !std::isfinite(v); });
    if (bad != data_.end()) {
        const auto i = static_cast<std::size_t>(bad - data_.begin());
        throw Error(ErrorCode::non_finite_value, "non-finite displacement at element " + std::to_string(i), i);
    }
}

Vec3 DisplacementField::voxel_position(const GridPoint& p) const
{
    if (!dims_.contains(p)) {
        throw Error(ErrorCode::out_of_bounds, "grid point outside the field");
    }
    const std::size_t i = dims_.linear_index(p);
    Vec3 t{0.0, 0.0, 0.0};
    for (int a = 0; a < rank(); ++a) {
        t[static_cast<std::size_t>(a)] = static_cast<double>(p[a]) + component(i, a);
    }
    return t;
}

DisplacementField build_field(const GridDims& dims, std::span<const double> data)
{
    return DisplacementField(dims, std::vector<double>(data.begin(), data.end()));
}

Vec3 transform_at(const DisplacementField& field, const GridPoint& p)
{
    Vec3 t = field.voxel_position(p);
    for (int a = 0; a < field.rank(); ++a) {
        t[static_cast<std::size_t>(a)] *= field.dims().spacing(a);
    }
    return t;
}

VoxelMask::VoxelMask(GridDims dims, std::vector<std::uint8_t> data)
    : dims_(std::move(dims)), data_(std::move(data))
{
    if (data_.size() != dims_.num_points()) {
        throw Error(ErrorCode::length_mismatch, "mask length does not match grid");
    }
}

VoxelMask VoxelMask::all(const GridDims& dims)
{
    return VoxelMask(dims, std::vector<std::uint8_t>(dims.num_points(), 1));
}

bool VoxelMask::at(const GridPoint& p) const
{
    if (!dims_.contains(p)) {
        throw Error(ErrorCode::out_of_bounds, "grid point outside the mask");
    }
    return data_[dims_.linear_index(p)] != 0;
}

std::size_t VoxelMask::count() const noexcept
{
    return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](auto v) { return v != 0; }));
}

CellRange::iterator& CellRange::iterator::operator++() noexcept
{
    for (int a = 0; a < dims_->rank(); ++a) {
        if (++p_[a] < dims_->extent(a) - 1) {
            return *this;
        }
        if (a + 1 < dims_->rank()) {
            p_[a] = 0;
        }
    }
    return *this;
}

CellRange::iterator CellRange::begin() const
{
    return iterator(&dims_, GridPoint{});
}

CellRange::iterator CellRange::end() const
{
    // operator++ past the final cell leaves lower axes at 0 and the last axis
    // one past its final cell origin.
    GridPoint p;
    const int last = dims_.rank() - 1;
    p[last] = dims_.extent(last) - 1;
    return iterator(&dims_, p);
}

CellRange iterate_cells(const GridDims& dims)
{
    return CellRange(dims);
}

} // namespace diffeo
