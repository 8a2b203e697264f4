#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <vector>

#include "diffeo/vec.hpp"

namespace diffeo {

using Index = std::int64_t;

// Integer grid coordinate. Axes beyond the field rank are always 0, so a 2D
// point {x, y} and {x, y, 0} are the same point. Ordering is lexicographic
// on (x, y, z).
struct GridPoint {
    std::array<Index, 3> idx{};

    constexpr Index operator[](int axis) const { return idx[static_cast<std::size_t>(axis)]; }
    constexpr Index& operator[](int axis) { return idx[static_cast<std::size_t>(axis)]; }

    friend constexpr auto operator<=>(const GridPoint&, const GridPoint&) = default;
};

/// Shape and voxel size of a regular 2D or 3D grid.
///
/// Extents count grid points (not cells) and must be at least 2 per axis.
/// Spacing is the physical voxel edge length; it never enters determinant
/// values, only physical-unit reports.
class GridDims {
public:
    GridDims(std::vector<Index> extents, std::vector<double> spacing = {});

    int rank() const noexcept { return rank_; }
    Index extent(int axis) const noexcept { return extents_[static_cast<std::size_t>(axis)]; }
    double spacing(int axis) const noexcept { return spacing_[static_cast<std::size_t>(axis)]; }
    std::span<const Index> extents() const noexcept { return {extents_.data(), static_cast<std::size_t>(rank_)}; }
    std::span<const double> spacings() const noexcept { return {spacing_.data(), static_cast<std::size_t>(rank_)}; }

    std::size_t num_points() const noexcept;
    std::size_t num_cells() const noexcept;

    // Physical measure of one voxel (area in 2D, volume in 3D).
    double voxel_measure() const noexcept;

    bool contains(const GridPoint& p) const noexcept;

    // x fastest, then y, then z.
    std::size_t linear_index(const GridPoint& p) const noexcept
    {
        return static_cast<std::size_t>(p[0] + extents_[0] * (p[1] + extents_[1] * p[2]));
    }
    GridPoint point_at(std::size_t linear) const noexcept;

    bool same_shape(const GridDims& other) const noexcept
    {
        return rank_ == other.rank_ && extents_ == other.extents_;
    }

    friend bool operator==(const GridDims&, const GridDims&) = default;

private:
    int rank_;
    std::array<Index, 3> extents_{1, 1, 1};
    std::array<double, 3> spacing_{1.0, 1.0, 1.0};
};

/// Dense displacement field u on a grid; the transformation is T(p) = p + u(p).
///
/// Storage is one rank-length vector per grid point, points in linear order
/// (x fastest), components interleaved: data[i * rank + c]. Displacements are
/// in voxel units. Immutable after construction.
class DisplacementField {
public:
    // Throws length_mismatch or non_finite_value (with the element index).
    DisplacementField(GridDims dims, std::vector<double> data);

    const GridDims& dims() const noexcept { return dims_; }
    int rank() const noexcept { return dims_.rank(); }
    std::span<const double> data() const noexcept { return data_; }

    double component(std::size_t point, int axis) const noexcept
    {
        return data_[point * static_cast<std::size_t>(rank()) + static_cast<std::size_t>(axis)];
    }

    // T(p) = p + u(p) in index (voxel) coordinates. Throws out_of_bounds.
    Vec3 voxel_position(const GridPoint& p) const;

    // Copy of the flat storage; reproduces the construction input exactly.
    std::vector<double> flatten() const { return data_; }

private:
    GridDims dims_;
    std::vector<double> data_;
};

DisplacementField build_field(const GridDims& dims, std::span<const double> data);

// Physical position (p + u(p)) * spacing. Unused trailing axes are 0.
Vec3 transform_at(const DisplacementField& field, const GridPoint& p);

class VoxelMask {
public:
    VoxelMask(GridDims dims, std::vector<std::uint8_t> data);
    static VoxelMask all(const GridDims& dims);

    const GridDims& dims() const noexcept { return dims_; }
    bool operator[](std::size_t linear) const noexcept { return data_[linear] != 0; }
    bool at(const GridPoint& p) const;
    std::size_t count() const noexcept;
    std::span<const std::uint8_t> data() const noexcept { return data_; }

private:
    GridDims dims_;
    std::vector<std::uint8_t> data_;
};

/// Forward range over cell origins: every p with p and p + (1,..,1) in bounds.
class CellRange {
public:
    class iterator {
    public:
        using value_type = GridPoint;
        using difference_type = std::ptrdiff_t;
        using iterator_category = std::forward_iterator_tag;

        iterator() = default;
        iterator(const GridDims* dims, GridPoint p) : dims_(dims), p_(p) {}

        const GridPoint& operator*() const noexcept { return p_; }
        const GridPoint* operator->() const noexcept { return &p_; }
        iterator& operator++() noexcept;
        iterator operator++(int) noexcept
        {
            auto tmp = *this;
            ++*this;
            return tmp;
        }
        friend bool operator==(const iterator& a, const iterator& b) noexcept { return a.p_ == b.p_; }

    private:
        const GridDims* dims_ = nullptr;
        GridPoint p_{};
    };

    explicit CellRange(const GridDims& dims) : dims_(dims) {}

    iterator begin() const;
    iterator end() const;
    std::size_t size() const noexcept { return dims_.num_cells(); }

private:
    GridDims dims_;
};

CellRange iterate_cells(const GridDims& dims);

} // namespace diffeo
