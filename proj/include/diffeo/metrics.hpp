#pragma once

#include <cstddef>
#include <optional>

#include "diffeo/grid.hpp"
#include "diffeo/jacobian.hpp"

namespace diffeo {

struct Violation {
    GridPoint point;
    JacobianVariant variant;
    double value;
};

enum class MeasureKind { nda, ndv };

const char* to_string(MeasureKind kind) noexcept;

/// Aggregate regularity statistics of one field.
///
/// Counts and measure include a point's whole contribution iff the mask is
/// true there. Percentages are relative to points_considered (the masked
/// voxel count, or every grid point without a mask) and are 0 when nothing
/// is considered.
struct DiffeoReport {
    int rank = 0;
    std::vector<Index> extents;
    std::vector<double> spacing;
    bool mask_applied = false;

    std::size_t points_considered = 0;
    // Considered points where at least one variant lacks its neighbors.
    std::size_t partially_defined_points = 0;

    std::size_t central_nonpositive_count = 0;
    std::size_t any_nonpositive_count = 0;
    double central_nonpositive_percent = 0.0;
    double any_nonpositive_percent = 0.0;

    MeasureKind measure_kind = MeasureKind::nda;
    double measure = 0.0;          // NDA or NDV in voxel units
    double measure_physical = 0.0; // scaled by the voxel area/volume
    double measure_percent = 0.0;

    // True iff every defined corner (and star, in 3D) determinant at the
    // considered points is strictly positive.
    bool digital_diffeomorphism = true;
    std::optional<Violation> first_violation;
};

struct AnalysisOptions {
    unsigned threads = 1; // 0: all hardware threads
};

struct Analysis {
    DiffeoReport report;
    // Each considered point's share of NDA/NDV; points outside the mask are
    // undefined. Sums to report.measure.
    ScalarMap severity;
};

// Single pass computing every statistic. Throws shape_mismatch if the mask
// grid differs from the field grid.
Analysis analyze(const DisplacementField& field, const VoxelMask* mask = nullptr, const AnalysisOptions& options = {});

struct Verdict {
    bool diffeomorphic;
    std::optional<Violation> first_violation;
};

// Lexicographically first (point, variant) with a determinant <= 0.
Verdict is_digital_diffeomorphism(const DisplacementField& field, const AnalysisOptions& options = {});

// rank 3 only (rank_mismatch otherwise).
Analysis ndv(const DisplacementField& field, const VoxelMask* mask = nullptr, const AnalysisOptions& options = {});
// rank 2 only (rank_mismatch otherwise).
Analysis nda(const DisplacementField& field, const VoxelMask* mask = nullptr, const AnalysisOptions& options = {});

std::size_t count_central_nonpositive(const DisplacementField& field, const VoxelMask* mask = nullptr);
std::size_t count_any_nonpositive(const DisplacementField& field, const VoxelMask* mask = nullptr);

} // namespace diffeo
