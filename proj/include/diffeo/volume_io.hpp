#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "diffeo/grid.hpp"
#include "diffeo/jacobian.hpp"
#include "diffeo/metrics.hpp"

namespace diffeo::io {

enum class FileFormat { auto_detect, nifti, npy };
enum class DisplacementUnits { voxel, physical };

// NIfTI-1 datatype codes understood by the readers.
enum class NiftiType : std::int16_t {
    uint8 = 2,
    int16 = 4,
    int32 = 8,
    float32 = 16,
    float64 = 64,
    int8 = 256,
    uint16 = 512,
    uint32 = 768,
};

inline constexpr std::int16_t nifti_intent_vector = 1007;

/// The header fields this library reads and writes. Everything else in the
/// 348-byte header is ignored on read and zeroed on write.
struct NiftiHeader {
    std::array<std::int16_t, 8> dim{};
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    std::int16_t intent_code = 0;
    std::array<float, 8> pixdim{};
    float vox_offset = 352.0f;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    std::endian byte_order = std::endian::little;
};

// Single-file NIfTI-1 (.nii or gzip-compressed .nii.gz; detected by content).
NiftiHeader read_nifti_header(const std::filesystem::path& path);

struct FieldReadOptions {
    FileFormat format = FileFormat::auto_detect;
    // physical: components are divided by the header spacing on load.
    DisplacementUnits units = DisplacementUnits::voxel;
};

/// Reads a displacement field.
///
/// NIfTI: float32/float64 with the vector components along dim[5] (intent
/// 1007 style, dim = [5, nx, ny, nz, 1, rank]) or along dim[4]. A 2-component
/// field with nz == 1 is 2D. Spacing comes from pixdim; scl_slope/scl_inter
/// are applied when the slope is non-zero.
///
/// NPY v1/v2: float32/float64 array of shape (nx, ny[, nz], rank) indexed
/// [x][y][z][component], C or Fortran order. Spacing is 1.
///
/// Throws unsupported_datatype, shape_mismatch, corrupt_header, io_failure.
DisplacementField read_field(const std::filesystem::path& path, const FieldReadOptions& options = {});

// Non-zero voxels are inside. Accepts the integer and float NIfTI types above
// and NPY bool/integer/float arrays of shape (nx, ny[, nz]).
VoxelMask read_mask(const std::filesystem::path& path, FileFormat format = FileFormat::auto_detect);

// Format from the extension (.npy, otherwise NIfTI; .gz compresses). Fields
// are written as float64. byte_order applies to NIfTI only.
void write_field(const DisplacementField& field, const std::filesystem::path& path,
                 std::endian byte_order = std::endian::little);

void write_mask(const VoxelMask& mask, const std::filesystem::path& path);

// float32 NIfTI-1 scalar volume; undefined points are written as NaN.
void write_map(const ScalarMap& map, const std::filesystem::path& path);
// NaN voxels come back undefined.
ScalarMap read_map(const std::filesystem::path& path);

enum class ReportFormat { json, csv };

// Schema version of the JSON and CSV report layouts.
inline constexpr int report_schema_version = 1;

std::string report_to_json(const DiffeoReport& report, std::string_view label = {});
DiffeoReport report_from_json(std::string_view text);

std::string csv_header();
std::string report_to_csv_row(const DiffeoReport& report, std::string_view label = {});

// CSV with append = true adds a row to an existing file with the same header.
void write_report(const DiffeoReport& report, const std::filesystem::path& path, ReportFormat format,
                  std::string_view label = {}, bool append = false);
DiffeoReport read_report_json(const std::filesystem::path& path);

// Writes bytes to a temporary sibling and renames it over `path`, so a
// failure never leaves a partial file. gzip-compresses when `gzip` is set.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes, bool gzip = false);

} // namespace diffeo::io
