#include "diffeo/volume_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <regex>
#include <span>
#include <sstream>
#include <unistd.h>

#include <json.hpp>
#include <zlib.h>

#include "diffeo/detail/format.hpp"
#include "diffeo/errors.hpp"

namespace diffeo::io {

namespace fs = std::filesystem;
using Bytes = std::vector<std::uint8_t>;

namespace {

constexpr std::size_t nifti_header_size = 348;
constexpr std::size_t nifti_data_offset = 352;
constexpr char npy_magic[] = "\x93NUMPY";

[[noreturn]] void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

// ---- raw bytes ------------------------------------------------------------

struct GzCloser {
    void operator()(gzFile f) const noexcept { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

// gzread passes uncompressed files through unchanged.
Bytes read_all(const fs::path& path)
{
    GzHandle f(gzopen(path.c_str(), "rb"));
    if (!f) {
        fail(ErrorCode::io_failure, "cannot open " + path.string());
    }
    Bytes out;
    std::array<std::uint8_t, 1 << 16> chunk{};
    int n = 0;
    while ((n = gzread(f.get(), chunk.data(), static_cast<unsigned>(chunk.size()))) > 0) {
        out.insert(out.end(), chunk.begin(), chunk.begin() + n);
    }
    if (n < 0) {
        fail(ErrorCode::io_failure, "read error in " + path.string());
    }
    return out;
}

bool has_gz_extension(const fs::path& path)
{
    return path.extension() == ".gz";
}

bool is_npy_path(const fs::path& path)
{
    fs::path p = path;
    if (has_gz_extension(p)) {
        p = p.stem();
    }
    return p.extension() == ".npy";
}

template <class T>
T load(const std::uint8_t* p, std::endian order) noexcept
{
    std::array<std::uint8_t, sizeof(T)> b{};
    std::memcpy(b.data(), p, sizeof(T));
    if (order != std::endian::native) {
        std::reverse(b.begin(), b.end());
    }
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

template <class T>
void store(std::string& out, std::size_t offset, T v, std::endian order) noexcept
{
    std::array<char, sizeof(T)> b{};
    std::memcpy(b.data(), &v, sizeof(T));
    if (order != std::endian::native) {
        std::reverse(b.begin(), b.end());
    }
    std::memcpy(out.data() + offset, b.data(), sizeof(T));
}

// Element types shared by the NIfTI and NPY decoders.
enum class Scalar { u8, i8, u16, i16, u32, i32, u64, i64, f32, f64, boolean };

std::size_t scalar_size(Scalar s)
{
    switch (s) {
    case Scalar::u8:
    case Scalar::i8:
    case Scalar::boolean: return 1;
    case Scalar::u16:
    case Scalar::i16: return 2;
    case Scalar::u32:
    case Scalar::i32:
    case Scalar::f32: return 4;
    case Scalar::u64:
    case Scalar::i64:
    case Scalar::f64: return 8;
    }
    return 0;
}

bool is_float(Scalar s)
{
    return s == Scalar::f32 || s == Scalar::f64;
}

double load_scalar(const std::uint8_t* p, Scalar s, std::endian order) noexcept
{
    switch (s) {
    case Scalar::u8: return *p;
    case Scalar::boolean: return *p != 0 ? 1.0 : 0.0;
    case Scalar::i8: return static_cast<std::int8_t>(*p);
    case Scalar::u16: return load<std::uint16_t>(p, order);
    case Scalar::i16: return load<std::int16_t>(p, order);
    case Scalar::u32: return load<std::uint32_t>(p, order);
    case Scalar::i32: return load<std::int32_t>(p, order);
    case Scalar::u64: return static_cast<double>(load<std::uint64_t>(p, order));
    case Scalar::i64: return static_cast<double>(load<std::int64_t>(p, order));
    case Scalar::f32: return load<float>(p, order);
    case Scalar::f64: return load<double>(p, order);
    }
    return 0.0;
}

// A decoded N-d array of doubles in the file's own element order.
struct RawArray {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    Scalar type = Scalar::f64;
    bool fortran_order = true; // first index fastest
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    // Flat offset of a multi-index in `values`.
    std::size_t offset(std::span<const std::size_t> index) const noexcept
    {
        std::size_t off = 0;
        if (fortran_order) {
            for (std::size_t k = shape.size(); k-- > 0;) {
                off = off * shape[k] + index[k];
            }
        } else {
            for (std::size_t k = 0; k < shape.size(); ++k) {
                off = off * shape[k] + index[k];
            }
        }
        return off;
    }
};

std::vector<double> decode(std::span<const std::uint8_t> data, std::size_t count, Scalar type, std::endian order)
{
    const std::size_t size = scalar_size(type);
    if (data.size() < count * size) {
        fail(ErrorCode::corrupt_header, "data section shorter than the declared shape");
    }
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = load_scalar(data.data() + i * size, type, order);
    }
    return out;
}

// ---- NIfTI ------------------------------------------------------------------

NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < nifti_header_size) {
        fail(ErrorCode::corrupt_header, "file too short for a NIfTI-1 header");
    }
    NiftiHeader h;
    if (load<std::int32_t>(bytes.data(), std::endian::little) == 348) {
        h.byte_order = std::endian::little;
    } else if (load<std::int32_t>(bytes.data(), std::endian::big) == 348) {
        h.byte_order = std::endian::big;
    } else {
        fail(ErrorCode::corrupt_header, "sizeof_hdr is not 348");
    }
    const char* magic = reinterpret_cast<const char*>(bytes.data() + 344);
    if (std::memcmp(magic, "ni1", 4) == 0) {
        fail(ErrorCode::corrupt_header, "two-file (.hdr/.img) NIfTI is not supported");
    }
    if (std::memcmp(magic, "n+1", 4) != 0) {
        fail(ErrorCode::corrupt_header, "missing n+1 magic");
    }
    const auto o = h.byte_order;
    for (std::size_t i = 0; i < 8; ++i) {
        h.dim[i] = load<std::int16_t>(bytes.data() + 40 + 2 * i, o);
        h.pixdim[i] = load<float>(bytes.data() + 76 + 4 * i, o);
    }
    h.intent_code = load<std::int16_t>(bytes.data() + 68, o);
    h.datatype = load<std::int16_t>(bytes.data() + 70, o);
    h.bitpix = load<std::int16_t>(bytes.data() + 72, o);
    h.vox_offset = load<float>(bytes.data() + 108, o);
    h.scl_slope = load<float>(bytes.data() + 112, o);
    h.scl_inter = load<float>(bytes.data() + 116, o);

    if (h.dim[0] < 1 || h.dim[0] > 7) {
        fail(ErrorCode::corrupt_header, "dim[0] out of range");
    }
    for (int i = 1; i <= h.dim[0]; ++i) {
        if (h.dim[static_cast<std::size_t>(i)] < 1) {
            fail(ErrorCode::corrupt_header, "non-positive dimension");
        }
    }
    if (!std::isfinite(h.vox_offset) || h.vox_offset < static_cast<float>(nifti_header_size)) {
        fail(ErrorCode::corrupt_header, "vox_offset before end of header");
    }
    return h;
}

Scalar nifti_scalar(std::int16_t datatype)
{
    switch (static_cast<NiftiType>(datatype)) {
    case NiftiType::uint8: return Scalar::u8;
    case NiftiType::int8: return Scalar::i8;
    case NiftiType::uint16: return Scalar::u16;
    case NiftiType::int16: return Scalar::i16;
    case NiftiType::uint32: return Scalar::u32;
    case NiftiType::int32: return Scalar::i32;
    case NiftiType::float32: return Scalar::f32;
    case NiftiType::float64: return Scalar::f64;
    }
    fail(ErrorCode::unsupported_datatype, "NIfTI datatype " + std::to_string(datatype));
}

std::size_t nifti_extent(const NiftiHeader& h, int i)
{
    return i <= h.dim[0] ? static_cast<std::size_t>(h.dim[static_cast<std::size_t>(i)]) : 1;
}

// Shape (nx, ny, nz, nt, nu, ...) in file order, x fastest.
RawArray decode_nifti(std::span<const std::uint8_t> bytes)
{
    const NiftiHeader h = parse_nifti_header(bytes);
    RawArray a;
    a.type = nifti_scalar(h.datatype);
    a.fortran_order = true;
    std::size_t count = 1;
    for (int i = 1; i <= 7; ++i) {
        a.shape.push_back(nifti_extent(h, i));
        count *= a.shape.back();
    }
    const auto offset = static_cast<std::size_t>(h.vox_offset);
    if (offset > bytes.size()) {
        fail(ErrorCode::corrupt_header, "vox_offset past end of file");
    }
    a.values = decode(bytes.subspan(offset), count, a.type, h.byte_order);
    if (h.scl_slope != 0.0f && std::isfinite(h.scl_slope)) {
        const double slope = h.scl_slope;
        const double inter = std::isfinite(h.scl_inter) ? h.scl_inter : 0.0;
        if (slope != 1.0 || inter != 0.0) {
            for (double& v : a.values) {
                v = v * slope + inter;
            }
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const double s = std::abs(static_cast<double>(h.pixdim[k + 1]));
        a.spacing[k] = std::isfinite(s) && s > 0.0 ? s : 1.0;
    }
    return a;
}

std::string nifti_bytes(const std::array<std::int16_t, 8>& dim, NiftiType type, std::int16_t intent,
                        const GridDims& dims, std::endian order, std::size_t payload_size)
{
    std::string out(nifti_data_offset + payload_size, '\0');
    std::int16_t bitpix = 0;
    switch (type) {
    case NiftiType::uint8:
    case NiftiType::int8: bitpix = 8; break;
    case NiftiType::int16:
    case NiftiType::uint16: bitpix = 16; break;
    case NiftiType::int32:
    case NiftiType::uint32:
    case NiftiType::float32: bitpix = 32; break;
    case NiftiType::float64: bitpix = 64; break;
    }
    store<std::int32_t>(out, 0, 348, order);
    for (std::size_t i = 0; i < 8; ++i) {
        store<std::int16_t>(out, 40 + 2 * i, dim[i], order);
    }
    store<std::int16_t>(out, 68, intent, order);
    store<std::int16_t>(out, 70, static_cast<std::int16_t>(type), order);
    store<std::int16_t>(out, 72, bitpix, order);
    std::array<float, 8> pixdim{1.0f, 1.0f, 1.0f, 1.0f, 1.0f, 1.0f, 1.0f, 1.0f};
    for (int a = 0; a < dims.rank(); ++a) {
        pixdim[static_cast<std::size_t>(a) + 1] = static_cast<float>(dims.spacing(a));
    }
    for (std::size_t i = 0; i < 8; ++i) {
        store<float>(out, 76 + 4 * i, pixdim[i], order);
    }
    store<float>(out, 108, static_cast<float>(nifti_data_offset), order);
    store<float>(out, 112, 1.0f, order);
    store<float>(out, 116, 0.0f, order);
    out[123] = 2; // xyzt_units: mm
    store<std::int16_t>(out, 254, 1, order); // sform_code: scanner
    for (std::size_t row = 0; row < 3; ++row) {
        const float s = row < static_cast<std::size_t>(dims.rank()) ? pixdim[row + 1] : 1.0f;
        store<float>(out, 280 + 16 * row + 4 * row, s, order);
    }
    std::memcpy(out.data() + 344, "n+1", 4);
    return out;
}

// ---- NPY --------------------------------------------------------------------

Scalar npy_scalar(const std::string& descr, std::endian& order)
{
    if (descr.size() < 3) {
        fail(ErrorCode::corrupt_header, "bad NPY descr '" + descr + "'");
    }
    switch (descr[0]) {
    case '<': order = std::endian::little; break;
    case '>': order = std::endian::big; break;
    case '|':
    case '=': order = std::endian::native; break;
    default: fail(ErrorCode::corrupt_header, "bad NPY byte order in '" + descr + "'");
    }
    const std::string t = descr.substr(1);
    if (t == "f8") return Scalar::f64;
    if (t == "f4") return Scalar::f32;
    if (t == "b1") return Scalar::boolean;
    if (t == "u1") return Scalar::u8;
    if (t == "i1") return Scalar::i8;
    if (t == "u2") return Scalar::u16;
    if (t == "i2") return Scalar::i16;
    if (t == "u4") return Scalar::u32;
    if (t == "i4") return Scalar::i32;
    if (t == "u8") return Scalar::u64;
    if (t == "i8") return Scalar::i64;
    fail(ErrorCode::unsupported_datatype, "NPY dtype '" + descr + "'");
}

RawArray decode_npy(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 10 || std::memcmp(bytes.data(), npy_magic, 6) != 0) {
        fail(ErrorCode::corrupt_header, "missing NPY magic");
    }
    const int major = bytes[6];
    std::size_t header_len = 0;
    std::size_t header_start = 0;
    if (major == 1) {
        header_len = load<std::uint16_t>(bytes.data() + 8, std::endian::little);
        header_start = 10;
    } else if (major == 2 || major == 3) {
        if (bytes.size() < 12) {
            fail(ErrorCode::corrupt_header, "truncated NPY header");
        }
        header_len = load<std::uint32_t>(bytes.data() + 8, std::endian::little);
        header_start = 12;
    } else {
        fail(ErrorCode::corrupt_header, "unsupported NPY version " + std::to_string(major));
    }
    if (header_start + header_len > bytes.size()) {
        fail(ErrorCode::corrupt_header, "truncated NPY header");
    }
    const std::string header(reinterpret_cast<const char*>(bytes.data() + header_start), header_len);

    std::smatch m;
    static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
    static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
    static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    if (!std::regex_search(header, m, descr_re)) {
        fail(ErrorCode::corrupt_header, "NPY header lacks descr");
    }
    RawArray a;
    std::endian order = std::endian::little;
    a.type = npy_scalar(m[1].str(), order);
    if (!std::regex_search(header, m, order_re)) {
        fail(ErrorCode::corrupt_header, "NPY header lacks fortran_order");
    }
    a.fortran_order = m[1].str() == "True";
    if (!std::regex_search(header, m, shape_re)) {
        fail(ErrorCode::corrupt_header, "NPY header lacks shape");
    }
    std::stringstream shape_text(m[1].str());
    std::string item;
    std::size_t count = 1;
    while (std::getline(shape_text, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) {
            continue;
        }
        a.shape.push_back(static_cast<std::size_t>(std::stoull(item.substr(first))));
        count *= a.shape.back();
    }
    a.values = decode(bytes.subspan(header_start + header_len), count, a.type, order);
    return a;
}

std::string npy_bytes(const std::vector<std::size_t>& shape, const std::string& descr, std::size_t payload_size)
{
    std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        dict += std::to_string(shape[k]);
        dict += (shape.size() == 1 || k + 1 < shape.size()) ? ", " : "";
    }
    dict += "), }";
    // Pad so magic + version + length + header is a multiple of 64 bytes.
    const std::size_t unpadded = 10 + dict.size() + 1;
    dict.append((64 - unpadded % 64) % 64, ' ');
    dict += '\n';

    std::string out;
    out.reserve(10 + dict.size() + payload_size);
    out.append(npy_magic, 6);
    out += '\x01';
    out += '\x00';
    std::string len(2, '\0');
    store<std::uint16_t>(len, 0, static_cast<std::uint16_t>(dict.size()), std::endian::little);
    out += len;
    out += dict;
    return out;
}

RawArray decode_any(const fs::path& path, FileFormat format)
{
    const Bytes bytes = read_all(path);
    const bool npy = format == FileFormat::npy ||
                     (format == FileFormat::auto_detect && bytes.size() >= 6 && std::memcmp(bytes.data(), npy_magic, 6) == 0);
    return npy ? decode_npy(bytes) : decode_nifti(bytes);
}

// Trailing unit dimensions of a NIfTI shape are dropped.
std::vector<std::size_t> squeeze_trailing(std::vector<std::size_t> shape)
{
    while (shape.size() > 1 && shape.back() == 1) {
        shape.pop_back();
    }
    return shape;
}

} // namespace

NiftiHeader read_nifti_header(const fs::path& path)
{
    return parse_nifti_header(read_all(path));
}

DisplacementField read_field(const fs::path& path, const FieldReadOptions& options)
{
    RawArray a = decode_any(path, options.format);
    if (!is_float(a.type)) {
        fail(ErrorCode::unsupported_datatype, "displacement fields must be float32 or float64");
    }

    std::size_t rank = 0;
    std::array<std::size_t, 3> ext{1, 1, 1};
    // Multi-index builder: spatial (x, y, z) + component -> array index.
    std::vector<std::size_t> index(a.shape.size(), 0);
    std::size_t component_axis = 0;

    if (a.fortran_order && a.shape.size() == 7) {
        // NIfTI: (nx, ny, nz, nt, nu, 1, 1)
        const auto& s = a.shape;
        if (s[5] != 1 || s[6] != 1) {
            fail(ErrorCode::shape_mismatch, "dim[6] and dim[7] must be 1 for a displacement field");
        }
        if (s[4] > 1 && s[3] > 1) {
            fail(ErrorCode::shape_mismatch, "time series of vector volumes are not displacement fields");
        }
        component_axis = s[4] > 1 ? 4 : 3;
        rank = s[component_axis];
        if (rank != 2 && rank != 3) {
            fail(ErrorCode::shape_mismatch, "vector dimension must be 2 or 3, got " + std::to_string(rank));
        }
        if (rank == 2 && s[2] != 1) {
            fail(ErrorCode::shape_mismatch, "2-component field must have nz == 1");
        }
        ext = {s[0], s[1], s[2]};
    } else {
        // NPY: (nx, ny[, nz], rank)
        const std::size_t nd = a.shape.size();
        if (nd != 3 && nd != 4) {
            fail(ErrorCode::shape_mismatch, "NPY field must have shape (nx, ny[, nz], rank)");
        }
        rank = a.shape.back();
        if (rank != nd - 1) {
            fail(ErrorCode::shape_mismatch, "last NPY axis must equal the spatial rank");
        }
        component_axis = nd - 1;
        for (std::size_t k = 0; k < rank; ++k) {
            ext[k] = a.shape[k];
        }
        a.spacing = {1.0, 1.0, 1.0};
    }

    std::vector<Index> extents;
    std::vector<double> spacing;
    for (std::size_t k = 0; k < rank; ++k) {
        extents.push_back(static_cast<Index>(ext[k]));
        spacing.push_back(a.spacing[k]);
    }
    GridDims dims(extents, spacing);

    std::vector<double> data(dims.num_points() * rank);
    for (std::size_t z = 0; z < ext[2]; ++z) {
        for (std::size_t y = 0; y < ext[1]; ++y) {
            for (std::size_t x = 0; x < ext[0]; ++x) {
                index[0] = x;
                index[1] = y;
                if (rank == 3 || a.shape.size() == 7) {
                    index[2] = z;
                }
                const std::size_t point = x + ext[0] * (y + ext[1] * z);
                for (std::size_t c = 0; c < rank; ++c) {
                    index[component_axis] = c;
                    double v = a.values[a.offset(index)];
                    if (options.units == DisplacementUnits::physical) {
                        v /= dims.spacing(static_cast<int>(c));
                    }
                    data[point * rank + c] = v;
                }
            }
        }
    }
    return DisplacementField(std::move(dims), std::move(data));
}

namespace {

// Scalar volume (mask or map) with its grid.
struct ScalarVolume {
    GridDims dims;
    std::vector<double> values; // x fastest
};

ScalarVolume read_scalar_volume(const fs::path& path, FileFormat format)
{
    RawArray a = decode_any(path, format);
    std::vector<std::size_t> shape = a.fortran_order && a.shape.size() == 7 ? squeeze_trailing(a.shape) : a.shape;
    if (a.fortran_order && a.shape.size() == 7 && shape.size() < 2) {
        shape.resize(2, 1);
    }
    if (shape.size() != 2 && shape.size() != 3) {
        fail(ErrorCode::shape_mismatch, "scalar volume must be 2D or 3D");
    }
    std::vector<Index> extents;
    std::vector<double> spacing;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        extents.push_back(static_cast<Index>(shape[k]));
        spacing.push_back(a.spacing[k]);
    }
    GridDims dims(extents, spacing);
    std::vector<double> values(dims.num_points());
    std::vector<std::size_t> index(a.shape.size(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const GridPoint p = dims.point_at(i);
        for (std::size_t k = 0; k < shape.size(); ++k) {
            index[k] = static_cast<std::size_t>(p[static_cast<int>(k)]);
        }
        values[i] = a.values[a.offset(index)];
    }
    return {std::move(dims), std::move(values)};
}

} // namespace

VoxelMask read_mask(const fs::path& path, FileFormat format)
{
    auto vol = read_scalar_volume(path, format);
    std::vector<std::uint8_t> data(vol.values.size());
    std::transform(vol.values.begin(), vol.values.end(), data.begin(),
                   [](double v) { return static_cast<std::uint8_t>(v != 0.0 && !std::isnan(v)); });
    return VoxelMask(std::move(vol.dims), std::move(data));
}

ScalarMap read_map(const fs::path& path)
{
    auto vol = read_scalar_volume(path, FileFormat::auto_detect);
    ScalarMap map(vol.dims);
    for (std::size_t i = 0; i < vol.values.size(); ++i) {
        if (!std::isnan(vol.values[i])) {
            map.set(i, vol.values[i]);
        }
    }
    return map;
}

void write_field(const DisplacementField& field, const fs::path& path, std::endian byte_order)
{
    const GridDims& dims = field.dims();
    const auto rank = static_cast<std::size_t>(field.rank());
    const std::size_t n = dims.num_points();
    const auto data = field.data();

    if (is_npy_path(path)) {
        std::vector<std::size_t> shape;
        for (int a = 0; a < field.rank(); ++a) {
            shape.push_back(static_cast<std::size_t>(dims.extent(a)));
        }
        shape.push_back(rank);
        std::string out = npy_bytes(shape, "<f8", n * rank * 8);
        const std::size_t base = out.size();
        out.resize(base + n * rank * 8);
        // C order: component fastest, then z, y, x.
        std::size_t k = 0;
        for (Index x = 0; x < dims.extent(0); ++x) {
            for (Index y = 0; y < dims.extent(1); ++y) {
                for (Index z = 0; z < dims.extent(2); ++z) {
                    const std::size_t point = dims.linear_index(GridPoint{{x, y, z}});
                    for (std::size_t c = 0; c < rank; ++c) {
                        store<double>(out, base + 8 * k++, data[point * rank + c], std::endian::little);
                    }
                }
            }
        }
        write_file_atomic(path, out, has_gz_extension(path));
        return;
    }

    const std::array<std::int16_t, 8> dim{5,
                                          static_cast<std::int16_t>(dims.extent(0)),
                                          static_cast<std::int16_t>(dims.extent(1)),
                                          static_cast<std::int16_t>(dims.extent(2)),
                                          1,
                                          static_cast<std::int16_t>(rank),
                                          1,
                                          1};
    std::string out = nifti_bytes(dim, NiftiType::float64, nifti_intent_vector, dims, byte_order, n * rank * 8);
    for (std::size_t c = 0; c < rank; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            store<double>(out, nifti_data_offset + 8 * (c * n + i), data[i * rank + c], byte_order);
        }
    }
    write_file_atomic(path, out, has_gz_extension(path));
}

void write_mask(const VoxelMask& mask, const fs::path& path)
{
    const GridDims& dims = mask.dims();
    const auto data = mask.data();
    if (is_npy_path(path)) {
        std::vector<std::size_t> shape;
        for (int a = 0; a < dims.rank(); ++a) {
            shape.push_back(static_cast<std::size_t>(dims.extent(a)));
        }
        std::string out = npy_bytes(shape, "|u1", data.size());
        for (Index x = 0; x < dims.extent(0); ++x) {
            for (Index y = 0; y < dims.extent(1); ++y) {
                for (Index z = 0; z < dims.extent(2); ++z) {
                    out += static_cast<char>(data[dims.linear_index(GridPoint{{x, y, z}})] != 0);
                }
            }
        }
        write_file_atomic(path, out, has_gz_extension(path));
        return;
    }
    std::array<std::int16_t, 8> dim{static_cast<std::int16_t>(dims.rank()), 1, 1, 1, 1, 1, 1, 1};
    for (int a = 0; a < dims.rank(); ++a) {
        dim[static_cast<std::size_t>(a) + 1] = static_cast<std::int16_t>(dims.extent(a));
    }
    std::string out = nifti_bytes(dim, NiftiType::uint8, 0, dims, std::endian::little, data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[nifti_data_offset + i] = static_cast<char>(data[i] != 0);
    }
    write_file_atomic(path, out, has_gz_extension(path));
}

void write_map(const ScalarMap& map, const fs::path& path)
{
    const GridDims& dims = map.dims();
    std::array<std::int16_t, 8> dim{static_cast<std::int16_t>(dims.rank()), 1, 1, 1, 1, 1, 1, 1};
    for (int a = 0; a < dims.rank(); ++a) {
        dim[static_cast<std::size_t>(a) + 1] = static_cast<std::int16_t>(dims.extent(a));
    }
    std::string out = nifti_bytes(dim, NiftiType::float32, 0, dims, std::endian::little, map.size() * 4);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const float v = map.is_defined(i) ? static_cast<float>(map.value(i)) : std::numeric_limits<float>::quiet_NaN();
        store<float>(out, nifti_data_offset + 4 * i, v, std::endian::little);
    }
    write_file_atomic(path, out, has_gz_extension(path));
}

// ---- reports ----------------------------------------------------------------

std::string report_to_json(const DiffeoReport& r, std::string_view label)
{
    nlohmann::ordered_json j;
    j["schema_version"] = report_schema_version;
    j["label"] = std::string(label);
    j["rank"] = r.rank;
    j["extents"] = r.extents;
    j["spacing"] = r.spacing;
    j["mask_applied"] = r.mask_applied;
    j["points_considered"] = r.points_considered;
    j["partially_defined_points"] = r.partially_defined_points;
    j["central_nonpositive_count"] = r.central_nonpositive_count;
    j["central_nonpositive_percent"] = r.central_nonpositive_percent;
    j["any_nonpositive_count"] = r.any_nonpositive_count;
    j["any_nonpositive_percent"] = r.any_nonpositive_percent;
    j["measure_kind"] = to_string(r.measure_kind);
    j["measure"] = r.measure;
    j["measure_physical"] = r.measure_physical;
    j["measure_percent"] = r.measure_percent;
    j["digital_diffeomorphism"] = r.digital_diffeomorphism;
    if (r.first_violation) {
        const auto& v = *r.first_violation;
        std::vector<Index> point(v.point.idx.begin(), v.point.idx.begin() + r.rank);
        j["first_violation"] = {{"point", point}, {"variant", to_string(v.variant)}, {"value", v.value}};
    } else {
        j["first_violation"] = nullptr;
    }
    return j.dump(2) + "\n";
}

DiffeoReport report_from_json(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::corrupt_header, std::string("report JSON: ") + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != report_schema_version) {
            fail(ErrorCode::corrupt_header, "unsupported report schema version");
        }
        DiffeoReport r;
        r.rank = j.at("rank").get<int>();
        r.extents = j.at("extents").get<std::vector<Index>>();
        r.spacing = j.at("spacing").get<std::vector<double>>();
        r.mask_applied = j.at("mask_applied").get<bool>();
        r.points_considered = j.at("points_considered").get<std::size_t>();
        r.partially_defined_points = j.at("partially_defined_points").get<std::size_t>();
        r.central_nonpositive_count = j.at("central_nonpositive_count").get<std::size_t>();
        r.central_nonpositive_percent = j.at("central_nonpositive_percent").get<double>();
        r.any_nonpositive_count = j.at("any_nonpositive_count").get<std::size_t>();
        r.any_nonpositive_percent = j.at("any_nonpositive_percent").get<double>();
        const auto kind = j.at("measure_kind").get<std::string>();
        if (kind != "nda" && kind != "ndv") {
            fail(ErrorCode::corrupt_header, "unknown measure_kind " + kind);
        }
        r.measure_kind = kind == "nda" ? MeasureKind::nda : MeasureKind::ndv;
        r.measure = j.at("measure").get<double>();
        r.measure_physical = j.at("measure_physical").get<double>();
        r.measure_percent = j.at("measure_percent").get<double>();
        r.digital_diffeomorphism = j.at("digital_diffeomorphism").get<bool>();
        const auto& fv = j.at("first_violation");
        if (!fv.is_null()) {
            GridPoint p;
            const auto coords = fv.at("point").get<std::vector<Index>>();
            for (std::size_t k = 0; k < coords.size() && k < 3; ++k) {
                p[static_cast<int>(k)] = coords[k];
            }
            r.first_violation = Violation{p, parse_variant(fv.at("variant").get<std::string>()), fv.at("value").get<double>()};
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::corrupt_header, std::string("report JSON: ") + e.what());
    }
}

namespace {

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string csv_header()
{
    return "label,rank,points_considered,partially_defined_points,central_nonpositive_count,"
           "central_nonpositive_percent,any_nonpositive_count,any_nonpositive_percent,measure_kind,measure,"
           "measure_physical,measure_percent,digital_diffeomorphism,first_violation_point,"
           "first_violation_variant,first_violation_value\n";
}

std::string report_to_csv_row(const DiffeoReport& r, std::string_view label)
{
    using detail::format_double;
    std::string row = csv_field(label);
    auto add = [&row](const std::string& s) { row += ',' + s; };
    add(std::to_string(r.rank));
    add(std::to_string(r.points_considered));
    add(std::to_string(r.partially_defined_points));
    add(std::to_string(r.central_nonpositive_count));
    add(format_double(r.central_nonpositive_percent));
    add(std::to_string(r.any_nonpositive_count));
    add(format_double(r.any_nonpositive_percent));
    add(to_string(r.measure_kind));
    add(format_double(r.measure));
    add(format_double(r.measure_physical));
    add(format_double(r.measure_percent));
    add(r.digital_diffeomorphism ? "true" : "false");
    if (r.first_violation) {
        std::string point;
        for (int a = 0; a < r.rank; ++a) {
            point += (a ? " " : "") + std::to_string(r.first_violation->point[a]);
        }
        add(point);
        add(csv_field(to_string(r.first_violation->variant)));
        add(format_double(r.first_violation->value));
    } else {
        add("");
        add("");
        add("");
    }
    return row + "\n";
}

void write_report(const DiffeoReport& report, const fs::path& path, ReportFormat format, std::string_view label,
                  bool append)
{
    if (format == ReportFormat::json) {
        write_file_atomic(path, report_to_json(report, label));
        return;
    }
    std::string content;
    if (append && fs::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        if (!content.starts_with(csv_header())) {
            fail(ErrorCode::io_failure, "existing CSV has a different header: " + path.string());
        }
    } else {
        content = csv_header();
    }
    content += report_to_csv_row(report, label);
    write_file_atomic(path, content);
}

DiffeoReport read_report_json(const fs::path& path)
{
    const Bytes bytes = read_all(path);
    return report_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_file_atomic(const fs::path& path, std::string_view bytes, bool gzip)
{
    static std::atomic<unsigned> counter{0};
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(dir)) {
        fail(ErrorCode::io_failure, "output directory does not exist: " + dir.string());
    }
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                                std::to_string(counter++));
    bool ok = false;
    if (gzip) {
        GzHandle f(gzopen(tmp.c_str(), "wb6"));
        if (f) {
            ok = true;
            std::size_t done = 0;
            while (ok && done < bytes.size()) {
                const auto len = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
                ok = gzwrite(f.get(), bytes.data() + done, len) == static_cast<int>(len);
                done += len;
            }
            ok = gzclose(f.release()) == Z_OK && ok;
        }
    } else {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        ok = static_cast<bool>(out);
    }
    std::error_code ec;
    if (ok) {
        fs::rename(tmp, path, ec);
        ok = !ec;
    }
    if (!ok) {
        fs::remove(tmp, ec);
        fail(ErrorCode::io_failure, "cannot write " + path.string());
    }
}

} // namespace diffeo::io
