#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <zlib.h>

namespace testfiles {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("diffeo-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    fs::path operator/(const std::string& name) const { return path_ / name; }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

template <class T>
void put(std::string& out, std::size_t off, T v, std::endian order)
{
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if (order != std::endian::native) {
        std::reverse(b, b + sizeof(T));
    }
    std::memcpy(out.data() + off, b, sizeof(T));
}

template <class T>
std::string encode(const std::vector<double>& values, std::endian order)
{
    std::string out(values.size() * sizeof(T), '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        put<T>(out, i * sizeof(T), static_cast<T>(values[i]), order);
    }
    return out;
}

struct NiftiSpec {
    std::vector<std::int16_t> dim; // dim[0..]
    std::int16_t datatype = 16;
    std::int16_t bitpix = 32;
    std::int16_t intent = 0;
    std::vector<float> pixdim{1, 1, 1, 1, 1, 1, 1, 1};
    float slope = 0.0f;
    float inter = 0.0f;
    float vox_offset = 352.0f;
    std::endian order = std::endian::little;
    const char* magic = "n+1";
};

// Minimal single-file NIfTI-1 writer; `payload` is already encoded.
inline std::string nifti(const NiftiSpec& s, const std::string& payload)
{
    const auto off = static_cast<std::size_t>(s.vox_offset);
    std::string out(off, '\0');
    put<std::int32_t>(out, 0, 348, s.order);
    for (std::size_t i = 0; i < s.dim.size(); ++i) {
        put<std::int16_t>(out, 40 + 2 * i, s.dim[i], s.order);
    }
    put<std::int16_t>(out, 68, s.intent, s.order);
    put<std::int16_t>(out, 70, s.datatype, s.order);
    put<std::int16_t>(out, 72, s.bitpix, s.order);
    for (std::size_t i = 0; i < s.pixdim.size(); ++i) {
        put<float>(out, 76 + 4 * i, s.pixdim[i], s.order);
    }
    put<float>(out, 108, s.vox_offset, s.order);
    put<float>(out, 112, s.slope, s.order);
    put<float>(out, 116, s.inter, s.order);
    std::memcpy(out.data() + 344, s.magic, 4);
    return out + payload;
}

// NPY version 1.0 file with the given header dictionary fields.
inline std::string npy(const std::string& descr, bool fortran, const std::vector<std::size_t>& shape,
                       const std::string& payload)
{
    std::string dict = "{'descr': '" + descr + "', 'fortran_order': " + (fortran ? "True" : "False") + ", 'shape': (";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        dict += std::to_string(shape[k]) + ",";
        if (k + 1 < shape.size()) {
            dict += " ";
        }
    }
    dict += "), }";
    while ((10 + dict.size() + 1) % 16 != 0) {
        dict += ' ';
    }
    dict += '\n';
    std::string out = "\x93NUMPY";
    out += '\x01';
    out += '\x00';
    out += static_cast<char>(dict.size() & 0xff);
    out += static_cast<char>(dict.size() >> 8);
    return out + dict + payload;
}

inline void write_bytes(const fs::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void write_gzip(const fs::path& p, const std::string& bytes)
{
    gzFile f = gzopen(p.c_str(), "wb");
    gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
}

inline std::string read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace testfiles
