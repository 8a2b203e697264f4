#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace diffeo {

enum class ErrorCode {
    invalid_dims,
    length_mismatch,
    non_finite_value,
    out_of_bounds,
    boundary_undefined,
    rank_mismatch,
    invalid_spec,
    invalid_argument,
    unsupported_datatype,
    shape_mismatch,
    corrupt_header,
    io_failure,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported through this type. `index()` carries the
// offending linear element index for non_finite_value, npos otherwise.
class Error : public std::runtime_error {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    Error(ErrorCode code, const std::string& message, std::size_t index = npos);

    ErrorCode code() const noexcept { return code_; }
    std::size_t index() const noexcept { return index_; }

private:
    ErrorCode code_;
    std::size_t index_;
};

} // namespace diffeo
