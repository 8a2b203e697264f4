#include "diffeo/errors.hpp"

namespace diffeo {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_dims: return "InvalidDims";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::non_finite_value: return "NonFiniteValue";
    case ErrorCode::out_of_bounds: return "OutOfBounds";
    case ErrorCode::boundary_undefined: return "BoundaryUndefined";
    case ErrorCode::rank_mismatch: return "RankMismatch";
    case ErrorCode::invalid_spec: return "InvalidSpec";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::unsupported_datatype: return "UnsupportedDatatype";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::corrupt_header: return "CorruptHeader";
    case ErrorCode::io_failure: return "IoFailure";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::size_t index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      index_(index)
{
}

} // namespace diffeo
