#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddc {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values (bad ranges, empty sets, unknown modes).
struct ParameterError : Error {
    explicit ParameterError(const std::string& msg) : Error(msg) {}
};

// Mismatched grid shapes between operands.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Singularities and solver failures (division by zero noise level,
// conjugate-gradient non-convergence).
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Degenerate inputs that make an operation undefined (zero variance,
// constant regressor).
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& msg) : Error(msg) {}
};

// Non-finite loss encountered during an optimization loop.
struct DivergenceError : Error {
    DivergenceError(const std::string& msg, std::size_t iteration)
        : Error(msg + " (iteration " + std::to_string(iteration) + ")"),
          iteration(iteration) {}
    std::size_t iteration;
};

// Malformed file contents; carries the byte offset where parsing failed.
struct FormatError : Error {
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

// Values not representable by the requested file encoding.
struct RangeError : Error {
    explicit RangeError(const std::string& msg) : Error(msg) {}
};

}  // namespace ddc
