#pragma once

#include <stdexcept>

namespace palmcd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file structure (bad magic, header, payload size).
struct FormatError : Error { using Error::Error; };
// Structurally valid file carrying invalid values (NaN/Inf, negative SAR).
struct DataError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
// Degenerate input that makes an operation meaningless (all-zero image).
struct DegenerateError : Error { using Error::Error; };
// Incompatible shapes: grids vs images, resolution ratios, offsets.
struct GeometryError : Error { using Error::Error; };
struct ParamError : Error { using Error::Error; };
// Value outside a function's mathematical domain (e.g. log of nonpositive).
struct DomainError : Error { using Error::Error; };
struct InvariantError : Error { using Error::Error; };
struct InitError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct EvalError : Error { using Error::Error; };

}  // namespace palmcd
