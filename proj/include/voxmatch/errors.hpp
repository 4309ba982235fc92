#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace voxmatch {

/// Base class for every recoverable pipeline error. Anything else escaping
/// the library is an internal failure.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// nifti-io
struct IoError : Error { using Error::Error; };
struct NotNifti : Error { using Error::Error; };
struct UnsupportedDatatype : Error { using Error::Error; };
struct BadDims : Error { using Error::Error; };
struct TruncatedData : Error { using Error::Error; };

// pardata
struct InvalidPartitionCount : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

// metrics / matcher
struct DimMismatch : Error {
  explicit DimMismatch(const std::string& what, std::ptrdiff_t index = -1)
      : Error(what), component_index(index) {}
  std::ptrdiff_t component_index;  // offending component, -1 when not tied to one
};
struct ZeroVariance : Error { using Error::Error; };
struct MixedMetrics : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

// synth
struct InvalidSpec : Error { using Error::Error; };

}  // namespace voxmatch
