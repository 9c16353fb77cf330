#pragma once

#include <stdexcept>
#include <string>

namespace spnf {

/// Base class for all library errors. Subclasses mirror the failure
/// categories surfaced through the public API; the CLI maps them onto
/// exit codes (validation vs numeric failure).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Validation errors (CLI exit code 1).
struct InvalidArgument : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct OutOfBounds : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NotNormalized : Error { using Error::Error; };
struct EmptyStack : Error { using Error::Error; };
struct BadDimensions : Error { using Error::Error; };
struct MissingGradient : Error { using Error::Error; };
struct TooSmall : Error { using Error::Error; };

// File and dataset errors (CLI exit code 1).
struct IoError : Error { using Error::Error; };
struct BadMagic : IoError { using IoError::IoError; };
struct TruncatedFile : IoError { using IoError::IoError; };
struct DimMismatch : IoError { using IoError::IoError; };
struct MissingFile : IoError { using IoError::IoError; };
struct BadPartition : IoError { using IoError::IoError; };

// Numeric failures (CLI exit code 2).
struct NumericError : Error { using Error::Error; };
struct DegenerateIlluminant : NumericError { using NumericError::NumericError; };
struct SingularSystem : NumericError { using NumericError::NumericError; };
struct NanLoss : NumericError { using NumericError::NumericError; };

}  // namespace spnf
