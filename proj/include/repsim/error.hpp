#pragma once

#include <stdexcept>
#include <string>

namespace repsim {

// Base for all library errors. CLI maps these to exit code 1,
// argument/usage problems to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data (bad magic, truncated file, dtype mismatch, ...).
struct FormatError : Error {
    using Error::Error;
};

struct TruncatedFileError : FormatError {
    using FormatError::FormatError;
};

struct DuplicateKeyError : FormatError {
    using FormatError::FormatError;
};

// Inputs that violate a metric precondition (NaN, N too small, k out of range).
struct InvalidInputError : Error {
    using Error::Error;
};

// Manifest references an id that does not exist in its store.
struct DanglingIdError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace repsim
