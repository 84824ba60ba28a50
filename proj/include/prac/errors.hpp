#pragma once

#include <stdexcept>
#include <string>

namespace prac {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid argument values: bad ranks, shape mismatches, out-of-range knobs.
struct ParameterError : Error {
    using Error::Error;
};

/// Non-finite or otherwise unusable numeric payloads.
struct DataError : Error {
    using Error::Error;
};

/// Numerically degenerate input (e.g. rank-deficient matrix fed to QR).
struct DegenerateInputError : Error {
    using Error::Error;
};

/// A documented precondition was violated (e.g. non-orthonormal basis).
struct PreconditionError : Error {
    using Error::Error;
};

/// Mismatched or stale objects combined in one call (basis/cache mixups).
struct ConsistencyError : Error {
    using Error::Error;
};

/// Training run hit a fault (divergence, non-finite gradients).
struct TrainingFault : Error {
    using Error::Error;
};

/// Config file problems; carries an already formatted location message.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace prac
