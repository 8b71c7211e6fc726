#pragma once

#include <stdexcept>
#include <string>

namespace hollow {

/// Base class for every error raised by the engine. The CLI maps each
/// subclass onto a process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values or inconsistent sizes.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller misuse: bad arguments, out-of-range indices, shape mismatches.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Unreadable or malformed input data (images, datasets, checkpoints).
class DataError : public Error {
public:
    using Error::Error;
};

/// Checkpoint magic/version/length validation failures.
class IntegrityError : public DataError {
public:
    using DataError::DataError;
};

/// Non-finite values encountered during a computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace hollow
