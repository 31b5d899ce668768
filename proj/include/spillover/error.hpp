#pragma once

#include <stdexcept>
#include <string>

namespace spillover {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV parse failures, ragged rows, bad shapes).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid user-facing configuration (unknown backend, out-of-range parameters).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown: singular covariance, ill-conditioned interpolation system.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The attack cannot proceed for a reason inherent to the data (e.g. target already outlying).
class AttackAborted : public Error {
public:
    using Error::Error;
};

}  // namespace spillover
