#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qphase {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent user input (bad config values, violated preconditions).
class ConfigError : public Error {
public:
    using Error::Error;
};

class DomainError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class OutOfRangeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ResourceError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class TruncationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class AliasingError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Failure to read or write a file; the message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

/// A computation that was well posed but failed numerically.
class NumericalError : public Error {
public:
    using Error::Error;
};

class FactorizationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, long sample, double error)
        : NumericalError(what), sample(sample), tracking_error(error) {}
    long sample;
    double tracking_error;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, std::vector<double> last, int iterations)
        : NumericalError(what), last_iterate(std::move(last)), iterations(iterations) {}
    std::vector<double> last_iterate;
    int iterations;
};

} // namespace qphase
