#pragma once

#include <stdexcept>
#include <string>

namespace jcsense {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside the domain where the model is defined
/// (eta >= 1, negative rates, branch/level mismatch, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The Fock cutoff is too small for the requested accuracy.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// The integrator or an estimator could not produce a result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-range experiment configuration.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace jcsense
