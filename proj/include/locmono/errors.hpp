#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace locmono {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A vector does not match the grid (or another vector) it is used with.
class ConformanceError : public Error {
public:
    using Error::Error;
};

/// Non-finite input where finite values are required.
class NumericDomainError : public Error {
public:
    using Error::Error;
};

/// A model or control parameter violates its stated constraint.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete configuration. `key()` names the offending key path when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message, std::string key = {})
        : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A simulated state became non-finite.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t step, std::size_t path_index)
        : Error("numerical blow-up at step " + std::to_string(step) + " of path " +
                std::to_string(path_index)),
          step_(step), path_index_(path_index) {}

    std::size_t step() const noexcept { return step_; }
    std::size_t path_index() const noexcept { return path_index_; }

private:
    std::size_t step_;
    std::size_t path_index_;
};

class OptimizationError : public Error {
public:
    using Error::Error;
};

}  // namespace locmono
