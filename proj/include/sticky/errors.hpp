#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sticky {

// Base class for every error raised by the library. The CLI maps
// ConfigError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Covariance matrix has an eigenvalue below -1e-8.
class NotPsd : public Error {
public:
    NotPsd(const std::string& what, double eigenvalue)
        : Error(what), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class NotDominant : public Error {
public:
    NotDominant(const std::string& what, std::size_t row)
        : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// A finite-difference axis rate came out negative.
class NegativeRate : public Error {
public:
    NegativeRate(std::size_t axis, double value);
    std::size_t axis() const noexcept { return axis_; }
    double value() const noexcept { return value_; }

private:
    std::size_t axis_;
    double value_;
};

/// A coefficient callback produced a non-finite value.
class ModelEvaluation : public Error {
public:
    using Error::Error;
};

class InsufficientRecord : public Error {
public:
    using Error::Error;
};

class FitDegenerate : public Error {
public:
    using Error::Error;
};

/// Config text could not be parsed or failed validation. line() is 0 when
/// the problem is not tied to a line (e.g. a missing key).
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line = 0, std::string field = {})
        : Error(what), line_(line), field_(std::move(field)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

} // namespace sticky
