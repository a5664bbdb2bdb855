#pragma once

#include <stdexcept>
#include <string>

namespace dnnsr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension or layout mismatch between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A numeric argument is outside the documented domain (negative threshold, bad fraction, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// An iterative numerical routine failed: SVD non-convergence, backtracking cap, divergence.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Malformed binary or raster data (checkpoints, images).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input whose values violate a documented range.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for its input (empty index set, zero denominator).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace dnnsr
