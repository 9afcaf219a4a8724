#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace incent {

/// Base of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejected input: bad shapes, ranges, preconditions. CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure on otherwise well-formed input. CLI maps these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonnegativityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A class admits no decision with positive utility (zero column).
class DegeneracyError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class BoundaryError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvertibilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Prediction lies outside the image of the optimal-prediction map.
class ImageError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Training produced a non-finite loss; `step()` reports where.
class DivergenceError : public NumericalError {
public:
    DivergenceError(std::size_t step, const std::string& what)
        : NumericalError(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace incent
