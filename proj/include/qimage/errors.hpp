#pragma once

#include <stdexcept>
#include <string>

namespace qimage {

// Bad input: malformed arguments, shape mismatches, out-of-range indices.
// The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Internal results failing a self-check (e.g. weights not summing to one).
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A walk that did not absorb within its step budget.
class RunawayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateEnsembleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientSampleError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace qimage
