#pragma once

#include <stdexcept>
#include <string>

namespace mare {

/// Base class of every exception thrown by the library.
class MareError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public MareError {
public:
    using MareError::MareError;
};

class NonFiniteError : public MareError {
public:
    using MareError::MareError;
};

/// The input does not describe a nonsingular M-matrix (invalid triplet,
/// nonpositive pivot, sign-pattern breach).
class NotMMatrixError : public MareError {
public:
    using MareError::MareError;
};

class RankDeficientError : public MareError {
public:
    using MareError::MareError;
};

class InvalidArgument : public MareError {
public:
    using MareError::MareError;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw InvalidArgument(message);
    }
}

inline void require_dims(bool condition, const std::string& message)
{
    if (!condition) {
        throw DimensionError(message);
    }
}

} // namespace detail
} // namespace mare
