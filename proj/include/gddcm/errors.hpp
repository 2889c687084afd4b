#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gddcm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time outside a family's domain, or an invalid argument range.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Mismatched vector dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A prediction inversion or score evaluation hit a zero denominator.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Every mixture responsibility underflowed.
class NumericalUnderflowError : public Error {
public:
    using Error::Error;
};

/// A composite step or DDIM step produced a negative radicand.
class ScheduleViolationError : public Error {
public:
    using Error::Error;
};

/// Invalid or infeasible configuration. Maps to CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingDivergedError : public Error {
public:
    using Error::Error;
};

/// Malformed token stream. Maps to CLI exit code 3.
class CorruptStreamError : public Error {
public:
    CorruptStreamError(std::size_t offset, const std::string& what)
        : Error("corrupt stream at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace gddcm
