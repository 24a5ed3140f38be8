#pragma once

#include <stdexcept>
#include <string>

namespace ctlqr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes are inconsistent.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument is out of its admissible range (non-finite, negative, asymmetric, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

/// A matrix required to be Hurwitz is not.
class InstabilityError : public Error {
public:
    using Error::Error;
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// The stability margin is empty (delta >= rho).
class EmptyMarginError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure hit a state that exact arithmetic rules out.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// The simulated state left the finite range.
class ExplosionError : public Error {
public:
    ExplosionError(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace ctlqr
