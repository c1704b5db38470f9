#pragma once

#include <stdexcept>
#include <string>

namespace nio {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (chart range,
/// phase interval, parameter bounds).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Amplitude at or below the degeneracy floor, origin passed to an inverse
/// chart, or a grazing contact.
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

/// Iterative procedure (integrator step budget, Newton) did not converge.
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

class NumericalBlowupError : public Error {
public:
    using Error::Error;
};

/// No upward crossing of x = 0 within ten nominal contact half-periods.
class TrappedInContactError : public Error {
public:
    using Error::Error;
};

/// The trajectory over one period does not make exactly one contact passage.
class TopologyError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

/// Bracketing root search found no sign change.
class NoRootError : public Error {
public:
    using Error::Error;
};

}  // namespace nio
