#pragma once

#include <stdexcept>
#include <string>

namespace thermoform {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A point or interval lies outside the map's domain.
class OutOfDomainError : public Error {
public:
    using Error::Error;
};

/// A tree/root/word enumeration would exceed the configured budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Evaluation of a geometric potential too close to a critical point.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// An operation that requires a Hölder potential was given a geometric one.
class NotHolderError : public Error {
public:
    using Error::Error;
};

/// Map/potential/config spec string could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge within its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A search completed without finding the requested object.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// A documented precondition does not hold for the given arguments.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Point sets fell between the coincide/disjoint thresholds.
class AmbiguityError : public Error {
public:
    using Error::Error;
};

/// An object failed its construction-time validation.
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// An internal invariant was violated (malformed input object).
class InvariantError : public Error {
public:
    using Error::Error;
};

} // namespace thermoform
