#pragma once

#include <stdexcept>
#include <string>

namespace sepcov {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point or argument lies outside the domain of a kernel or design.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Dimensions of two operands do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A factorization or solve failed, or a matrix is too ill-conditioned.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An index or truncation order exceeds what is available.
class RangeError : public Error {
public:
    using Error::Error;
};

/// An enumeration would exceed its configured size budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Too few Monte Carlo samples for a requested statistic.
class SampleSizeError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or malformed input documents.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace sepcov
