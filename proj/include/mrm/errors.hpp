#pragma once

#include <stdexcept>
#include <string>

namespace mrm {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad parameters, broken invariants, unsupported regimes.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Quadrature, factorization or estimator failures.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Query outside the domain a quantity is defined on.
class DomainError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}
}  // namespace detail

}  // namespace mrm
