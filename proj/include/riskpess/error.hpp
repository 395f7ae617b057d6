#pragma once

#include <stdexcept>
#include <string>

namespace riskpess {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad StepFn, propensities that do not sum to one,
/// out-of-range parameters, unknown config keys.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Raised when a risk functional without a finite sup-norm Lipschitz
/// constant (VaR) is used where one is required.
class NotLipschitzError : public Error {
public:
    using Error::Error;
};

/// DR-type estimation requested without a conditional CDF model.
class MissingModelError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

} // namespace detail
} // namespace riskpess
