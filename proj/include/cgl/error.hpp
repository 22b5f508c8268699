#ifndef CGL_ERROR_HPP
#define CGL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cgl {

// Every failure mode carries a stable code so callers (and tests) can
// dispatch on it without parsing message text.
enum class ErrorCode {
    BadExponent,
    SupercriticalOrCritical,
    OriginSingularity,
    OrderTooHigh,
    GridTooSmall,
    NonFiniteIntegrand,
    OutOfDomain,
    NoInteriorMax,
    DegenerateHessian,
    NormalizationResidual,
    NonFiniteInput,
    SingularM,
    LostPositivity,
    NonPositiveU,
    NonFiniteField,
    MaxDrifted,
    InsufficientGrowth,
    InsufficientSeries,
    OutOfRange,
    OutsideRescaledDomain,
    UnknownKey,
    TypeError,
    MissingRequired,
    IoError,
    MismatchedParameters,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace cgl

#endif
