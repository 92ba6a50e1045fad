#ifndef HARTOGSKIT_ERROR_HPP
#define HARTOGSKIT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace hk {

/// Failure categories raised by the toolkit. Each maps to a distinct CLI exit code.
enum class ErrorCode {
    ConfigError,
    OutOfRadius,
    NonFinite,
    InsufficientTerms,
    NonFiniteSample,
    GridTooSmall,
    NotHolomorphic,
    OverlapMismatch,
    SlowDecay,
    InductionDepthExceeded,
    DirectionInconsistency,
    ResolutionTooCoarse,
    DegenerateDomain,
    CocycleViolation,
    NotImmersion,
    NotNearIdentity,
    RadiusCollapse,
    ChartDisagreement,
    BoundaryEscape,
    StepCollapse,
    NormBlowup,
    LoopEscapesBall,
    InvalidArgument,
};

std::string_view error_name(ErrorCode code);

/// Process exit code for a failure category. ConfigError is 2; module errors start at 10.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace hk

#endif // HARTOGSKIT_ERROR_HPP
