#include "hartogskit/error.hpp"

namespace hk {

std::string_view error_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::OutOfRadius: return "OutOfRadius";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InsufficientTerms: return "InsufficientTerms";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::NotHolomorphic: return "NotHolomorphic";
    case ErrorCode::OverlapMismatch: return "OverlapMismatch";
    case ErrorCode::SlowDecay: return "SlowDecay";
    case ErrorCode::InductionDepthExceeded: return "InductionDepthExceeded";
    case ErrorCode::DirectionInconsistency: return "DirectionInconsistency";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::CocycleViolation: return "CocycleViolation";
    case ErrorCode::NotImmersion: return "NotImmersion";
    case ErrorCode::NotNearIdentity: return "NotNearIdentity";
    case ErrorCode::RadiusCollapse: return "RadiusCollapse";
    case ErrorCode::ChartDisagreement: return "ChartDisagreement";
    case ErrorCode::BoundaryEscape: return "BoundaryEscape";
    case ErrorCode::StepCollapse: return "StepCollapse";
    case ErrorCode::NormBlowup: return "NormBlowup";
    case ErrorCode::LoopEscapesBall: return "LoopEscapesBall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

int exit_code(ErrorCode code)
{
    if (code == ErrorCode::ConfigError)
        return 2;
    return 10 + static_cast<int>(code);
}

} // namespace hk
