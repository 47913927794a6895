#include "hmlab/error.h"

namespace hmlab {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SingularPoint: return "SingularPoint";
        case ErrorCode::BadTruncationOrder: return "BadTruncationOrder";
        case ErrorCode::NoThinBall: return "NoThinBall";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::ChainNotNonDoubling: return "ChainNotNonDoubling";
        case ErrorCode::NoCellSmallEnough: return "NoCellSmallEnough";
        case ErrorCode::UnknownDomain: return "UnknownDomain";
        case ErrorCode::NoInteriorPoint: return "NoInteriorPoint";
        case ErrorCode::MaxStepsExceeded: return "MaxStepsExceeded";
        case ErrorCode::SingularPair: return "SingularPair";
        case ErrorCode::PreconditionFailed: return "PreconditionFailed";
        case ErrorCode::EmptyG0: return "EmptyG0";
        case ErrorCode::EmptyProbeFamily: return "EmptyProbeFamily";
        case ErrorCode::DepthExhausted: return "DepthExhausted";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace hmlab
