#pragma once

#include <stdexcept>
#include <string>

namespace hmlab {

enum class ErrorCode {
    InvalidArgument,
    SingularPoint,
    BadTruncationOrder,
    NoThinBall,
    InvariantViolation,
    ChainNotNonDoubling,
    NoCellSmallEnough,
    UnknownDomain,
    NoInteriorPoint,
    MaxStepsExceeded,
    SingularPair,
    PreconditionFailed,
    EmptyG0,
    EmptyProbeFamily,
    DepthExhausted,
    ConfigError,
    IoError,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace hmlab
