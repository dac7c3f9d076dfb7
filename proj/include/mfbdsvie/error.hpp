#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfbdsvie {

enum class ErrorKind {
    StepCountOutOfRange,
    NonPositiveHorizon,
    LatticeMismatch,
    MeasurabilityViolation,
    IndexOutOfRange,
    InvalidIndex,
    InvalidDriver,
    PartialsUnavailable,
    AlphaTooLarge,
    NoConvergence,
    HypothesisViolated,
    MonotonicityBroken,
    FlagMissing,
    JointSpaceTooLarge,
    InputError,
    CheckFailure,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace mfbdsvie
