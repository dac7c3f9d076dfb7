#include "mfbdsvie/lattice.hpp"

#include "mfbdsvie/error.hpp"

#include <cmath>
#include <string>

namespace mfbdsvie {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::StepCountOutOfRange: return "StepCountOutOfRange";
    case ErrorKind::NonPositiveHorizon: return "NonPositiveHorizon";
    case ErrorKind::LatticeMismatch: return "LatticeMismatch";
    case ErrorKind::MeasurabilityViolation: return "MeasurabilityViolation";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidIndex: return "InvalidIndex";
    case ErrorKind::InvalidDriver: return "InvalidDriver";
    case ErrorKind::PartialsUnavailable: return "PartialsUnavailable";
    case ErrorKind::AlphaTooLarge: return "AlphaTooLarge";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::MonotonicityBroken: return "MonotonicityBroken";
    case ErrorKind::FlagMissing: return "FlagMissing";
    case ErrorKind::JointSpaceTooLarge: return "JointSpaceTooLarge";
    case ErrorKind::InputError: return "InputError";
    case ErrorKind::CheckFailure: return "CheckFailure";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

namespace {

LatticeSpec make_spec(int n_steps, double horizon, int width) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw Error(ErrorKind::NonPositiveHorizon, "horizon must be positive, got " + std::to_string(horizon));
    LatticeSpec spec;
    spec.n_steps = n_steps;
    spec.horizon = horizon;
    spec.dt = horizon / n_steps;
    spec.inc = std::sqrt(spec.dt);
    spec.width = width;
    return spec;
}

} // namespace

LatticeSpec build_lattice(int n_steps, double horizon) {
    if (n_steps < 1 || n_steps > kMaxSteps)
        throw Error(ErrorKind::StepCountOutOfRange,
                    "n_steps must lie in [1, " + std::to_string(kMaxSteps) + "], got " + std::to_string(n_steps));
    return make_spec(n_steps, horizon, 1);
}

LatticeSpec build_joint_lattice(int n_steps, double horizon, int width) {
    if (n_steps < 1 || n_steps > kMaxSteps)
        throw Error(ErrorKind::StepCountOutOfRange, "n_steps out of range: " + std::to_string(n_steps));
    if (width < 1 || 2 * n_steps * width > kMaxJointBits)
        throw Error(ErrorKind::JointSpaceTooLarge,
                    "joint path space 4^(" + std::to_string(n_steps) + "*" + std::to_string(width) +
                        ") exceeds 2^" + std::to_string(kMaxJointBits));
    return make_spec(n_steps, horizon, width);
}

PathIndex path_from_ordinal(const LatticeSpec& lattice, std::uint64_t ordinal) noexcept {
    const int bits = lattice.w_bit_count();
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    return {ordinal & mask, (ordinal >> bits) & mask};
}

} // namespace mfbdsvie
