#pragma once
// =============================================================================
// Exact doubly stochastic lattice
//
// Forward motion W and backward motion B are Rademacher walks with
// increments +-sqrt(dt). A path is the pair of bit codes (w_bits, b_bits);
// every path carries probability 4^(-N*width). The joint lattice used by the
// particle system has `width` independent (W, B) pairs, stored time-major:
// increment k of step j lives at bit j*width + k.
//
// Information at grid time t_i is F_{t_i} = F^W_{t_i} v F^B_{t_i,T}: the W
// increments with step index < i and the B increments with step index >= i.
// =============================================================================

#include <cstdint>

namespace mfbdsvie {

inline constexpr int kMaxSteps = 14;
inline constexpr int kMaxJointBits = 24;

struct LatticeSpec {
    int n_steps = 1;
    double horizon = 1.0;
    double dt = 1.0;
    double inc = 1.0;
    int width = 1;  ///< number of independent (W, B) pairs per step

    double time(int i) const noexcept { return dt * i; }
    int w_bit_count() const noexcept { return n_steps * width; }
    std::uint64_t path_count() const noexcept {
        return std::uint64_t{1} << (2 * w_bit_count());
    }

    friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

LatticeSpec build_lattice(int n_steps, double horizon);

/// Lattice for `width` interacting copies; guarded by 4^(N*width) <= 2^24.
LatticeSpec build_joint_lattice(int n_steps, double horizon, int width);

/// Two-sided information set: W increments with step < w_upto, B increments
/// with step >= b_from. F_{t_i} is {i, i}.
struct SigmaField {
    int w_upto = 0;
    int b_from = 0;

    static constexpr SigmaField at(int i) noexcept { return {i, i}; }
    friend bool operator==(const SigmaField&, const SigmaField&) = default;
};

/// true when `fine` carries at least the information of `coarse`.
constexpr bool refines(SigmaField fine, SigmaField coarse) noexcept {
    return fine.w_upto >= coarse.w_upto && fine.b_from <= coarse.b_from;
}

constexpr SigmaField join(SigmaField a, SigmaField b) noexcept {
    return {a.w_upto > b.w_upto ? a.w_upto : b.w_upto, a.b_from < b.b_from ? a.b_from : b.b_from};
}

constexpr SigmaField meet(SigmaField a, SigmaField b) noexcept {
    return {a.w_upto < b.w_upto ? a.w_upto : b.w_upto, a.b_from > b.b_from ? a.b_from : b.b_from};
}

/// Full sample point. Bit set means the increment is +inc.
struct PathIndex {
    std::uint64_t w_bits = 0;
    std::uint64_t b_bits = 0;

    friend bool operator==(const PathIndex&, const PathIndex&) = default;
};

/// Decodes the p-th path of the total enumeration (W bits low, B bits high).
PathIndex path_from_ordinal(const LatticeSpec& lattice, std::uint64_t ordinal) noexcept;

} // namespace mfbdsvie
