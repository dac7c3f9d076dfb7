#pragma once
// Interacting particle system: n copies with independent (W^k, B^k), coupled
// through the empirical means (1/n) sum_l Y^l, (1/n) sum_l Z^l (self included).
// Solved exactly on the joint lattice with the same Picard engine.

#include "mfbdsvie/solver.hpp"

#include <optional>
#include <vector>

namespace mfbdsvie {

inline constexpr int kMaxParticles = 3;

struct ParticleConfig {
    int n = 1;
    Scenario base;  ///< single-copy lattice, driver, terminal and beta

    /// JointSpaceTooLarge unless 1 <= n <= 3 and 4^(N n) <= 2^24.
    LatticeSpec joint_lattice() const;
};

struct ParticleSolution {
    LatticeSpec joint;
    Iterate x;                     ///< particle k at index k
    PicardTrace trace;
    double exchangeability = 0.0;  ///< max |Y^k(w) - Y^0(swap_{0k} w)| over Y and Z entries
    /// Residual of each particle's equation driven by its own dW^k only. Not
    /// zero for n >= 2: the other particles' future increments are not
    /// representable by dW^k.
    double residual = 0.0;
};

ParticleSolution solve_particles(const ParticleConfig& pc, double tol = 1e-12, int max_iter = 500);

/// Single-copy path seen by particle `lane` of a joint path.
PathIndex lane_path(const LatticeSpec& joint, PathIndex p, int lane);

/// x on the single lattice re-expressed as a variable of particle `lane`.
RandomVariable embed_lane(const RandomVariable& x, const LatticeSpec& joint, int lane);

struct ParticleStudy {
    std::vector<int> n;
    std::vector<std::vector<double>> e;  ///< e[k][i] = E|Y^{1,n_k}(t_i) - Y(t_i)|^2
    std::vector<double> e_total;         ///< sum_i e[k][i] dt
};

ParticleStudy convergence_study(const Scenario& base, const std::vector<int>& n_list, double tol = 1e-12,
                                int max_iter = 500);

/// n,t_idx,e_n
CsvTable study_table(const ParticleStudy& s);

} // namespace mfbdsvie
