#pragma once
// Dynamic risk measure rho(t; zeta) := Y^{-zeta}(t), where Y solves the
// mean-field equation with
//   f(t, s, y, z, ybar) = -r(s)/2 (y + ybar) + h(z),   g(t, s, z)
// and the axiom checks built on it.

#include "mfbdsvie/solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mfbdsvie {

struct RiskSpec {
    LatticeSpec lattice;
    RiskParams params;
    std::optional<double> beta;  ///< beta_default of the driver when absent
    double tol = 1e-12;
    int max_iter = 500;

    DriverSpec driver() const;
};

/// Position process zeta(t_i).
struct PayoffStream {
    TerminalSpec zeta;
};

AdaptedPath rho(const RiskSpec& rs, const PayoffStream& p);

struct AxiomReport {
    std::string axiom;
    double worst_violation = 0.0;  ///< >= 0; how far the axiom fails
    bool pass = false;             ///< worst_violation <= 1e-10
};

inline constexpr double kAxiomSlack = 1e-10;

/// rho(t_i; p1) = rho(t_i; p2) for i >= t_idx.
AxiomReport axiom_past_independence(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2, int t_idx);
/// p1 <= p2 implies rho(p1) >= rho(p2). InputError when p1 <= p2 fails.
AxiomReport axiom_monotonicity(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2);
/// rho(zeta + c) - rho(zeta) = -c prod_{j>=i} (1 + r_j dt)^{-1}.
AxiomReport axiom_translation(const RiskSpec& rs, const PayoffStream& p, double c);
/// Needs h convex and g affine (FlagMissing otherwise, unless enforce_flags is off).
AxiomReport axiom_convexity(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2, double lambda,
                            bool enforce_flags = true);
/// Needs h and g positively homogeneous.
AxiomReport axiom_positive_homogeneity(const RiskSpec& rs, const PayoffStream& p, double lambda,
                                       bool enforce_flags = true);
/// Needs h subadditive and g additive.
AxiomReport axiom_subadditivity(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2,
                                bool enforce_flags = true);

/// m_i = prod_{j=i}^{N-1} (1 + r_j dt)^{-1}, i = 0..N.
std::vector<double> translation_factor(const LatticeSpec& lattice, const GridFunction& rate);

struct DiscountConvergence {
    std::vector<int> steps;
    std::vector<double> errors;  ///< |m_0 - exp(-int_0^T r)|
    std::vector<double> ratios;  ///< errors[k-1] / errors[k]
};

/// Discrete factor at t = 0 against exp(-integral) for each step count, with
/// the rate sampled at the grid nodes.
DiscountConvergence discount_convergence(const std::function<double(double)>& rate, double integral, double horizon,
                                         const std::vector<int>& steps);

/// axiom,worst_violation,pass
CsvTable axiom_table(const std::vector<AxiomReport>& reports);

} // namespace mfbdsvie
