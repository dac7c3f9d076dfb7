#pragma once
// Discrete Malliavin calculus on the solved pair. D_r is the flip derivative
// in the forward increment dW_r. For t_i > s_r the derivative pair solves the
// linearized equation; for t_i <= s_r the kernel Z(t_i, s_r) satisfies the
// companion identity without the sigma terms (Z(s, t) with t <= s_r never
// sees dW_r).

#include "mfbdsvie/solver.hpp"

#include <array>
#include <vector>

namespace mfbdsvie {

struct DerivativePair {
    AdaptedPath y;      ///< D_r Y(t_i)
    VolterraKernel z;   ///< D_r Z(t_i, s_j)
};

/// flip_derivative applied entrywise.
DerivativePair flip_solution(const AdaptedPath& y, const VolterraKernel& z, int r_idx);

/// Where the partials are evaluated. `path` is the solution value on the
/// path itself; `midpoint` averages each random argument over the two values
/// of dW_r. Both share the continuous limit; the discrete chain-rule error is
/// O(sqrt(dt)) for `path` and O(dt) for `midpoint`.
enum class LinearizationPoint { path, midpoint };

/// Partials of the driver along the solution, row i at node n, each on F_{s_n}.
/// Order as DriverArgs: y, z, sigma, ybar, zbar, sigmabar.
using CoefficientSet = std::array<RandomVariable, 6>;

struct LinearizedScenario {
    LatticeSpec lattice;
    int r_idx = 0;
    double beta = 1.0;
    double c = 0.0;
    double alpha = 0.0;
    AdaptedPath base_y;
    VolterraKernel base_z;
    std::vector<CoefficientSet> f_coef;  ///< (i, n) at i * (N + 1) + n, n in [i, N)
    std::vector<CoefficientSet> g_coef;  ///< (i, n), n in (i, N]
    std::vector<RandomVariable> d_zeta;  ///< D_r zeta(t_i) on F_T
    /// Keep the f_ybar E[D Y] style terms. The flip of a deterministic mean
    /// is zero, so the exact discrete chain rule drops them (default).
    bool mean_field_terms = false;
    LinearizationPoint point = LinearizationPoint::path;

    const CoefficientSet& f_at(int i, int n) const;
    const CoefficientSet& g_at(int i, int n) const;
};

/// Evaluates eval_partials along the solution. PartialsUnavailable when the
/// driver has no analytic partials. The explicit sources [D_r f], [D_r g]
/// vanish: generators are deterministic functions of their arguments.
LinearizedScenario build_linearized(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z, int r_idx,
                                    bool mean_field_terms = false,
                                    LinearizationPoint point = LinearizationPoint::path);

struct CoefficientAudit {
    double f_max_sq = 0.0;  ///< max squared f-side coefficient
    double g_max_sq = 0.0;
    bool pass = false;      ///< f_max_sq <= c and g_max_sq <= alpha
};

CoefficientAudit audit_coefficients(const LinearizedScenario& ls);

/// Picard solve of the linearized system on rows t_i > s_r (zero elsewhere).
DerivativePair solve_linearized(const LinearizedScenario& ls, double tol = 1e-12, int max_iter = 500);

/// Weighted L2 distance on rows i > r: Y part plus the Delta kernel part.
double derivative_mismatch(const DerivativePair& a, const DerivativePair& b, int r_idx);

struct ClarkOconeReport {
    double representation = 0.0;  ///< max |Z(t_i, s_r) - E[D_r Y(t_i) | F_{s_r}]|, i > r
    double expansion = 0.0;       ///< max |D_r Y(t_i) - Z(t_i, s_r) - sum_{r<j<i} D_r Z(t_i, s_j) dW_j|
    std::vector<double> per_row;  ///< representation residual per t_idx (0 for i <= r)
};

ClarkOconeReport check_clark_ocone(const AdaptedPath& y, const VolterraKernel& z, int r_idx);

struct DeltaEquationReport {
    double linearized = 0.0;      ///< max residual with partials times flipped arguments
    double exact = 0.0;           ///< same identity with the flip of the generator itself
    std::vector<double> per_row;  ///< linearized residual per t_idx (0 for i > r)
};

/// Residual of Z(t_i, s_r) = D_r zeta_i + sum_{j>r} [f] dt + sum_{j>=r} [g] dB_j
///                           - sum_{j>r} D_r Z(t_i, s_j) dW_j   for i <= r.
DeltaEquationReport check_delta_equation(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z, int r_idx,
                                         bool mean_field_terms = false,
                                         LinearizationPoint point = LinearizationPoint::path);

} // namespace mfbdsvie
