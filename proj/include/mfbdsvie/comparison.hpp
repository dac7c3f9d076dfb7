#pragma once
// Pathwise comparison for reduced-form equations
//   Y(t) = zeta(t) + int f(t, s, Y(s), Z(t, s), E[Y(s)]) ds + int g(...) dB - int Z dW
// with f1 <= fbar <= f2, fbar nondecreasing in y and ybar, and zeta1 <= zeta2.
// Each f is taken from the f-side of a DriverSpec; the g-side of `g` is shared.

#include "mfbdsvie/solver.hpp"

#include <optional>
#include <vector>

namespace mfbdsvie {

struct ComparisonScenario {
    DriverSpec f1;
    DriverSpec fbar;
    DriverSpec f2;
    DriverSpec g;
    TerminalSpec zeta1;
    TerminalSpec zeta2;
    std::optional<TerminalSpec> zeta_bar;  ///< defaults to zeta2
    bool fbar_nondecreasing_y = true;
    bool fbar_nondecreasing_ybar = true;

    const LatticeSpec& lattice() const noexcept { return f1.lattice(); }
    const TerminalSpec& middle_terminal() const noexcept { return zeta_bar ? *zeta_bar : zeta2; }
};

struct HypothesisReport {
    int samples = 0;
    double order_violation = 0.0;      ///< max of f1 - fbar and fbar - f2
    double monotone_y_violation = 0.0; ///< max fbar(y) - fbar(y') over y < y'
    double monotone_ybar_violation = 0.0;
    double terminal_violation = 0.0;   ///< max zeta1 - zeta2 (and against zeta_bar)
    bool reduced_form = true;          ///< no sigma / zbar / sigmabar dependence
    bool flags_declared = true;

    bool pass() const noexcept {
        return reduced_form && flags_declared && order_violation <= 0.0 && monotone_y_violation <= 0.0 &&
               monotone_ybar_violation <= 0.0 && terminal_violation <= 0.0;
    }
};

/// Deterministic audit on sampled argument tuples (fixed seed) plus an exact
/// pathwise terminal check. Never throws on violations.
HypothesisReport audit_hypotheses(const ComparisonScenario& cs, int n_samples = 2000);
/// audit_hypotheses, throwing HypothesisViolated on any violation.
HypothesisReport check_hypotheses(const ComparisonScenario& cs, int n_samples = 2000);

/// Common beta for every solve of the scenario.
double comparison_beta(const ComparisonScenario& cs);

/// Solves the mean-field equation with the f-side of `f` and the g-side of cs.g.
AdaptedPath solve_reduced(const ComparisonScenario& cs, const DriverSpec& f, const TerminalSpec& zeta,
                          double tol = 1e-12, int max_iter = 500);
/// Same equation with E[Y(s_n)] replaced by frozen[n] in both f and g.
AdaptedPath solve_frozen(const ComparisonScenario& cs, const DriverSpec& f, const TerminalSpec& zeta,
                         const std::vector<double>& frozen, double tol = 1e-12, int max_iter = 500);

struct MonotoneChain {
    std::vector<AdaptedPath> y;       ///< Y~_0 = Y_2, Y~_1, ..., Y~_p
    std::vector<double> step_norms;   ///< M_beta norm (Y part) of Y~_p - Y~_{p-1}
    std::vector<double> ratios;
    double worst_increase = 0.0;      ///< max over p, i, paths of Y~_p - Y~_{p-1}
};

/// Frozen-mean iteration starting from Y_2 with terminal zeta_bar.
/// MonotonicityBroken when some step rises by more than 1e-12.
MonotoneChain monotone_iteration(const ComparisonScenario& cs, int p_max, double tol = 1e-12);

struct ComparisonVerdict {
    std::vector<double> min_gap;       ///< per t_idx: min over paths of Y_2 - Y_1
    std::vector<double> lower_gap;     ///< per t_idx: min of Ybar - Y_1
    std::vector<double> upper_gap;     ///< per t_idx: min of Y_2 - Ybar
    double overall_min_gap = 0.0;
    bool pass = false;                 ///< overall_min_gap >= -1e-10
    HypothesisReport hypotheses;
};

ComparisonVerdict compare_solve(const ComparisonScenario& cs, double tol = 1e-12, int max_iter = 500);

/// t_idx,min_gap
CsvTable verdict_table(const ComparisonVerdict& v);

} // namespace mfbdsvie
