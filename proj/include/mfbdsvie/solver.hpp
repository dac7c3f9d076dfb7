#pragma once
// =============================================================================
// Fixed-point machinery for the mean-field BDSVIE on the lattice
//
// For a frozen pair (y, z) the map Gamma builds, row by row,
//
//   Phi_i = zeta(t_i) + sum_{j>=i} f(t_i, s_j, args_j) dt
//                     + sum_{j>=i} g(t_i, s_{j+1}, args_{j+1}) dB_j
//
// and returns Y_i = E[Phi_i | F_{t_i}], Z_ij = E[Phi_i dW_j | F_{s_j}] / dt on
// Delta, with Delta^c filled by m_extend. Arguments at node n are taken on
// F_{s_n}: y_n, z(t_i, s_n), E[z(s_n, t_i) | F_{s_n}] and the mean-field
// values. The kernel argument at s_N is zero (no increment starts there).
//
// With the f-integrand on F_{s_j} and the g-integrand on F_{s_{j+1}} the
// representation Phi_i = Y_i + sum_{j>=i} Z_ij dW_j is exact on every path.
// =============================================================================

#include "mfbdsvie/drivers.hpp"
#include "mfbdsvie/fields.hpp"
#include "mfbdsvie/report.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mfbdsvie {

/// Generator arguments at one node, all stored on F_{s_n}.
struct NodeArguments {
    RandomVariable y;
    RandomVariable z;
    RandomVariable sigma;
    RandomVariable ybar;
    RandomVariable zbar;
    RandomVariable sigmabar;
};

/// Source of the f- and g-integrands of the equation.
class Generator {
public:
    virtual ~Generator() = default;
    /// f-integrand for row i at node s_j (j >= i).
    virtual RandomVariable f_term(int i, int j, const NodeArguments& args) const = 0;
    /// g-integrand for row i at node s_n, paired with dB_{n-1}.
    virtual RandomVariable g_term(int i, int n, const NodeArguments& args) const = 0;
};

/// Applies fn slot by slot; all six arguments must share one field.
RandomVariable evaluate_pointwise(const NodeArguments& args, const std::function<double(const DriverArgs&)>& fn);

/// Evaluates a DriverSpec pointwise on the node tables.
class DriverGenerator final : public Generator {
public:
    explicit DriverGenerator(const DriverSpec& driver) : driver_(&driver) {}
    RandomVariable f_term(int i, int j, const NodeArguments& args) const override;
    RandomVariable g_term(int i, int n, const NodeArguments& args) const override;

private:
    const DriverSpec* driver_;
};

/// Mean-field arguments: expectations (the MF equation) or empirical means
/// across particles (the interacting system).
enum class MeanFieldMode { expectation, empirical };

struct EquationSystem {
    LatticeSpec lattice;
    const Generator* generator = nullptr;
    std::vector<std::vector<RandomVariable>> terminal;  ///< [particle][i]
    MeanFieldMode mode = MeanFieldMode::expectation;
    double beta = 1.0;

    int particles() const noexcept { return static_cast<int>(terminal.size()); }
};

/// (Y, Z) for every particle; a plain solve has one entry.
struct Iterate {
    std::vector<AdaptedPath> y;
    std::vector<VolterraKernel> z;

    static Iterate zeros(const LatticeSpec& lattice, int particles = 1);
};

/// Stops once the difference of successive iterates is below tol relative to
/// the iterate, both in the M_beta norm and entrywise. The entrywise test
/// matters for large beta, where e^{beta t} hides early-time errors.
struct PicardOptions {
    double tol = 1e-10;
    int max_iter = 500;
    /// Skip the Delta^c extension inside the loop and apply it once at the end.
    bool defer_extension = false;
};

struct PicardTrace {
    int iterations = 0;
    std::vector<double> diff_trace;   ///< M_beta norm of X_k - X_{k-1}
    std::vector<double> ratio_trace;  ///< diff_k / diff_{k-1}
    bool converged = false;
};

NodeArguments node_arguments(const EquationSystem& sys, const Iterate& x, int particle, int i, int n);
/// Phi_i for one particle with arguments frozen at x.
RandomVariable build_phi(const EquationSystem& sys, const Iterate& x, int particle, int i);
Iterate apply_gamma(const EquationSystem& sys, const Iterate& x, bool extend = true);
double iterate_norm(const Iterate& x, double beta);
/// Largest table entry over every Y and Z of every particle.
double iterate_max_abs(const Iterate& x);
Iterate iterate_difference(const Iterate& a, const Iterate& b);
/// max over particles, rows and paths of |Y_i - Phi_i(Y, Z) + sum_{j>=i} Z_ij dW_j|.
double system_residual(const EquationSystem& sys, const Iterate& x);
std::pair<Iterate, PicardTrace> picard_iterate(const EquationSystem& sys, Iterate start, const PicardOptions& opts);

double geometric_mean(const std::vector<double>& ratios);

// --- single-equation interface ---------------------------------------------------

struct Scenario {
    LatticeSpec lattice;
    DriverSpec driver;
    TerminalSpec terminal;
    double beta;
};

/// Bundles the equation; beta defaults to beta_default(driver, T, safety).
Scenario make_scenario(DriverSpec driver, TerminalSpec terminal, std::optional<double> beta = {},
                       double safety = 1.5);

struct SolverReport {
    int iterations = 0;
    std::vector<double> diff_trace;
    std::vector<double> ratio_trace;
    double gamma_theory = 0.0;
    double final_residual = 0.0;
    double m_beta = 0.0;
    double l_beta = 0.0;
    bool converged = false;
};

struct Solution {
    AdaptedPath y;
    VolterraKernel z;
    SolverReport report;
};

EquationSystem make_system(const Scenario& sc, const Generator& gen);

std::pair<AdaptedPath, VolterraKernel> gamma_map(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z);
Solution picard_solve(const Scenario& sc, double tol = 1e-10, int max_iter = 500, bool defer_extension = false);
Solution picard_solve_from(const Scenario& sc, AdaptedPath y0, VolterraKernel z0, double tol = 1e-10,
                           int max_iter = 500);
double residual(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z);

/// Y_i = E[zeta_i | F_{t_i}] with its representation kernel (Gamma with f = g = 0).
std::pair<AdaptedPath, VolterraKernel> representation_pair(const LatticeSpec& lattice, const TerminalSpec& zeta);

struct StabilityReport {
    double lhs = 0.0;          ///< squared M_beta norm of the solution difference
    double zeta_term = 0.0;    ///< sum_i e^{beta t_i} E|zeta1 - zeta2|^2 dt
    double f_term = 0.0;       ///< sum_{j>=i} e^{beta s_j} E|delta f|^2 dt^2
    double g_term = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;        ///< lhs / rhs (0 when rhs == 0)
    double solution_distance = 0.0;  ///< sqrt(lhs)
};

/// Both sides of the stability estimate with delta f, delta g along solution 2.
StabilityReport stability_compare(const Scenario& sc1, const Scenario& sc2, double tol = 1e-12, int max_iter = 500);

std::string summarize(const SolverReport& report);
/// iteration,diff_norm,ratio (ratio empty on the first row).
CsvTable trace_table(const SolverReport& report);

} // namespace mfbdsvie
