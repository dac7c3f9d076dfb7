#pragma once

#include "mfbdsvie/lattice.hpp"
#include "mfbdsvie/random_variable.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mfbdsvie {

/// Argument tuple (y, z, sigma, ybar, zbar, sigmabar) of a generator, where
/// sigma is Z(s, t) and the barred entries are the mean-field arguments.
struct DriverArgs {
    double y = 0.0;
    double z = 0.0;
    double sigma = 0.0;
    double ybar = 0.0;
    double zbar = 0.0;
    double sigmabar = 0.0;

    std::array<double, 6> as_array() const noexcept { return {y, z, sigma, ybar, zbar, sigmabar}; }
    static DriverArgs from_array(const std::array<double, 6>& a) noexcept {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
};

/// Partial derivatives in the order of DriverArgs, f-side then g-side.
struct DriverPartials {
    std::array<double, 6> f{};
    std::array<double, 6> g{};
};

/// Values on grid nodes 0..N; a single value is broadcast to every node.
class GridFunction {
public:
    GridFunction() : values_{0.0} {}
    GridFunction(double constant) : values_{constant} {}  // NOLINT: implicit by intent
    explicit GridFunction(std::vector<double> values);

    double at(int i) const;
    bool is_constant() const noexcept { return values_.size() == 1; }
    const std::vector<double>& values() const noexcept { return values_; }
    double max_abs() const noexcept;
    void check_against(const LatticeSpec& lattice, const char* what) const;

    GridFunction scaled(double s) const;
    GridFunction plus(const GridFunction& other) const;

private:
    std::vector<double> values_;
};

/// a_y y + a_z z + a_sigma sigma + a_ybar ybar + a_zbar zbar + a_sigmabar sigmabar + source
struct AffineCoefficients {
    double y = 0.0;
    double z = 0.0;
    double sigma = 0.0;
    double ybar = 0.0;
    double zbar = 0.0;
    double sigmabar = 0.0;
    double source = 0.0;

    double operator()(const DriverArgs& a) const noexcept {
        return y * a.y + z * a.z + sigma * a.sigma + ybar * a.ybar + zbar * a.zbar + sigmabar * a.sigmabar + source;
    }
    std::array<double, 6> gradient() const noexcept { return {y, z, sigma, ybar, zbar, sigmabar}; }
    /// Squared-form Lipschitz constant: sum of squared coefficients.
    double squared_lipschitz() const noexcept;
};

/// Scalar z-functions used by the risk driver for h and g.
enum class ZShape { zero, linear, abs, neg_abs, smooth, neg_smooth };

struct ZFunction {
    ZShape shape = ZShape::zero;
    double scale = 1.0;   ///< multiplier, >= 0
    double offset = 0.0;  ///< constant term (linear shape only)

    double value(double z) const noexcept;
    double derivative(double z) const noexcept;
    double lipschitz() const noexcept;
    bool differentiable() const noexcept;
    bool convex() const noexcept;
    bool affine() const noexcept;
    bool positively_homogeneous() const noexcept;
    bool subadditive() const noexcept;
    bool additive() const noexcept;
};

/// f(t,s,y,z,ybar) = -r(s)/2 (y + ybar) + h(z), g(t,s,z)
struct RiskParams {
    GridFunction rate;
    ZFunction h;
    ZFunction g;
};

/// User-supplied generator. Times are real (t_i, s_j).
struct CustomDriver {
    std::function<double(double t, double s, const DriverArgs&)> f;
    std::function<double(double t, double s, const DriverArgs&)> g;
    std::function<DriverPartials(double t, double s, const DriverArgs&)> partials;  ///< optional
    bool uses_sigma = true;
    bool uses_mean_field = true;
};

enum class DriverFamily { linear, risk, custom };

struct LinearDriver {
    AffineCoefficients f;
    AffineCoefficients g;
};

/// Coefficients (f, g) with their (A3) constants c and alpha, validated
/// against the lattice horizon at construction.
class DriverSpec {
public:
    static DriverSpec linear(const LatticeSpec& lattice, AffineCoefficients f, AffineCoefficients g,
                             std::optional<double> c = {}, std::optional<double> alpha = {});
    static DriverSpec risk(const LatticeSpec& lattice, RiskParams params, std::optional<double> c = {},
                           std::optional<double> alpha = {});
    static DriverSpec custom(const LatticeSpec& lattice, CustomDriver driver, double c, double alpha,
                             double malliavin_l1 = 0.0, double malliavin_l2 = 0.0);

    DriverFamily family() const noexcept;
    const LatticeSpec& lattice() const noexcept { return lattice_; }
    double lipschitz_c() const noexcept { return c_; }
    double lipschitz_alpha() const noexcept { return alpha_; }
    double malliavin_l1() const noexcept { return l1_; }
    double malliavin_l2() const noexcept { return l2_; }

    const LinearDriver* as_linear() const noexcept { return std::get_if<LinearDriver>(&body_); }
    const RiskParams* as_risk() const noexcept { return std::get_if<RiskParams>(&body_); }

    double eval_f(int t_idx, int s_idx, const DriverArgs& args) const;
    double eval_g(int t_idx, int s_idx, const DriverArgs& args) const;
    /// Analytic partials; PartialsUnavailable for non-smooth or opaque drivers.
    DriverPartials eval_partials(int t_idx, int s_idx, const DriverArgs& args) const;
    bool has_partials() const noexcept;

    bool uses_sigma() const noexcept;
    bool uses_mean_field() const noexcept;

private:
    DriverSpec(const LatticeSpec& lattice, std::variant<LinearDriver, RiskParams, CustomDriver> body, double c,
               double alpha, double l1, double l2);
    void check_indices(int t_idx, int s_idx) const;

    LatticeSpec lattice_;
    std::variant<LinearDriver, RiskParams, CustomDriver> body_;
    double c_;
    double alpha_;
    double l1_;
    double l2_;
};

/// 1 / (2 (T + 2)): strict upper bound for alpha.
double alpha_bound(double horizon) noexcept;
/// (20 c (T+1) + 2 alpha) / (1 - 2 alpha (T+2)); AlphaTooLarge when alpha >= alpha_bound.
double beta_threshold(double c, double alpha, double horizon);
/// safety * threshold, or safety itself when the threshold is zero.
double beta_default(const DriverSpec& driver, double horizon, double safety = 1.5);
/// (20 c (T+1) + 2 alpha) / beta + 2 alpha (T+2)
double gamma_theory(double c, double alpha, double horizon, double beta) noexcept;

enum class TerminalShape { identity, sin, cos, tanh, square, softabs };

enum class TerminalFamily { deterministic, affine_in_w, smooth_in_w };

/// zeta(t_i) = phi(t_i) + sum_k theta_k(t_i) G_k(W(T)). Only functionals of
/// W(T) are representable, so every value is F_T-measurable with no B part.
class TerminalSpec {
public:
    struct Term {
        GridFunction theta;
        TerminalShape shape = TerminalShape::identity;
    };

    TerminalSpec() = default;
    static TerminalSpec deterministic(GridFunction phi);
    static TerminalSpec affine(GridFunction phi, GridFunction theta);
    static TerminalSpec smooth(GridFunction phi, GridFunction theta, TerminalShape shape);

    TerminalFamily family() const noexcept;
    const GridFunction& phi() const noexcept { return phi_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }

    /// zeta(t_i) on field F_T (all W increments, no B increments).
    RandomVariable value(const LatticeSpec& lattice, int t_idx, int particle = 0) const;
    std::vector<RandomVariable> values(const LatticeSpec& lattice, int particle = 0) const;

    TerminalSpec scaled(double s) const;
    TerminalSpec shifted(double c) const;
    TerminalSpec plus(const TerminalSpec& other) const;
    /// Same W-dependence with a different deterministic part.
    TerminalSpec with_phi(GridFunction phi) const;

private:
    GridFunction phi_;
    std::vector<Term> terms_;
};

double terminal_shape_value(TerminalShape shape, double x) noexcept;

} // namespace mfbdsvie
