#include "mfbdsvie/drivers.hpp"

#include "mfbdsvie/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfbdsvie {

// --- GridFunction --------------------------------------------------------------

GridFunction::GridFunction(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorKind::InputError, "grid function needs at least one value");
}

double GridFunction::at(int i) const {
    if (values_.size() == 1) return values_.front();
    if (i < 0 || static_cast<std::size_t>(i) >= values_.size())
        throw Error(ErrorKind::InvalidIndex, "grid function index " + std::to_string(i) + " out of range");
    return values_[static_cast<std::size_t>(i)];
}

double GridFunction::max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

void GridFunction::check_against(const LatticeSpec& lattice, const char* what) const {
    if (values_.size() != 1 && values_.size() != static_cast<std::size_t>(lattice.n_steps) + 1)
        throw Error(ErrorKind::InputError, std::string(what) + " must have 1 or N+1 values");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorKind::InputError, std::string(what) + " has non-finite values");
}

GridFunction GridFunction::scaled(double s) const {
    std::vector<double> out = values_;
    for (double& v : out) v *= s;
    return GridFunction(std::move(out));
}

GridFunction GridFunction::plus(const GridFunction& other) const {
    const std::size_t n = std::max(values_.size(), other.values_.size());
    if (values_.size() != 1 && other.values_.size() != 1 && values_.size() != other.values_.size())
        throw Error(ErrorKind::InputError, "grid functions of different lengths");
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = at(static_cast<int>(k)) + other.at(static_cast<int>(k));
    return GridFunction(std::move(out));
}

// --- coefficient pieces ----------------------------------------------------------

double AffineCoefficients::squared_lipschitz() const noexcept {
    return y * y + z * z + sigma * sigma + ybar * ybar + zbar * zbar + sigmabar * sigmabar;
}

double ZFunction::value(double z) const noexcept {
    switch (shape) {
    case ZShape::zero: return 0.0;
    case ZShape::linear: return scale * z + offset;
    case ZShape::abs: return scale * std::abs(z);
    case ZShape::neg_abs: return -scale * std::abs(z);
    case ZShape::smooth: return scale * (std::sqrt(1.0 + z * z) - 1.0);
    case ZShape::neg_smooth: return -scale * (std::sqrt(1.0 + z * z) - 1.0);
    }
    return 0.0;
}

double ZFunction::derivative(double z) const noexcept {
    switch (shape) {
    case ZShape::zero: return 0.0;
    case ZShape::linear: return scale;
    case ZShape::abs: return z > 0 ? scale : (z < 0 ? -scale : 0.0);
    case ZShape::neg_abs: return z > 0 ? -scale : (z < 0 ? scale : 0.0);
    case ZShape::smooth: return scale * z / std::sqrt(1.0 + z * z);
    case ZShape::neg_smooth: return -scale * z / std::sqrt(1.0 + z * z);
    }
    return 0.0;
}

double ZFunction::lipschitz() const noexcept { return shape == ZShape::zero ? 0.0 : std::abs(scale); }

bool ZFunction::differentiable() const noexcept { return shape != ZShape::abs && shape != ZShape::neg_abs; }

bool ZFunction::convex() const noexcept {
    return shape == ZShape::zero || shape == ZShape::linear || shape == ZShape::abs || shape == ZShape::smooth;
}

bool ZFunction::affine() const noexcept { return shape == ZShape::zero || shape == ZShape::linear; }

bool ZFunction::positively_homogeneous() const noexcept {
    return shape == ZShape::zero || (shape == ZShape::linear && offset == 0.0) || shape == ZShape::abs ||
           shape == ZShape::neg_abs;
}

bool ZFunction::subadditive() const noexcept {
    return shape == ZShape::zero || (shape == ZShape::linear && offset == 0.0) || shape == ZShape::abs;
}

bool ZFunction::additive() const noexcept {
    return shape == ZShape::zero || (shape == ZShape::linear && offset == 0.0);
}

// --- DriverSpec --------------------------------------------------------------------

double alpha_bound(double horizon) noexcept { return 1.0 / (2.0 * (horizon + 2.0)); }

namespace {

double settle_constant(std::optional<double> declared, double analytic, const char* name) {
    if (!declared) return analytic;
    if (!std::isfinite(*declared) || *declared < 0.0)
        throw Error(ErrorKind::InvalidDriver, std::string(name) + " must be finite and nonnegative");
    // FP slack: a declared constant equal to the analytic one must pass.
    if (*declared < analytic * (1.0 - 1e-12))
        throw Error(ErrorKind::InvalidDriver, std::string("declared ") + name + " = " + std::to_string(*declared) +
                                                  " is below the analytic constant " + std::to_string(analytic));
    return *declared;
}

void check_alpha(double alpha, double horizon) {
    if (!(alpha < alpha_bound(horizon)))
        throw Error(ErrorKind::AlphaTooLarge, "alpha = " + std::to_string(alpha) + " must be below 1/(2(T+2)) = " +
                                                  std::to_string(alpha_bound(horizon)));
}

bool finite_coefficients(const AffineCoefficients& a) {
    for (double v : {a.y, a.z, a.sigma, a.ybar, a.zbar, a.sigmabar, a.source})
        if (!std::isfinite(v)) return false;
    return true;
}

void check_zfunction(const ZFunction& h, const char* what) {
    if (!std::isfinite(h.scale) || h.scale < 0.0 || !std::isfinite(h.offset))
        throw Error(ErrorKind::InvalidDriver, std::string(what) + " needs a finite nonnegative scale");
    if (h.shape != ZShape::linear && h.offset != 0.0)
        throw Error(ErrorKind::InvalidDriver, std::string(what) + ": offset only applies to the linear shape");
}

} // namespace

DriverSpec::DriverSpec(const LatticeSpec& lattice, std::variant<LinearDriver, RiskParams, CustomDriver> body,
                       double c, double alpha, double l1, double l2)
    : lattice_(lattice), body_(std::move(body)), c_(c), alpha_(alpha), l1_(l1), l2_(l2) {
    check_alpha(alpha_, lattice_.horizon);
    if (!std::isfinite(l1_) || !std::isfinite(l2_) || l1_ < 0.0 || l2_ < 0.0)
        throw Error(ErrorKind::InvalidDriver, "Malliavin majorants must be finite and nonnegative");
}

DriverSpec DriverSpec::linear(const LatticeSpec& lattice, AffineCoefficients f, AffineCoefficients g,
                              std::optional<double> c, std::optional<double> alpha) {
    if (!finite_coefficients(f) || !finite_coefficients(g))
        throw Error(ErrorKind::InvalidDriver, "linear driver coefficients must be finite");
    const double cc = settle_constant(c, f.squared_lipschitz(), "c");
    const double aa = settle_constant(alpha, g.squared_lipschitz(), "alpha");
    return DriverSpec(lattice, LinearDriver{f, g}, cc, aa, 0.0, 0.0);
}

DriverSpec DriverSpec::risk(const LatticeSpec& lattice, RiskParams params, std::optional<double> c,
                            std::optional<double> alpha) {
    params.rate.check_against(lattice, "rate");
    check_zfunction(params.h, "h");
    check_zfunction(params.g, "g");
    // |df|^2 <= (r^2/4 + r^2/4 + L_h^2)(|dy|^2 + |dybar|^2 + |dz|^2) by Cauchy-Schwarz
    const double r = params.rate.max_abs();
    const double lh = params.h.lipschitz();
    const double lg = params.g.lipschitz();
    const double cc = settle_constant(c, 0.5 * r * r + lh * lh, "c");
    const double aa = settle_constant(alpha, lg * lg, "alpha");
    return DriverSpec(lattice, std::move(params), cc, aa, 0.0, 0.0);
}

DriverSpec DriverSpec::custom(const LatticeSpec& lattice, CustomDriver driver, double c, double alpha,
                              double malliavin_l1, double malliavin_l2) {
    if (!driver.f || !driver.g) throw Error(ErrorKind::InvalidDriver, "custom driver needs both f and g");
    if (!std::isfinite(c) || c < 0.0) throw Error(ErrorKind::InvalidDriver, "c must be finite and nonnegative");
    if (!std::isfinite(alpha) || alpha < 0.0)
        throw Error(ErrorKind::InvalidDriver, "alpha must be finite and nonnegative");
    return DriverSpec(lattice, std::move(driver), c, alpha, malliavin_l1, malliavin_l2);
}

DriverFamily DriverSpec::family() const noexcept {
    if (std::holds_alternative<LinearDriver>(body_)) return DriverFamily::linear;
    if (std::holds_alternative<RiskParams>(body_)) return DriverFamily::risk;
    return DriverFamily::custom;
}

void DriverSpec::check_indices(int t_idx, int s_idx) const {
    const int n = lattice_.n_steps;
    if (t_idx < 0 || t_idx > n || s_idx < 0 || s_idx > n)
        throw Error(ErrorKind::InvalidIndex, "grid indices (" + std::to_string(t_idx) + ", " + std::to_string(s_idx) +
                                                 ") outside [0, " + std::to_string(n) + "]");
}

double DriverSpec::eval_f(int t_idx, int s_idx, const DriverArgs& a) const {
    check_indices(t_idx, s_idx);
    if (const auto* lin = std::get_if<LinearDriver>(&body_)) return lin->f(a);
    if (const auto* rk = std::get_if<RiskParams>(&body_))
        return -0.5 * rk->rate.at(s_idx) * (a.y + a.ybar) + rk->h.value(a.z);
    const auto& cu = std::get<CustomDriver>(body_);
    return cu.f(lattice_.time(t_idx), lattice_.time(s_idx), a);
}

double DriverSpec::eval_g(int t_idx, int s_idx, const DriverArgs& a) const {
    check_indices(t_idx, s_idx);
    if (const auto* lin = std::get_if<LinearDriver>(&body_)) return lin->g(a);
    if (const auto* rk = std::get_if<RiskParams>(&body_)) return rk->g.value(a.z);
    const auto& cu = std::get<CustomDriver>(body_);
    return cu.g(lattice_.time(t_idx), lattice_.time(s_idx), a);
}

bool DriverSpec::has_partials() const noexcept {
    if (std::holds_alternative<LinearDriver>(body_)) return true;
    if (const auto* rk = std::get_if<RiskParams>(&body_)) return rk->h.differentiable() && rk->g.differentiable();
    return static_cast<bool>(std::get<CustomDriver>(body_).partials);
}

DriverPartials DriverSpec::eval_partials(int t_idx, int s_idx, const DriverArgs& a) const {
    check_indices(t_idx, s_idx);
    if (!has_partials())
        throw Error(ErrorKind::PartialsUnavailable, "driver has no analytic partial derivatives");
    if (const auto* lin = std::get_if<LinearDriver>(&body_)) return {lin->f.gradient(), lin->g.gradient()};
    if (const auto* rk = std::get_if<RiskParams>(&body_)) {
        const double half_r = -0.5 * rk->rate.at(s_idx);
        return {{half_r, rk->h.derivative(a.z), 0.0, half_r, 0.0, 0.0}, {0.0, rk->g.derivative(a.z), 0.0, 0.0, 0.0, 0.0}};
    }
    const auto& cu = std::get<CustomDriver>(body_);
    return cu.partials(lattice_.time(t_idx), lattice_.time(s_idx), a);
}

bool DriverSpec::uses_sigma() const noexcept {
    if (const auto* lin = std::get_if<LinearDriver>(&body_))
        return lin->f.sigma != 0.0 || lin->f.sigmabar != 0.0 || lin->g.sigma != 0.0 || lin->g.sigmabar != 0.0;
    if (std::holds_alternative<RiskParams>(body_)) return false;
    return std::get<CustomDriver>(body_).uses_sigma;
}

bool DriverSpec::uses_mean_field() const noexcept {
    if (const auto* lin = std::get_if<LinearDriver>(&body_))
        return lin->f.ybar != 0.0 || lin->f.zbar != 0.0 || lin->f.sigmabar != 0.0 || lin->g.ybar != 0.0 ||
               lin->g.zbar != 0.0 || lin->g.sigmabar != 0.0;
    if (const auto* rk = std::get_if<RiskParams>(&body_)) return rk->rate.max_abs() != 0.0;
    return std::get<CustomDriver>(body_).uses_mean_field;
}

double beta_threshold(double c, double alpha, double horizon) {
    check_alpha(alpha, horizon);
    return (20.0 * c * (horizon + 1.0) + 2.0 * alpha) / (1.0 - 2.0 * alpha * (horizon + 2.0));
}

double beta_default(const DriverSpec& driver, double horizon, double safety) {
    if (!(safety > 1.0)) throw Error(ErrorKind::InputError, "safety factor must exceed 1");
    const double threshold = beta_threshold(driver.lipschitz_c(), driver.lipschitz_alpha(), horizon);
    return threshold > 0.0 ? safety * threshold : safety;
}

double gamma_theory(double c, double alpha, double horizon, double beta) noexcept {
    return (20.0 * c * (horizon + 1.0) + 2.0 * alpha) / beta + 2.0 * alpha * (horizon + 2.0);
}

// --- TerminalSpec -------------------------------------------------------------------

double terminal_shape_value(TerminalShape shape, double x) noexcept {
    switch (shape) {
    case TerminalShape::identity: return x;
    case TerminalShape::sin: return std::sin(x);
    case TerminalShape::cos: return std::cos(x);
    case TerminalShape::tanh: return std::tanh(x);
    case TerminalShape::square: return x * x;
    case TerminalShape::softabs: return std::sqrt(1.0 + x * x);
    }
    return x;
}

TerminalSpec TerminalSpec::deterministic(GridFunction phi) {
    TerminalSpec t;
    t.phi_ = std::move(phi);
    return t;
}

TerminalSpec TerminalSpec::affine(GridFunction phi, GridFunction theta) {
    TerminalSpec t = deterministic(std::move(phi));
    t.terms_.push_back({std::move(theta), TerminalShape::identity});
    return t;
}

TerminalSpec TerminalSpec::smooth(GridFunction phi, GridFunction theta, TerminalShape shape) {
    TerminalSpec t = deterministic(std::move(phi));
    t.terms_.push_back({std::move(theta), shape});
    return t;
}

TerminalFamily TerminalSpec::family() const noexcept {
    if (terms_.empty()) return TerminalFamily::deterministic;
    for (const auto& term : terms_)
        if (term.shape != TerminalShape::identity) return TerminalFamily::smooth_in_w;
    return TerminalFamily::affine_in_w;
}

RandomVariable TerminalSpec::value(const LatticeSpec& lattice, int t_idx, int particle) const {
    if (t_idx < 0 || t_idx > lattice.n_steps) throw Error(ErrorKind::InvalidIndex, "terminal time index out of range");
    phi_.check_against(lattice, "terminal phi");
    const SigmaField ft{lattice.n_steps, lattice.n_steps};
    RandomVariable out = RandomVariable::constant(lattice, ft, phi_.at(t_idx));
    if (terms_.empty()) return out;
    const RandomVariable wt = lift(w_walk(lattice, lattice.n_steps, particle), ft);
    for (const auto& term : terms_) {
        term.theta.check_against(lattice, "terminal theta");
        const double th = term.theta.at(t_idx);
        const auto w = wt.values();
        auto o = out.values();
        for (std::size_t s = 0; s < o.size(); ++s) o[s] += th * terminal_shape_value(term.shape, w[s]);
    }
    return out;
}

std::vector<RandomVariable> TerminalSpec::values(const LatticeSpec& lattice, int particle) const {
    std::vector<RandomVariable> out;
    for (int i = 0; i <= lattice.n_steps; ++i) out.push_back(value(lattice, i, particle));
    return out;
}

TerminalSpec TerminalSpec::scaled(double s) const {
    TerminalSpec t;
    t.phi_ = phi_.scaled(s);
    for (const auto& term : terms_) t.terms_.push_back({term.theta.scaled(s), term.shape});
    return t;
}

TerminalSpec TerminalSpec::shifted(double c) const {
    TerminalSpec t = *this;
    t.phi_ = phi_.plus(GridFunction(c));
    return t;
}

TerminalSpec TerminalSpec::plus(const TerminalSpec& other) const {
    TerminalSpec t = *this;
    t.phi_ = phi_.plus(other.phi_);
    t.terms_.insert(t.terms_.end(), other.terms_.begin(), other.terms_.end());
    return t;
}

TerminalSpec TerminalSpec::with_phi(GridFunction phi) const {
    TerminalSpec t = *this;
    t.phi_ = std::move(phi);
    return t;
}

} // namespace mfbdsvie
