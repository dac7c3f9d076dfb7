#include "mfbdsvie/risk.hpp"

#include "mfbdsvie/error.hpp"

#include <algorithm>
#include <cmath>

namespace mfbdsvie {

namespace {

AxiomReport make_report(std::string name, double worst) {
    AxiomReport r{std::move(name), std::max(worst, 0.0), false};
    r.pass = r.worst_violation <= kAxiomSlack;
    return r;
}

/// max over i >= from and paths of op(a_i, b_i)
double worst_over(const AdaptedPath& a, const AdaptedPath& b, int from, const std::function<double(double, double)>& op) {
    double worst = 0.0;
    for (int i = from; i <= a.n_steps(); ++i) {
        const RandomVariable d = combine(a[i], b[i], op);
        for (double v : d.values()) worst = std::max(worst, v);
    }
    return worst;
}

void require(bool ok, bool enforce, const char* what) {
    if (enforce && !ok) throw Error(ErrorKind::FlagMissing, what);
}

} // namespace

DriverSpec RiskSpec::driver() const { return DriverSpec::risk(lattice, params); }

AdaptedPath rho(const RiskSpec& rs, const PayoffStream& p) {
    const Scenario sc = make_scenario(rs.driver(), p.zeta.scaled(-1.0), rs.beta);
    return picard_solve(sc, rs.tol, rs.max_iter).y;
}

AxiomReport axiom_past_independence(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2, int t_idx) {
    if (t_idx < 0 || t_idx > rs.lattice.n_steps) throw Error(ErrorKind::InvalidIndex, "t_idx outside the grid");
    const AdaptedPath a = rho(rs, p1), b = rho(rs, p2);
    return make_report("past_independence",
                       worst_over(a, b, t_idx, [](double x, double y) { return std::abs(x - y); }));
}

AxiomReport axiom_monotonicity(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2) {
    for (int i = 0; i <= rs.lattice.n_steps; ++i) {
        const RandomVariable d = p1.zeta.value(rs.lattice, i) - p2.zeta.value(rs.lattice, i);
        if (*std::max_element(d.values().begin(), d.values().end()) > 0.0)
            throw Error(ErrorKind::InputError, "monotonicity needs payoff 1 <= payoff 2 on every path");
    }
    const AdaptedPath a = rho(rs, p1), b = rho(rs, p2);
    return make_report("monotonicity", worst_over(a, b, 0, [](double x, double y) { return y - x; }));
}

AxiomReport axiom_translation(const RiskSpec& rs, const PayoffStream& p, double c) {
    const AdaptedPath a = rho(rs, p);
    const AdaptedPath b = rho(rs, PayoffStream{p.zeta.shifted(c)});
    const std::vector<double> m = translation_factor(rs.lattice, rs.params.rate);
    double worst = 0.0;
    for (int i = 0; i <= rs.lattice.n_steps; ++i) {
        const RandomVariable d = b[i] - a[i];
        const double expected = -c * m[static_cast<std::size_t>(i)];
        for (double v : d.values()) worst = std::max(worst, std::abs(v - expected));
    }
    return make_report("translation", worst);
}

AxiomReport axiom_convexity(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2, double lambda,
                            bool enforce_flags) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::InputError, "lambda must lie in [0, 1]");
    require(rs.params.h.convex(), enforce_flags, "convexity needs a convex h");
    require(rs.params.g.affine(), enforce_flags, "convexity needs g affine in z");
    const AdaptedPath a = rho(rs, p1), b = rho(rs, p2);
    const AdaptedPath mix = rho(rs, PayoffStream{p1.zeta.scaled(lambda).plus(p2.zeta.scaled(1.0 - lambda))});
    double worst = 0.0;
    for (int i = 0; i <= rs.lattice.n_steps; ++i) {
        const RandomVariable bound = lambda * a[i] + (1.0 - lambda) * b[i];
        const RandomVariable d = mix[i] - bound;
        for (double v : d.values()) worst = std::max(worst, v);
    }
    return make_report("convexity", worst);
}

AxiomReport axiom_positive_homogeneity(const RiskSpec& rs, const PayoffStream& p, double lambda, bool enforce_flags) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::InputError, "lambda must be positive");
    require(rs.params.h.positively_homogeneous(), enforce_flags, "positive homogeneity needs a homogeneous h");
    require(rs.params.g.positively_homogeneous(), enforce_flags, "positive homogeneity needs a homogeneous g");
    const AdaptedPath a = rho(rs, p);
    const AdaptedPath b = rho(rs, PayoffStream{p.zeta.scaled(lambda)});
    return make_report("positive_homogeneity",
                       worst_over(b, a, 0, [lambda](double x, double y) { return std::abs(x - lambda * y); }));
}

AxiomReport axiom_subadditivity(const RiskSpec& rs, const PayoffStream& p1, const PayoffStream& p2,
                                bool enforce_flags) {
    require(rs.params.h.subadditive(), enforce_flags, "subadditivity needs a subadditive h");
    require(rs.params.g.additive(), enforce_flags, "subadditivity needs an additive g");
    const AdaptedPath a = rho(rs, p1), b = rho(rs, p2);
    const AdaptedPath sum = rho(rs, PayoffStream{p1.zeta.plus(p2.zeta)});
    double worst = 0.0;
    for (int i = 0; i <= rs.lattice.n_steps; ++i) {
        const RandomVariable d = sum[i] - (a[i] + b[i]);
        for (double v : d.values()) worst = std::max(worst, v);
    }
    return make_report("subadditivity", worst);
}

std::vector<double> translation_factor(const LatticeSpec& lattice, const GridFunction& rate) {
    rate.check_against(lattice, "rate");
    const int n = lattice.n_steps;
    std::vector<double> m(static_cast<std::size_t>(n + 1), 1.0);
    for (int i = n - 1; i >= 0; --i) {
        m[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i + 1)] / (1.0 + rate.at(i) * lattice.dt);
    }
    return m;
}

DiscountConvergence discount_convergence(const std::function<double(double)>& rate, double integral, double horizon,
                                         const std::vector<int>& steps) {
    DiscountConvergence out;
    const double exact = std::exp(-integral);
    for (int n : steps) {
        if (n < 1 || !(horizon > 0.0)) throw Error(ErrorKind::InputError, "convergence study needs n >= 1, T > 0");
        // scalar recursion only: no path table, so the step guard does not apply
        const double dt = horizon / n;
        const LatticeSpec l{n, horizon, dt, std::sqrt(dt), 1};
        std::vector<double> r;
        for (int i = 0; i <= n; ++i) r.push_back(rate(l.time(i)));
        const double m0 = translation_factor(l, GridFunction(r)).front();
        out.steps.push_back(n);
        out.errors.push_back(std::abs(m0 - exact));
        if (out.errors.size() > 1) {
            const double prev = out.errors[out.errors.size() - 2];
            out.ratios.push_back(out.errors.back() > 0.0 ? prev / out.errors.back() : 0.0);
        }
    }
    return out;
}

CsvTable axiom_table(const std::vector<AxiomReport>& reports) {
    CsvTable t({"axiom", "worst_violation", "pass"});
    for (const auto& r : reports) t.add_row({r.axiom, format_real(r.worst_violation), r.pass ? "true" : "false"});
    return t;
}

} // namespace mfbdsvie
