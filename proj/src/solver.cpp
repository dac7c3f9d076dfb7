#include "mfbdsvie/solver.hpp"

#include "mfbdsvie/error.hpp"
#include "mfbdsvie/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mfbdsvie {

using Table = std::span<const double>;

RandomVariable evaluate_pointwise(const NodeArguments& a, const std::function<double(const DriverArgs&)>& fn) {
    const SigmaField field = a.y.field();
    for (const RandomVariable* v : {&a.z, &a.sigma, &a.ybar, &a.zbar, &a.sigmabar}) {
        if (!(v->field() == field)) throw Error(ErrorKind::LatticeMismatch, "node arguments on different fields");
    }
    std::vector<double> out(a.y.size());
    Table y = a.y.values(), z = a.z.values(), s = a.sigma.values();
    Table yb = a.ybar.values(), zb = a.zbar.values(), sb = a.sigmabar.values();
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = fn(DriverArgs{y[k], z[k], s[k], yb[k], zb[k], sb[k]});
    }
    return RandomVariable(a.y.lattice(), field, std::move(out));
}

namespace {

RandomVariable on_node(const RandomVariable& x, SigmaField node) {
    if (x.field() == node) return x;
    if (refines(node, x.field())) return lift(x, node);
    return lift(condexp(x, node), node);
}

RandomVariable mean_over(const std::vector<RandomVariable>& xs, SigmaField node) {
    RandomVariable acc = RandomVariable::constant(xs.front().lattice(), node, 0.0);
    const double w = 1.0 / static_cast<double>(xs.size());
    for (const auto& x : xs) accumulate(acc, on_node(x, node), w);
    return acc;
}

void check_system(const EquationSystem& sys, const Iterate& x) {
    if (sys.generator == nullptr) throw Error(ErrorKind::InvalidDriver, "equation system has no generator");
    if (sys.terminal.empty() || x.y.size() != sys.terminal.size() || x.z.size() != sys.terminal.size()) {
        throw Error(ErrorKind::LatticeMismatch, "iterate and terminal disagree on the particle count");
    }
    for (std::size_t k = 0; k < x.y.size(); ++k) {
        if (!(x.y[k].lattice == sys.lattice) || !(x.z[k].lattice == sys.lattice)) {
            throw Error(ErrorKind::LatticeMismatch, "iterate built on a different lattice");
        }
    }
}

} // namespace

RandomVariable DriverGenerator::f_term(int i, int j, const NodeArguments& args) const {
    return evaluate_pointwise(args, [&](const DriverArgs& a) { return driver_->eval_f(i, j, a); });
}

RandomVariable DriverGenerator::g_term(int i, int n, const NodeArguments& args) const {
    return evaluate_pointwise(args, [&](const DriverArgs& a) { return driver_->eval_g(i, n, a); });
}

Iterate Iterate::zeros(const LatticeSpec& lattice, int particles) {
    Iterate x;
    for (int k = 0; k < particles; ++k) {
        x.y.push_back(AdaptedPath::zeros(lattice));
        x.z.push_back(VolterraKernel::zeros(lattice));
    }
    return x;
}

NodeArguments node_arguments(const EquationSystem& sys, const Iterate& x, int particle, int i, int n) {
    const LatticeSpec& l = sys.lattice;
    const int N = l.n_steps;
    const SigmaField node = SigmaField::at(n);
    const auto zero = [&] { return RandomVariable::constant(l, node, 0.0); };
    const auto kernel = [&](const VolterraKernel& z) { return n < N ? on_node(z.at(i, n), node) : zero(); };
    const auto transposed = [&](const VolterraKernel& z) { return i < N ? on_node(z.at(n, i), node) : zero(); };

    const auto& yk = x.y[static_cast<std::size_t>(particle)];
    const auto& zk = x.z[static_cast<std::size_t>(particle)];
    NodeArguments a{on_node(yk[n], node), kernel(zk), transposed(zk), zero(), zero(), zero()};

    if (sys.mode == MeanFieldMode::expectation) {
        a.ybar = RandomVariable::constant(l, node, expectation(yk[n]));
        a.zbar = RandomVariable::constant(l, node, n < N ? expectation(zk.at(i, n)) : 0.0);
        a.sigmabar = RandomVariable::constant(l, node, i < N ? expectation(zk.at(n, i)) : 0.0);
    } else {
        std::vector<RandomVariable> ys, zs, ss;
        for (std::size_t k = 0; k < x.y.size(); ++k) {
            ys.push_back(x.y[k][n]);
            zs.push_back(kernel(x.z[k]));
            ss.push_back(transposed(x.z[k]));
        }
        a.ybar = mean_over(ys, node);
        a.zbar = mean_over(zs, node);
        a.sigmabar = mean_over(ss, node);
    }
    return a;
}

RandomVariable build_phi(const EquationSystem& sys, const Iterate& x, int particle, int i) {
    const LatticeSpec& l = sys.lattice;
    const int N = l.n_steps;
    RandomVariable phi = lift(sys.terminal[static_cast<std::size_t>(particle)][static_cast<std::size_t>(i)],
                              SigmaField{N, i});
    for (int j = i; j < N; ++j) {
        accumulate(phi, sys.generator->f_term(i, j, node_arguments(sys, x, particle, i, j)), l.dt);
        const RandomVariable g = sys.generator->g_term(i, j + 1, node_arguments(sys, x, particle, i, j + 1));
        accumulate(phi, g * b_increment(l, j, particle));
    }
    return phi;
}

Iterate apply_gamma(const EquationSystem& sys, const Iterate& x, bool extend) {
    check_system(sys, x);
    const LatticeSpec& l = sys.lattice;
    const int N = l.n_steps;
    Iterate out = Iterate::zeros(l, sys.particles());
    for (int k = 0; k < sys.particles(); ++k) {
        auto& y = out.y[static_cast<std::size_t>(k)];
        auto& z = out.z[static_cast<std::size_t>(k)];
        for (int i = 0; i <= N; ++i) {
            const RandomVariable phi = build_phi(sys, x, k, i);
            y[i] = condexp(phi, SigmaField::at(i));
            for (int j = i; j < N; ++j) {
                z.at(i, j) = (1.0 / l.dt) * condexp(phi * w_increment(l, j, k), SigmaField::at(j));
            }
        }
        if (extend) z = m_extend(y, z, k);
    }
    return out;
}

double iterate_norm(const Iterate& x, double beta) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.y.size(); ++k) {
        const double m = m_beta_norm(x.y[k], x.z[k], BetaWeight(beta));
        s += m * m;
    }
    return std::sqrt(s);
}

Iterate iterate_difference(const Iterate& a, const Iterate& b) {
    if (a.y.size() != b.y.size()) throw Error(ErrorKind::LatticeMismatch, "particle counts differ");
    Iterate d;
    for (std::size_t k = 0; k < a.y.size(); ++k) {
        d.y.push_back(difference(a.y[k], b.y[k]));
        d.z.push_back(difference(a.z[k], b.z[k]));
    }
    return d;
}

double iterate_max_abs(const Iterate& x) {
    double m = 0.0;
    for (std::size_t k = 0; k < x.y.size(); ++k) {
        for (const auto& v : x.y[k].y) m = std::max(m, max_abs(v));
        for (const auto& v : x.z[k].z) m = std::max(m, max_abs(v));
    }
    return m;
}

double system_residual(const EquationSystem& sys, const Iterate& x) {
    check_system(sys, x);
    const LatticeSpec& l = sys.lattice;
    const int N = l.n_steps;
    double worst = 0.0;
    for (int k = 0; k < sys.particles(); ++k) {
        const auto& z = x.z[static_cast<std::size_t>(k)];
        for (int i = 0; i <= N; ++i) {
            RandomVariable r = build_phi(sys, x, k, i);
            accumulate(r, x.y[static_cast<std::size_t>(k)][i], -1.0);
            if (i < N) {
                std::vector<RandomVariable> row;
                for (int j = i; j < N; ++j) row.push_back(z.at(i, j));
                accumulate(r, forward_integral(l, row, i, N, k), -1.0);
            }
            worst = std::max(worst, max_abs(r));
        }
    }
    return worst;
}

std::pair<Iterate, PicardTrace> picard_iterate(const EquationSystem& sys, Iterate start, const PicardOptions& opts) {
    if (!(opts.tol > 0.0)) throw Error(ErrorKind::InputError, "tol must be positive");
    if (opts.max_iter < 1) throw Error(ErrorKind::InputError, "max_iter must be at least 1");
    PicardTrace trace;
    Iterate x = std::move(start);
    for (int it = 1; it <= opts.max_iter; ++it) {
        Iterate next = apply_gamma(sys, x, !opts.defer_extension);
        const Iterate delta = iterate_difference(next, x);
        const double d = iterate_norm(delta, sys.beta);
        const double sup = iterate_max_abs(delta);
        if (!trace.diff_trace.empty()) {
            const double prev = trace.diff_trace.back();
            trace.ratio_trace.push_back(prev > 0.0 ? d / prev : 0.0);
        }
        trace.diff_trace.push_back(d);
        trace.iterations = it;
        x = std::move(next);
        if (!std::isfinite(d)) break;
        if (d <= opts.tol * std::max(1.0, iterate_norm(x, sys.beta)) &&
            sup <= opts.tol * std::max(1.0, iterate_max_abs(x))) {
            trace.converged = true;
            break;
        }
    }
    if (!trace.converged) {
        const bool stalled = trace.ratio_trace.empty() || !(trace.ratio_trace.back() < 1.0);
        if (stalled) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "Picard iteration did not contract after %d steps (last diff %.3g)",
                          trace.iterations, trace.diff_trace.back());
            throw Error(ErrorKind::NoConvergence, msg);
        }
    }
    if (opts.defer_extension) {
        for (int k = 0; k < sys.particles(); ++k) {
            x.z[static_cast<std::size_t>(k)] = m_extend(x.y[static_cast<std::size_t>(k)], x.z[static_cast<std::size_t>(k)], k);
        }
    }
    return {std::move(x), std::move(trace)};
}

double geometric_mean(const std::vector<double>& ratios) {
    if (ratios.empty()) return 0.0;
    double s = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0)) return 0.0;
        s += std::log(r);
    }
    return std::exp(s / static_cast<double>(ratios.size()));
}

// --- single equation ----------------------------------------------------------

Scenario make_scenario(DriverSpec driver, TerminalSpec terminal, std::optional<double> beta, double safety) {
    const LatticeSpec l = driver.lattice();
    const double b = beta ? *beta : beta_default(driver, l.horizon, safety);
    BetaWeight check(b);
    (void)check;
    return Scenario{l, std::move(driver), std::move(terminal), b};
}

EquationSystem make_system(const Scenario& sc, const Generator& gen) {
    EquationSystem sys;
    sys.lattice = sc.lattice;
    sys.generator = &gen;
    sys.terminal = {sc.terminal.values(sc.lattice)};
    sys.mode = MeanFieldMode::expectation;
    sys.beta = sc.beta;
    return sys;
}

namespace {

Iterate single(AdaptedPath y, VolterraKernel z) {
    Iterate x;
    x.y.push_back(std::move(y));
    x.z.push_back(std::move(z));
    return x;
}

Solution finish(const Scenario& sc, const EquationSystem& sys, Iterate x, const PicardTrace& trace) {
    Solution s{std::move(x.y.front()), std::move(x.z.front()), {}};
    s.report.iterations = trace.iterations;
    s.report.diff_trace = trace.diff_trace;
    s.report.ratio_trace = trace.ratio_trace;
    s.report.converged = trace.converged;
    s.report.gamma_theory =
        gamma_theory(sc.driver.lipschitz_c(), sc.driver.lipschitz_alpha(), sc.lattice.horizon, sc.beta);
    s.report.final_residual = system_residual(sys, single(s.y, s.z));
    s.report.m_beta = m_beta_norm(s.y, s.z, BetaWeight(sc.beta));
    s.report.l_beta = l_beta_norm(s.y, s.z, BetaWeight(sc.beta));
    return s;
}

} // namespace

std::pair<AdaptedPath, VolterraKernel> gamma_map(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z) {
    DriverGenerator gen(sc.driver);
    Iterate out = apply_gamma(make_system(sc, gen), single(y, z));
    return {std::move(out.y.front()), std::move(out.z.front())};
}

Solution picard_solve(const Scenario& sc, double tol, int max_iter, bool defer_extension) {
    DriverGenerator gen(sc.driver);
    const EquationSystem sys = make_system(sc, gen);
    auto [x, trace] = picard_iterate(sys, Iterate::zeros(sc.lattice), PicardOptions{tol, max_iter, defer_extension});
    return finish(sc, sys, std::move(x), trace);
}

Solution picard_solve_from(const Scenario& sc, AdaptedPath y0, VolterraKernel z0, double tol, int max_iter) {
    DriverGenerator gen(sc.driver);
    const EquationSystem sys = make_system(sc, gen);
    auto [x, trace] = picard_iterate(sys, single(std::move(y0), std::move(z0)), PicardOptions{tol, max_iter, false});
    return finish(sc, sys, std::move(x), trace);
}

double residual(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z) {
    DriverGenerator gen(sc.driver);
    return system_residual(make_system(sc, gen), single(y, z));
}

std::pair<AdaptedPath, VolterraKernel> representation_pair(const LatticeSpec& lattice, const TerminalSpec& zeta) {
    const DriverSpec zero = DriverSpec::linear(lattice, {}, {});
    const Scenario sc{lattice, zero, zeta, 1.0};
    return gamma_map(sc, AdaptedPath::zeros(lattice), VolterraKernel::zeros(lattice));
}

StabilityReport stability_compare(const Scenario& sc1, const Scenario& sc2, double tol, int max_iter) {
    if (!(sc1.lattice == sc2.lattice)) throw Error(ErrorKind::LatticeMismatch, "scenarios live on different lattices");
    if (sc1.beta != sc2.beta) throw Error(ErrorKind::InputError, "scenarios must share beta");
    const LatticeSpec& l = sc1.lattice;
    const int N = l.n_steps;
    const BetaWeight w(sc1.beta);

    const Solution s1 = picard_solve(sc1, tol, max_iter);
    const Solution s2 = picard_solve(sc2, tol, max_iter);

    StabilityReport r;
    const double m = m_beta_norm(difference(s1.y, s2.y), difference(s1.z, s2.z), w);
    r.lhs = m * m;
    r.solution_distance = m;

    for (int i = 0; i <= N; ++i) {
        const RandomVariable d = sc1.terminal.value(l, i) - sc2.terminal.value(l, i);
        r.zeta_term += std::exp(w.beta * l.time(i)) * expectation(d * d) * l.dt;
    }

    DriverGenerator g1(sc1.driver), g2(sc2.driver);
    const EquationSystem sys2 = make_system(sc2, g2);
    const Iterate x2 = single(s2.y, s2.z);
    for (int i = 0; i < N; ++i) {
        for (int j = i; j < N; ++j) {
            const double weight = std::exp(w.beta * l.time(j)) * l.dt * l.dt;
            const NodeArguments af = node_arguments(sys2, x2, 0, i, j);
            const RandomVariable df = g1.f_term(i, j, af) - g2.f_term(i, j, af);
            r.f_term += weight * expectation(df * df);
            const NodeArguments ag = node_arguments(sys2, x2, 0, i, j + 1);
            const RandomVariable dg = g1.g_term(i, j + 1, ag) - g2.g_term(i, j + 1, ag);
            r.g_term += weight * expectation(dg * dg);
        }
    }
    r.rhs = r.zeta_term + r.f_term + r.g_term;
    r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
    return r;
}

std::string summarize(const SolverReport& report) {
    std::ostringstream os;
    os << "iterations " << report.iterations << '\n';
    os << "converged " << (report.converged ? "true" : "false") << '\n';
    os << "gamma_theory " << format_real(report.gamma_theory) << '\n';
    os << "geometric_mean_ratio " << format_real(geometric_mean(report.ratio_trace)) << '\n';
    os << "final_residual " << format_real(report.final_residual) << '\n';
    os << "m_beta " << format_real(report.m_beta) << '\n';
    os << "l_beta " << format_real(report.l_beta) << '\n';
    return os.str();
}

CsvTable trace_table(const SolverReport& report) {
    CsvTable t({"iteration", "diff_norm", "ratio"});
    for (std::size_t k = 0; k < report.diff_trace.size(); ++k) {
        t.add_row({std::to_string(k + 1), format_real(report.diff_trace[k]),
                   k == 0 ? std::string() : format_real(report.ratio_trace[k - 1])});
    }
    return t;
}

} // namespace mfbdsvie
