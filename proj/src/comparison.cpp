#include "mfbdsvie/comparison.hpp"

#include "mfbdsvie/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace mfbdsvie {

namespace {

constexpr double kArgRange = 4.0;
constexpr double kMonotoneSlack = 1e-12;

/// f-side of one spec, g-side of another, optionally with E[Y] frozen.
class SplitGenerator final : public Generator {
public:
    SplitGenerator(const DriverSpec& f, const DriverSpec& g, const std::vector<double>* frozen)
        : f_(&f), g_(&g), frozen_(frozen) {}

    RandomVariable f_term(int i, int j, const NodeArguments& args) const override {
        return evaluate_pointwise(freeze(args, j), [&](const DriverArgs& a) { return f_->eval_f(i, j, a); });
    }
    RandomVariable g_term(int i, int n, const NodeArguments& args) const override {
        return evaluate_pointwise(freeze(args, n), [&](const DriverArgs& a) { return g_->eval_g(i, n, a); });
    }

private:
    NodeArguments freeze(const NodeArguments& args, int n) const {
        if (frozen_ == nullptr) return args;
        NodeArguments a = args;
        a.ybar = RandomVariable::constant(args.y.lattice(), args.y.field(), (*frozen_)[static_cast<std::size_t>(n)]);
        return a;
    }

    const DriverSpec* f_;
    const DriverSpec* g_;
    const std::vector<double>* frozen_;
};

bool reduced(const DriverSpec& d) {
    if (const auto* lin = d.as_linear()) {
        for (const auto* c : {&lin->f, &lin->g}) {
            if (c->sigma != 0.0 || c->zbar != 0.0 || c->sigmabar != 0.0) return false;
        }
        return true;
    }
    if (d.as_risk() != nullptr) return true;
    return !d.uses_sigma();
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

double worst_excess(const TerminalSpec& lo, const TerminalSpec& hi, const LatticeSpec& l) {
    double worst = -INFINITY;
    for (int i = 0; i <= l.n_steps; ++i) {
        const RandomVariable d = lo.value(l, i) - hi.value(l, i);
        for (double v : d.values()) worst = std::max(worst, v);
    }
    return worst;
}

AdaptedPath solve_with(const ComparisonScenario& cs, const Generator& gen, const TerminalSpec& zeta, double tol,
                       int max_iter) {
    EquationSystem sys;
    sys.lattice = cs.lattice();
    sys.generator = &gen;
    sys.terminal = {zeta.values(sys.lattice)};
    sys.beta = comparison_beta(cs);
    PicardOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    opts.defer_extension = true;  // reduced form never reads Delta^c
    auto [x, trace] = picard_iterate(sys, Iterate::zeros(sys.lattice), opts);
    (void)trace;
    return std::move(x.y.front());
}

double path_norm(const AdaptedPath& y, double beta) {
    return m_beta_norm(y, VolterraKernel::zeros(y.lattice), BetaWeight(beta));
}

} // namespace

HypothesisReport audit_hypotheses(const ComparisonScenario& cs, int n_samples) {
    const LatticeSpec& l = cs.lattice();
    for (const DriverSpec* d : {&cs.fbar, &cs.f2, &cs.g}) {
        if (!(d->lattice() == l)) throw Error(ErrorKind::LatticeMismatch, "comparison drivers on different lattices");
    }
    if (n_samples < 1) throw Error(ErrorKind::InputError, "n_samples must be positive");

    HypothesisReport r;
    r.samples = n_samples;
    r.reduced_form = reduced(cs.f1) && reduced(cs.fbar) && reduced(cs.f2) && reduced(cs.g);
    r.flags_declared = cs.fbar_nondecreasing_y && cs.fbar_nondecreasing_ybar;
    r.order_violation = -INFINITY;

    std::mt19937_64 rng(20240611u);
    std::uniform_int_distribution<int> node(0, l.n_steps);
    for (int k = 0; k < n_samples; ++k) {
        int t = node(rng), s = node(rng);
        if (t > s) std::swap(t, s);
        DriverArgs a;
        a.y = uniform(rng, -kArgRange, kArgRange);
        a.z = uniform(rng, -kArgRange, kArgRange);
        a.ybar = uniform(rng, -kArgRange, kArgRange);
        const double fb = cs.fbar.eval_f(t, s, a);
        r.order_violation = std::max({r.order_violation, cs.f1.eval_f(t, s, a) - fb, fb - cs.f2.eval_f(t, s, a)});

        DriverArgs up = a;
        up.y = a.y + uniform(rng, 0.0, kArgRange);
        r.monotone_y_violation = std::max(r.monotone_y_violation, fb - cs.fbar.eval_f(t, s, up));
        up = a;
        up.ybar = a.ybar + uniform(rng, 0.0, kArgRange);
        r.monotone_ybar_violation = std::max(r.monotone_ybar_violation, fb - cs.fbar.eval_f(t, s, up));
    }
    r.order_violation = std::max(r.order_violation, 0.0);
    r.terminal_violation = std::max({0.0, worst_excess(cs.zeta1, cs.middle_terminal(), l),
                                     worst_excess(cs.middle_terminal(), cs.zeta2, l)});
    return r;
}

HypothesisReport check_hypotheses(const ComparisonScenario& cs, int n_samples) {
    HypothesisReport r = audit_hypotheses(cs, n_samples);
    if (!r.pass()) {
        char msg[256];
        std::snprintf(msg, sizeof msg,
                      "comparison hypotheses fail: order %.3g, monotone y %.3g, monotone ybar %.3g, terminal %.3g%s%s",
                      r.order_violation, r.monotone_y_violation, r.monotone_ybar_violation, r.terminal_violation,
                      r.reduced_form ? "" : ", driver not in reduced form",
                      r.flags_declared ? "" : ", monotonicity not declared");
        throw Error(ErrorKind::HypothesisViolated, msg);
    }
    return r;
}

double comparison_beta(const ComparisonScenario& cs) {
    double c = 0.0, alpha = 0.0;
    for (const DriverSpec* d : {&cs.f1, &cs.fbar, &cs.f2, &cs.g}) {
        c = std::max(c, d->lipschitz_c());
        alpha = std::max(alpha, d->lipschitz_alpha());
    }
    const double threshold = beta_threshold(c, alpha, cs.lattice().horizon);
    return threshold > 0.0 ? 1.5 * threshold : 1.5;
}

AdaptedPath solve_reduced(const ComparisonScenario& cs, const DriverSpec& f, const TerminalSpec& zeta, double tol,
                          int max_iter) {
    const SplitGenerator gen(f, cs.g, nullptr);
    return solve_with(cs, gen, zeta, tol, max_iter);
}

AdaptedPath solve_frozen(const ComparisonScenario& cs, const DriverSpec& f, const TerminalSpec& zeta,
                         const std::vector<double>& frozen, double tol, int max_iter) {
    if (frozen.size() != static_cast<std::size_t>(cs.lattice().n_steps + 1)) {
        throw Error(ErrorKind::InputError, "frozen mean needs one value per grid node");
    }
    const SplitGenerator gen(f, cs.g, &frozen);
    return solve_with(cs, gen, zeta, tol, max_iter);
}

MonotoneChain monotone_iteration(const ComparisonScenario& cs, int p_max, double tol) {
    if (p_max < 1) throw Error(ErrorKind::InputError, "p_max must be at least 1");
    const LatticeSpec& l = cs.lattice();
    const double beta = comparison_beta(cs);
    MonotoneChain chain;
    chain.y.push_back(solve_reduced(cs, cs.f2, cs.zeta2, tol));
    for (int p = 1; p <= p_max; ++p) {
        const AdaptedPath& prev = chain.y.back();
        std::vector<double> frozen;
        for (int n = 0; n <= l.n_steps; ++n) frozen.push_back(expectation(prev[n]));
        AdaptedPath next = solve_frozen(cs, cs.fbar, cs.middle_terminal(), frozen, tol);

        double rise = -INFINITY;
        int where = 0;
        for (int i = 0; i <= l.n_steps; ++i) {
            const RandomVariable d = next[i] - prev[i];
            const double m = *std::max_element(d.values().begin(), d.values().end());
            if (m > rise) {
                rise = m;
                where = i;
            }
        }
        chain.worst_increase = p == 1 ? rise : std::max(chain.worst_increase, rise);
        const double step = path_norm(difference(next, prev), beta);
        if (!chain.step_norms.empty()) {
            const double last = chain.step_norms.back();
            chain.ratios.push_back(last > 0.0 ? step / last : 0.0);
        }
        chain.step_norms.push_back(step);
        chain.y.push_back(std::move(next));
        if (rise > kMonotoneSlack) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "monotone iteration rose by %.3g at step %d, t_idx %d", rise, p, where);
            throw Error(ErrorKind::MonotonicityBroken, msg);
        }
    }
    return chain;
}

ComparisonVerdict compare_solve(const ComparisonScenario& cs, double tol, int max_iter) {
    ComparisonVerdict v;
    v.hypotheses = check_hypotheses(cs);
    const LatticeSpec& l = cs.lattice();
    const AdaptedPath y1 = solve_reduced(cs, cs.f1, cs.zeta1, tol, max_iter);
    const AdaptedPath y2 = solve_reduced(cs, cs.f2, cs.zeta2, tol, max_iter);
    const AdaptedPath yb = solve_reduced(cs, cs.fbar, cs.middle_terminal(), tol, max_iter);
    const auto min_of = [](const RandomVariable& x) { return *std::min_element(x.values().begin(), x.values().end()); };
    v.overall_min_gap = INFINITY;
    for (int i = 0; i <= l.n_steps; ++i) {
        v.min_gap.push_back(min_of(y2[i] - y1[i]));
        v.lower_gap.push_back(min_of(yb[i] - y1[i]));
        v.upper_gap.push_back(min_of(y2[i] - yb[i]));
        v.overall_min_gap = std::min(v.overall_min_gap, v.min_gap.back());
    }
    v.pass = v.overall_min_gap >= -1e-10;
    return v;
}

CsvTable verdict_table(const ComparisonVerdict& v) {
    CsvTable t({"t_idx", "min_gap"});
    for (std::size_t i = 0; i < v.min_gap.size(); ++i) t.add_row({std::to_string(i), format_real(v.min_gap[i])});
    return t;
}

} // namespace mfbdsvie
