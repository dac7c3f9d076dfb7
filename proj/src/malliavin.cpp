#include "mfbdsvie/malliavin.hpp"

#include "mfbdsvie/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace mfbdsvie {

namespace {

void check_r(const LatticeSpec& l, int r_idx) {
    if (r_idx < 0 || r_idx >= l.n_steps) throw Error(ErrorKind::InvalidIndex, "r_idx must lie in [0, N)");
}

std::size_t slot(const LatticeSpec& l, int i, int n) {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(l.n_steps + 1) + static_cast<std::size_t>(n);
}

std::array<const RandomVariable*, 6> arg_list(const NodeArguments& a) {
    return {&a.y, &a.z, &a.sigma, &a.ybar, &a.zbar, &a.sigmabar};
}

/// sum_k coef[k] * arg[k] over the first `count` arguments
RandomVariable contract(const CoefficientSet& coef, const NodeArguments& a, int count) {
    const auto args = arg_list(a);
    std::vector<double> out(a.y.size(), 0.0);
    for (int k = 0; k < count; ++k) {
        const auto c = coef[static_cast<std::size_t>(k)].values();
        const auto x = args[static_cast<std::size_t>(k)]->values();
        for (std::size_t s = 0; s < out.size(); ++s) out[s] += c[s] * x[s];
    }
    return RandomVariable(a.y.lattice(), a.y.field(), std::move(out));
}

class LinearizedGenerator final : public Generator {
public:
    explicit LinearizedGenerator(const LinearizedScenario& ls) : ls_(&ls) {}

    RandomVariable f_term(int i, int j, const NodeArguments& a) const override {
        if (i <= ls_->r_idx) return RandomVariable::constant(a.y.lattice(), a.y.field(), 0.0);
        return contract(ls_->f_at(i, j), a, ls_->mean_field_terms ? 6 : 3);
    }
    RandomVariable g_term(int i, int n, const NodeArguments& a) const override {
        if (i <= ls_->r_idx) return RandomVariable::constant(a.y.lattice(), a.y.field(), 0.0);
        return contract(ls_->g_at(i, n), a, ls_->mean_field_terms ? 6 : 3);
    }

private:
    const LinearizedScenario* ls_;
};

Iterate single(const AdaptedPath& y, const VolterraKernel& z) {
    Iterate x;
    x.y.push_back(y);
    x.z.push_back(z);
    return x;
}

/// Partial tables of the driver at the node arguments.
std::pair<CoefficientSet, CoefficientSet> partial_tables(const DriverSpec& d, int i, int n, const NodeArguments& a) {
    const std::size_t size = a.y.size();
    std::array<std::vector<double>, 6> f, g;
    for (auto& v : f) v.resize(size);
    for (auto& v : g) v.resize(size);
    const auto args = arg_list(a);
    for (std::size_t s = 0; s < size; ++s) {
        std::array<double, 6> x{};
        for (std::size_t k = 0; k < 6; ++k) x[k] = args[k]->values()[s];
        const DriverPartials p = d.eval_partials(i, n, DriverArgs::from_array(x));
        for (std::size_t k = 0; k < 6; ++k) {
            f[k][s] = p.f[k];
            g[k][s] = p.g[k];
        }
    }
    CoefficientSet cf, cg;
    for (std::size_t k = 0; k < 6; ++k) {
        cf[k] = RandomVariable(a.y.lattice(), a.y.field(), std::move(f[k]));
        cg[k] = RandomVariable(a.y.lattice(), a.y.field(), std::move(g[k]));
    }
    return {std::move(cf), std::move(cg)};
}

/// (x + x with dW_r reversed) / 2; x itself when its field does not see dW_r.
RandomVariable bit_average(const RandomVariable& x, int r_idx) {
    if (x.field().w_upto <= r_idx) return x;
    const std::uint64_t mask = std::uint64_t{1} << (r_idx * x.lattice().width);
    return RandomVariable::tabulate(x.lattice(), x.field(), [&](PathIndex p) {
        PathIndex q = p;
        q.w_bits ^= mask;
        return 0.5 * (x.at(p) + x.at(q));
    });
}

NodeArguments at_point(const NodeArguments& a, int r_idx, LinearizationPoint point) {
    if (point == LinearizationPoint::path) return a;
    NodeArguments m = a;
    m.y = bit_average(a.y, r_idx);
    m.z = bit_average(a.z, r_idx);
    m.sigma = bit_average(a.sigma, r_idx);
    return m;
}

/// Flips of the random arguments; mean-field entries hold E of the flips.
NodeArguments flipped(const NodeArguments& a, int r_idx) {
    NodeArguments d = a;
    d.y = flip_derivative(a.y, r_idx);
    d.z = flip_derivative(a.z, r_idx);
    d.sigma = flip_derivative(a.sigma, r_idx);
    const LatticeSpec& l = a.y.lattice();
    d.ybar = RandomVariable::constant(l, a.y.field(), expectation(d.y));
    d.zbar = RandomVariable::constant(l, a.y.field(), expectation(d.z));
    d.sigmabar = RandomVariable::constant(l, a.y.field(), expectation(d.sigma));
    return d;
}

} // namespace

const CoefficientSet& LinearizedScenario::f_at(int i, int n) const { return f_coef.at(slot(lattice, i, n)); }
const CoefficientSet& LinearizedScenario::g_at(int i, int n) const { return g_coef.at(slot(lattice, i, n)); }

DerivativePair flip_solution(const AdaptedPath& y, const VolterraKernel& z, int r_idx) {
    const LatticeSpec& l = y.lattice;
    check_r(l, r_idx);
    DerivativePair d{AdaptedPath::zeros(l), VolterraKernel::zeros(l)};
    for (int i = 0; i <= l.n_steps; ++i) {
        d.y[i] = flip_derivative(y[i], r_idx);
        for (int j = 0; j < l.n_steps; ++j) d.z.at(i, j) = flip_derivative(z.at(i, j), r_idx);
    }
    return d;
}

LinearizedScenario build_linearized(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z, int r_idx,
                                    bool mean_field_terms, LinearizationPoint point) {
    const LatticeSpec& l = sc.lattice;
    check_r(l, r_idx);
    if (!sc.driver.has_partials()) throw Error(ErrorKind::PartialsUnavailable, "driver has no analytic partials");
    const int N = l.n_steps;
    LinearizedScenario ls;
    ls.lattice = l;
    ls.r_idx = r_idx;
    ls.beta = sc.beta;
    ls.c = sc.driver.lipschitz_c();
    ls.alpha = sc.driver.lipschitz_alpha();
    ls.base_y = y;
    ls.base_z = z;
    ls.mean_field_terms = mean_field_terms;
    ls.point = point;
    ls.f_coef.resize(slot(l, N, N) + 1);
    ls.g_coef.resize(slot(l, N, N) + 1);

    DriverGenerator gen(sc.driver);
    const EquationSystem sys = make_system(sc, gen);
    const Iterate x = single(y, z);
    for (int i = 0; i < N; ++i) {
        for (int n = i; n <= N; ++n) {
            const NodeArguments a = node_arguments(sys, x, 0, i, n);
            auto [cf, cg] = partial_tables(sc.driver, i, n, at_point(a, r_idx, point));
            if (n < N) ls.f_coef[slot(l, i, n)] = std::move(cf);
            if (n > i) ls.g_coef[slot(l, i, n)] = std::move(cg);
        }
    }
    for (int i = 0; i <= N; ++i) ls.d_zeta.push_back(flip_derivative(sc.terminal.value(l, i), r_idx));
    return ls;
}

CoefficientAudit audit_coefficients(const LinearizedScenario& ls) {
    CoefficientAudit a;
    for (const auto* table : {&ls.f_coef, &ls.g_coef}) {
        double& target = table == &ls.f_coef ? a.f_max_sq : a.g_max_sq;
        for (const auto& set : *table) {
            for (const auto& c : set) {
                if (c.size() == 0) continue;
                const double m = max_abs(c);
                target = std::max(target, m * m);
            }
        }
    }
    const double slack = 1e-12;
    a.pass = a.f_max_sq <= ls.c + slack && a.g_max_sq <= ls.alpha + slack;
    return a;
}

DerivativePair solve_linearized(const LinearizedScenario& ls, double tol, int max_iter) {
    const LatticeSpec& l = ls.lattice;
    const LinearizedGenerator gen(ls);
    EquationSystem sys;
    sys.lattice = l;
    sys.generator = &gen;
    sys.beta = ls.beta;
    std::vector<RandomVariable> terminal;
    for (int i = 0; i <= l.n_steps; ++i) {
        terminal.push_back(i > ls.r_idx ? ls.d_zeta[static_cast<std::size_t>(i)]
                                        : RandomVariable::constant(l, SigmaField::at(l.n_steps), 0.0));
    }
    sys.terminal = {std::move(terminal)};
    PicardOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    auto [x, trace] = picard_iterate(sys, Iterate::zeros(l), opts);
    (void)trace;
    return {std::move(x.y.front()), std::move(x.z.front())};
}

double derivative_mismatch(const DerivativePair& a, const DerivativePair& b, int r_idx) {
    const LatticeSpec& l = a.y.lattice;
    double s = 0.0;
    for (int i = r_idx + 1; i <= l.n_steps; ++i) {
        const RandomVariable d = a.y[i] - b.y[i];
        s += expectation(d * d) * l.dt;
        for (int j = i; j < l.n_steps; ++j) {
            const RandomVariable e = a.z.at(i, j) - b.z.at(i, j);
            s += expectation(e * e) * l.dt * l.dt;
        }
    }
    return std::sqrt(s);
}

ClarkOconeReport check_clark_ocone(const AdaptedPath& y, const VolterraKernel& z, int r_idx) {
    const LatticeSpec& l = y.lattice;
    check_r(l, r_idx);
    const DerivativePair d = flip_solution(y, z, r_idx);
    ClarkOconeReport rep;
    rep.per_row.assign(static_cast<std::size_t>(l.n_steps + 1), 0.0);
    for (int i = r_idx + 1; i <= l.n_steps; ++i) {
        const RandomVariable proj = condexp(d.y[i], SigmaField::at(r_idx));
        const double rr = max_abs_diff(z.at(i, r_idx), proj);
        rep.per_row[static_cast<std::size_t>(i)] = rr;
        rep.representation = std::max(rep.representation, rr);

        RandomVariable e = d.y[i] - z.at(i, r_idx);
        if (i > r_idx + 1) {
            std::vector<RandomVariable> row;
            for (int j = r_idx + 1; j < i; ++j) row.push_back(d.z.at(i, j));
            e = e - forward_integral(l, row, r_idx + 1, i);
        }
        rep.expansion = std::max(rep.expansion, max_abs(e));
    }
    return rep;
}

DeltaEquationReport check_delta_equation(const Scenario& sc, const AdaptedPath& y, const VolterraKernel& z, int r_idx,
                                         bool mean_field_terms, LinearizationPoint point) {
    const LatticeSpec& l = sc.lattice;
    check_r(l, r_idx);
    const int N = l.n_steps;
    const bool partials = sc.driver.has_partials();
    DriverGenerator gen(sc.driver);
    const EquationSystem sys = make_system(sc, gen);
    const Iterate x = single(y, z);
    const DerivativePair d = flip_solution(y, z, r_idx);
    const int count = mean_field_terms ? 6 : 3;

    DeltaEquationReport rep;
    rep.per_row.assign(static_cast<std::size_t>(N + 1), 0.0);
    for (int i = 0; i <= r_idx; ++i) {
        const SigmaField wide{N, i};
        RandomVariable lin = lift(flip_derivative(sc.terminal.value(l, i), r_idx), wide);
        RandomVariable ex = lin;
        for (int j = r_idx; j < N; ++j) {
            if (j > r_idx) {
                const NodeArguments a = node_arguments(sys, x, 0, i, j);
                accumulate(ex, flip_derivative(gen.f_term(i, j, a), r_idx), l.dt);
                if (partials) {
                    accumulate(lin, contract(partial_tables(sc.driver, i, j, at_point(a, r_idx, point)).first, flipped(a, r_idx), count), l.dt);
                }
            }
            const NodeArguments b = node_arguments(sys, x, 0, i, j + 1);
            const RandomVariable db = b_increment(l, j);
            accumulate(ex, flip_derivative(gen.g_term(i, j + 1, b), r_idx) * db);
            if (partials) {
                accumulate(lin, contract(partial_tables(sc.driver, i, j + 1, at_point(b, r_idx, point)).second, flipped(b, r_idx), count) * db);
            }
        }
        if (r_idx + 1 < N) {
            std::vector<RandomVariable> row;
            for (int j = r_idx + 1; j < N; ++j) row.push_back(d.z.at(i, j));
            const RandomVariable m = forward_integral(l, row, r_idx + 1, N);
            accumulate(lin, m, -1.0);
            accumulate(ex, m, -1.0);
        }
        accumulate(lin, z.at(i, r_idx), -1.0);
        accumulate(ex, z.at(i, r_idx), -1.0);
        const double rl = partials ? max_abs(lin) : INFINITY;
        rep.per_row[static_cast<std::size_t>(i)] = rl;
        rep.linearized = std::max(rep.linearized, rl);
        rep.exact = std::max(rep.exact, max_abs(ex));
    }
    return rep;
}

} // namespace mfbdsvie
