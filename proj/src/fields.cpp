#include "mfbdsvie/fields.hpp"

#include "mfbdsvie/error.hpp"
#include "mfbdsvie/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace mfbdsvie {

namespace {

void require_shapes(const AdaptedPath& y, const VolterraKernel& z) {
    if (!(y.lattice == z.lattice)) throw Error(ErrorKind::LatticeMismatch, "path and kernel on different lattices");
    const auto n = static_cast<std::size_t>(y.lattice.n_steps);
    if (y.y.size() != n + 1 || z.z.size() != (n + 1) * n)
        throw Error(ErrorKind::LatticeMismatch, "path/kernel shape does not match the lattice");
}

double second_moment(const RandomVariable& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    return s / static_cast<double>(x.size());
}

double weighted_sum(const AdaptedPath& y, const VolterraKernel& z, double beta, bool full_square) {
    require_shapes(y, z);
    const LatticeSpec& l = y.lattice;
    const int n = l.n_steps;
    double total = 0.0;
    for (int i = 0; i <= n; ++i) total += std::exp(beta * l.time(i)) * second_moment(y[i]) * l.dt;
    for (int i = 0; i <= n; ++i) {
        for (int j = full_square ? 0 : i; j < n; ++j)
            total += std::exp(beta * l.time(j)) * second_moment(z.at(i, j)) * l.dt * l.dt;
    }
    return total;
}

} // namespace

AdaptedPath AdaptedPath::zeros(const LatticeSpec& lattice) {
    AdaptedPath p{lattice, {}};
    p.y.reserve(static_cast<std::size_t>(lattice.n_steps) + 1);
    for (int i = 0; i <= lattice.n_steps; ++i) p.y.push_back(RandomVariable::constant(lattice, SigmaField::at(i), 0.0));
    return p;
}

VolterraKernel VolterraKernel::zeros(const LatticeSpec& lattice) {
    VolterraKernel k{lattice, {}};
    k.z.reserve(static_cast<std::size_t>(lattice.n_steps + 1) * static_cast<std::size_t>(lattice.n_steps));
    for (int i = 0; i <= lattice.n_steps; ++i)
        for (int j = 0; j < lattice.n_steps; ++j)
            k.z.push_back(RandomVariable::constant(lattice, SigmaField::at(j), 0.0));
    return k;
}

BetaWeight::BetaWeight(double b) : beta(b) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorKind::InputError, "beta must be nonnegative and finite");
}

VolterraKernel m_extend(const AdaptedPath& y, const VolterraKernel& z_delta, int particle) {
    require_shapes(y, z_delta);
    const LatticeSpec& l = y.lattice;
    VolterraKernel out = z_delta;
    for (int i = 0; i <= l.n_steps; ++i) {
        const RandomVariable yi = restrict_to(y[i], SigmaField::at(i));
        for (int j = 0; j < std::min(i, l.n_steps); ++j) {
            RandomVariable zij = condexp(yi * w_increment(l, j, particle), SigmaField::at(j));
            zij *= 1.0 / l.dt;
            out.at(i, j) = std::move(zij);
        }
    }
    return out;
}

double m_beta_norm(const AdaptedPath& y, const VolterraKernel& z, BetaWeight w) {
    return std::sqrt(weighted_sum(y, z, w.beta, false));
}

double l_beta_norm(const AdaptedPath& y, const VolterraKernel& z, BetaWeight w) {
    return std::sqrt(weighted_sum(y, z, w.beta, true));
}

double m_identity_residual(const AdaptedPath& y, const VolterraKernel& z, int particle) {
    require_shapes(y, z);
    const LatticeSpec& l = y.lattice;
    double worst = 0.0;
    for (int i = 0; i <= l.n_steps; ++i) {
        RandomVariable rebuilt = condexp(y[i], SigmaField{0, 0});
        for (int j = 0; j < i; ++j) rebuilt += z.at(i, j) * w_increment(l, j, particle);
        worst = std::max(worst, max_abs_diff(rebuilt, y[i]));
    }
    return worst;
}

double measurability_defect(const AdaptedPath& y, const VolterraKernel& z) {
    require_shapes(y, z);
    const LatticeSpec& l = y.lattice;
    auto defect = [](const RandomVariable& x, SigmaField f) {
        if (refines(f, x.field())) return 0.0;
        return max_abs_diff(lift(condexp(x, meet(x.field(), f)), x.field()), x);
    };
    double worst = 0.0;
    for (int i = 0; i <= l.n_steps; ++i) {
        worst = std::max(worst, defect(y[i], SigmaField::at(i)));
        for (int j = 0; j < l.n_steps; ++j) worst = std::max(worst, defect(z.at(i, j), SigmaField::at(j)));
    }
    return worst;
}

AdaptedPath difference(const AdaptedPath& a, const AdaptedPath& b) {
    AdaptedPath out{a.lattice, {}};
    for (std::size_t i = 0; i < a.y.size(); ++i) out.y.push_back(a.y[i] - b.y[i]);
    return out;
}

VolterraKernel difference(const VolterraKernel& a, const VolterraKernel& b) {
    VolterraKernel out{a.lattice, {}};
    for (std::size_t k = 0; k < a.z.size(); ++k) out.z.push_back(a.z[k] - b.z[k]);
    return out;
}

double max_abs_diff(const AdaptedPath& a, const AdaptedPath& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.y.size(); ++i) m = std::max(m, max_abs_diff(a.y[i], b.y[i]));
    return m;
}

double max_abs_diff_delta(const VolterraKernel& a, const VolterraKernel& b) {
    double m = 0.0;
    for (int i = 0; i <= a.lattice.n_steps; ++i)
        for (int j = i; j < a.lattice.n_steps; ++j) m = std::max(m, max_abs_diff(a.at(i, j), b.at(i, j)));
    return m;
}

void write_path_csv(std::ostream& os, const AdaptedPath& y) {
    os << "i,path_code,value\n";
    for (int i = 0; i <= y.lattice.n_steps; ++i) {
        const auto vals = y[i].values();
        for (std::size_t s = 0; s < vals.size(); ++s) os << i << ',' << s << ',' << format_real(vals[s]) << '\n';
    }
}

void write_kernel_csv(std::ostream& os, const VolterraKernel& z) {
    os << "i,j,path_code,value\n";
    for (int i = 0; i <= z.lattice.n_steps; ++i)
        for (int j = 0; j < z.lattice.n_steps; ++j) {
            const auto vals = z.at(i, j).values();
            for (std::size_t s = 0; s < vals.size(); ++s)
                os << i << ',' << j << ',' << s << ',' << format_real(vals[s]) << '\n';
        }
}

} // namespace mfbdsvie
