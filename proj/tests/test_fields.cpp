#include "doctest.h"

#include "mfbdsvie/error.hpp"
#include "mfbdsvie/fields.hpp"

#include <cmath>
#include <sstream>

using namespace mfbdsvie;

namespace {

double dw(const LatticeSpec& l, PathIndex p, int j) { return ((p.w_bits >> j) & 1U) ? l.inc : -l.inc; }
double db(const LatticeSpec& l, PathIndex p, int j) { return ((p.b_bits >> j) & 1U) ? l.inc : -l.inc; }

AdaptedPath walk_path(const LatticeSpec& l) {
    AdaptedPath y = AdaptedPath::zeros(l);
    for (int i = 0; i <= l.n_steps; ++i) y[i] = lift(w_walk(l, i), SigmaField::at(i));
    return y;
}

} // namespace

TEST_CASE("m_extend of deterministic and walk paths") {
    const LatticeSpec l = build_lattice(3, 1.0);
    AdaptedPath y = AdaptedPath::zeros(l);
    for (int i = 0; i <= 3; ++i) y[i] = RandomVariable::constant(l, SigmaField::at(i), 1.0 + i);
    const VolterraKernel z = m_extend(y, VolterraKernel::zeros(l));
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j < i; ++j) CHECK(max_abs(z.at(i, j)) < 1e-15);

    const VolterraKernel zw = m_extend(walk_path(l), VolterraKernel::zeros(l));
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j < i; ++j) CHECK(max_abs_diff(zw.at(i, j), RandomVariable::constant(l, 1.0)) < 1e-14);
    CHECK(m_identity_residual(walk_path(l), zw) < 1e-14);
}

TEST_CASE("m_extend against brute-force conditioning") {
    const LatticeSpec l = build_lattice(2, 1.0);
    AdaptedPath y = AdaptedPath::zeros(l);
    y[2] = restrict_to(w_increment(l, 0) * w_increment(l, 1) + w_increment(l, 0), SigmaField::at(2));
    const VolterraKernel z = m_extend(y, VolterraKernel::zeros(l));
    // Oracle by enumeration: E[Y dW_j | F_{s_j}] / dt over all 16 paths.
    for (int j = 0; j < 2; ++j) {
        for (std::uint64_t o = 0; o < l.path_count(); ++o) {
            const PathIndex p = path_from_ordinal(l, o);
            double acc = 0.0;
            int hits = 0;
            for (std::uint64_t q = 0; q < l.path_count(); ++q) {
                const PathIndex r = path_from_ordinal(l, q);
                bool same = true;
                for (int k = 0; k < j; ++k) same &= dw(l, r, k) == dw(l, p, k);
                for (int k = j; k < 2; ++k) same &= db(l, r, k) == db(l, p, k);
                if (!same) continue;
                acc += (dw(l, r, 0) * dw(l, r, 1) + dw(l, r, 0)) * dw(l, r, j);
                ++hits;
            }
            CHECK(z.at(2, j).at(p) == doctest::Approx(acc / hits / l.dt));
        }
    }
    CHECK(m_identity_residual(y, z) < 1e-14);
}

TEST_CASE("m_extend keeps backward information in the F_0 mean") {
    const LatticeSpec l = build_lattice(2, 1.0);
    AdaptedPath y = AdaptedPath::zeros(l);
    // F_{t_1} knows dW_0 and dB_1: Y(t_1) = dW_0 dB_1 has kernel dB_1 at s_0.
    y[1] = restrict_to(w_increment(l, 0) * b_increment(l, 1), SigmaField::at(1));
    const VolterraKernel z = m_extend(y, VolterraKernel::zeros(l));
    for (std::uint64_t o = 0; o < l.path_count(); ++o) {
        const PathIndex p = path_from_ordinal(l, o);
        CHECK(z.at(1, 0).at(p) == doctest::Approx(db(l, p, 1)));
    }
    CHECK(m_identity_residual(y, z) < 1e-14);
    CHECK(measurability_defect(y, z) < 1e-14);
}

TEST_CASE("m_beta_norm examples") {
    const LatticeSpec l = build_lattice(1, 1.0);
    CHECK(m_beta_norm(AdaptedPath::zeros(l), VolterraKernel::zeros(l), BetaWeight(3.0)) == 0.0);
    AdaptedPath ones = AdaptedPath::zeros(l);
    for (int i = 0; i <= 1; ++i) ones[i] = RandomVariable::constant(l, SigmaField::at(i), 1.0);
    CHECK(m_beta_norm(ones, VolterraKernel::zeros(l), BetaWeight(0.0)) == doctest::Approx(std::sqrt(2.0)));
    const double b = 0.7;
    CHECK(m_beta_norm(ones, VolterraKernel::zeros(l), BetaWeight(b)) == doctest::Approx(std::sqrt(1.0 + std::exp(b))));
}

TEST_CASE("norm monotone in the kernel and equal when supported on the upper triangle") {
    const LatticeSpec l = build_lattice(3, 1.0);
    const AdaptedPath y = walk_path(l);
    VolterraKernel z = VolterraKernel::zeros(l);
    for (int i = 0; i <= 3; ++i)
        for (int j = i; j < 3; ++j) z.at(i, j) = RandomVariable::constant(l, SigmaField::at(j), 0.5 + i - j);
    VolterraKernel z2 = z;
    for (int i = 0; i <= 3; ++i)
        for (int j = i; j < 3; ++j) z2.at(i, j) = 2.0 * z.at(i, j);
    const BetaWeight w(2.0);
    CHECK(m_beta_norm(y, z2, w) > m_beta_norm(y, z, w));
    CHECK(l_beta_norm(y, z, w) == doctest::Approx(m_beta_norm(y, z, w)));
    CHECK(l_beta_norm(AdaptedPath::zeros(l), VolterraKernel::zeros(l), w) == 0.0);
}

TEST_CASE("norm equivalence on extended pairs") {
    const LatticeSpec l = build_lattice(4, 1.0);
    AdaptedPath y = AdaptedPath::zeros(l);
    for (int i = 0; i <= 4; ++i) {
        y[i] = RandomVariable::tabulate(l, SigmaField::at(i), [&, i](PathIndex p) {
            double s = 0.1 * i;
            for (int k = 0; k < i; ++k) s += dw(l, p, k);
            for (int k = i; k < 4; ++k) s += 0.3 * db(l, p, k);
            return std::sin(s) + s * s;
        });
    }
    VolterraKernel z = VolterraKernel::zeros(l);
    for (int i = 0; i <= 4; ++i)
        for (int j = i; j < 4; ++j) z.at(i, j) = RandomVariable::constant(l, SigmaField::at(j), 0.2 * (i + 1));
    const VolterraKernel ext = m_extend(y, z);
    for (double beta : {0.0, 1.0, 10.0, 60.0}) {
        const double m = m_beta_norm(y, ext, BetaWeight(beta));
        const double lb = l_beta_norm(y, ext, BetaWeight(beta));
        CHECK(m * m <= lb * lb + 1e-10);
        CHECK(lb * lb <= 2 * m * m + 1e-10);
    }
    CHECK(m_identity_residual(y, ext) < 1e-12);
    CHECK(measurability_defect(y, ext) == 0.0);
}

TEST_CASE("negative beta is rejected") {
    CHECK_THROWS_AS(BetaWeight(-1.0), Error);
}

TEST_CASE("csv dumps") {
    const LatticeSpec l = build_lattice(1, 1.0);
    const AdaptedPath y = walk_path(l);
    std::ostringstream ps, ks;
    write_path_csv(ps, y);
    write_kernel_csv(ks, m_extend(y, VolterraKernel::zeros(l)));
    CHECK(ps.str().rfind("i,path_code,value\n", 0) == 0);
    CHECK(ks.str().rfind("i,j,path_code,value\n", 0) == 0);
}
