#include "doctest.h"

#include "mfbdsvie/error.hpp"
#include "mfbdsvie/malliavin.hpp"

#include <cmath>
#include <vector>

using namespace mfbdsvie;

namespace {

Scenario linear(int n, AffineCoefficients f, AffineCoefficients g, TerminalSpec zeta) {
    const LatticeSpec l = build_lattice(n, 1.0);
    return make_scenario(DriverSpec::linear(l, f, g), std::move(zeta));
}

Scenario smooth_risk(int n, double rate, TerminalSpec zeta) {
    const LatticeSpec l = build_lattice(n, 1.0);
    return make_scenario(DriverSpec::risk(l, {.rate = rate, .h = {ZShape::smooth, 1.0, 0.0}, .g = {}}), std::move(zeta));
}

std::vector<Scenario> scenarios() {
    return {
        linear(3, {.y = 0.5}, {}, TerminalSpec::affine(0.0, 1.0)),
        linear(4, {.y = 0.2, .z = 0.4, .sigma = 0.3}, {.z = 0.1}, TerminalSpec::smooth(0.0, 1.0, TerminalShape::sin)),
        linear(4, {.y = -0.3, .z = 0.2, .ybar = 0.4, .zbar = 0.3, .sigmabar = 0.2}, {.y = 0.05, .sigma = 0.1, .ybar = 0.1},
               TerminalSpec::smooth(0.1, 1.0, TerminalShape::tanh)),
        smooth_risk(4, 0.2, TerminalSpec::smooth(0.0, 1.0, TerminalShape::cos)),
    };
}

} // namespace

TEST_CASE("scalar oracle for a linear y coefficient") {
    const double a = 0.5;
    const Scenario sc = linear(2, {.y = a}, {}, TerminalSpec::affine(0.0, 1.0));
    const Solution s = picard_solve(sc, 1e-13);
    const DerivativePair flip = flip_solution(s.y, s.z, 0);
    const double dt = sc.lattice.dt;
    // D_0 Y_i = D_0 Y_{i+1} / (1 - a dt), D_0 Y_N = 1.
    CHECK(flip.y[2].at({}) == doctest::Approx(1.0));
    CHECK(flip.y[1].at({}) == doctest::Approx(1.0 / (1.0 - a * dt)));
    CHECK(flip.y[1].at({}) == doctest::Approx(4.0 / 3.0));
    const DerivativePair lin = solve_linearized(build_linearized(sc, s.y, s.z, 0));
    CHECK(lin.y[1].at({}) == doctest::Approx(4.0 / 3.0));
    CHECK(derivative_mismatch(flip, lin, 0) <= 1e-10);
}

TEST_CASE("Clark-Ocone relation and expansion") {
    for (const Scenario& sc : scenarios()) {
        const Solution s = picard_solve(sc, 1e-12);
        for (int r = 0; r < sc.lattice.n_steps; ++r) {
            const ClarkOconeReport co = check_clark_ocone(s.y, s.z, r);
            CHECK(co.representation <= 1e-10);
            CHECK(co.expansion <= 1e-10);
        }
    }
}

TEST_CASE("flip derivative solves the linearized equation for linear drivers") {
    const std::vector<Scenario> all = scenarios();
    for (int k = 0; k < 3; ++k) {
        const Scenario& sc = all[static_cast<std::size_t>(k)];
        const Solution s = picard_solve(sc, 1e-13);
        for (int r = 0; r < sc.lattice.n_steps; ++r) {
            const LinearizedScenario ls = build_linearized(sc, s.y, s.z, r);
            CHECK(audit_coefficients(ls).pass);
            const DerivativePair lin = solve_linearized(ls);
            CHECK(derivative_mismatch(flip_solution(s.y, s.z, r), lin, r) <= 1e-10);
            const DeltaEquationReport de = check_delta_equation(sc, s.y, s.z, r);
            CHECK(de.exact <= 1e-10);
            CHECK(de.linearized <= 1e-8);
        }
    }
}

TEST_CASE("keeping mean-field derivative terms breaks the match") {
    const Scenario sc = linear(3, {.y = 0.2, .ybar = 0.5}, {}, TerminalSpec::affine(0.0, 1.0));
    const Solution s = picard_solve(sc, 1e-13);
    const DerivativePair flip = flip_solution(s.y, s.z, 0);
    const DerivativePair dropped = solve_linearized(build_linearized(sc, s.y, s.z, 0));
    const DerivativePair kept = solve_linearized(build_linearized(sc, s.y, s.z, 0, true));
    CHECK(derivative_mismatch(flip, dropped, 0) <= 1e-10);
    CHECK(derivative_mismatch(flip, kept, 0) > 1e-3);
}

TEST_CASE("nonlinear driver: exact delta identity and linearization points") {
    const Scenario sc = smooth_risk(4, 0.0, TerminalSpec::smooth(0.0, 1.0, TerminalShape::cos));
    const Solution s = picard_solve(sc, 1e-13);
    const DerivativePair flip = flip_solution(s.y, s.z, 0);
    const double path = derivative_mismatch(flip, solve_linearized(build_linearized(sc, s.y, s.z, 0)), 0);
    const double mid = derivative_mismatch(
        flip, solve_linearized(build_linearized(sc, s.y, s.z, 0, false, LinearizationPoint::midpoint)), 0);
    CHECK(path > 1e-3);
    CHECK(mid < path);
    for (int r = 0; r < 4; ++r) CHECK(check_delta_equation(sc, s.y, s.z, r).exact <= 1e-10);
}

TEST_CASE("partials are required") {
    const LatticeSpec l = build_lattice(3, 1.0);
    const Scenario sc = make_scenario(DriverSpec::risk(l, {.rate = 0.1, .h = {ZShape::abs, 1.0, 0.0}, .g = {}}),
                                      TerminalSpec::affine(0.0, 1.0));
    const Solution s = picard_solve(sc);
    try {
        (void)build_linearized(sc, s.y, s.z, 0);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PartialsUnavailable);
    }
    CHECK(check_clark_ocone(s.y, s.z, 1).representation <= 1e-10);
}

TEST_CASE("flip_solution is entrywise") {
    const Scenario sc = scenarios()[1];
    const Solution s = picard_solve(sc);
    const DerivativePair d = flip_solution(s.y, s.z, 2);
    for (int i = 0; i <= 4; ++i) CHECK(max_abs_diff(d.y[i], flip_derivative(s.y[i], 2)) == 0.0);
    CHECK(max_abs_diff(d.z.at(4, 3), flip_derivative(s.z.at(4, 3), 2)) == 0.0);
    for (int i = 0; i <= 2; ++i) CHECK(max_abs(d.y[i]) == 0.0);
}
