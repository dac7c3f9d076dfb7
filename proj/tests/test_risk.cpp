#include "doctest.h"

#include "mfbdsvie/error.hpp"
#include "mfbdsvie/risk.hpp"

#include <cmath>
#include <vector>

using namespace mfbdsvie;

namespace {

RiskSpec spec(int n, GridFunction rate, ZFunction h, ZFunction g) {
    return RiskSpec{build_lattice(n, 1.0), RiskParams{std::move(rate), h, g}, std::nullopt, 1e-12, 500};
}

PayoffStream stream(TerminalSpec t) { return PayoffStream{std::move(t)}; }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::CheckFailure;
}

} // namespace

TEST_CASE("deterministic payoff under a constant rate") {
    const RiskSpec rs = spec(2, 0.1, {}, {});
    const AdaptedPath r = rho(rs, stream(TerminalSpec::deterministic(1.0)));
    CHECK(r[2].at({}) == doctest::Approx(-1.0));
    CHECK(r[1].at({}) == doctest::Approx(-1.0 / 1.05).epsilon(1e-10));
    CHECK(r[0].at({}) == doctest::Approx(-0.907029478458).epsilon(1e-10));
    const AdaptedPath flat = rho(spec(3, 0.0, {}, {}), stream(TerminalSpec::deterministic(1.0)));
    for (int i = 0; i <= 3; ++i) CHECK(flat[i].at({}) == doctest::Approx(-1.0));
}

TEST_CASE("translation factor is the discrete discount product") {
    const LatticeSpec l = build_lattice(4, 1.0);
    const std::vector<double> r{0.1, 0.3, 0.2, 0.4, 0.0};
    const std::vector<double> m = translation_factor(l, GridFunction(r));
    REQUIRE(m.size() == 5);
    for (int i = 0; i <= 4; ++i) {
        double p = 1.0;
        for (int j = i; j < 4; ++j) p /= 1.0 + r[j] * l.dt;
        CHECK(m[i] == doctest::Approx(p).epsilon(1e-14));
    }
    const RiskSpec rs{l, RiskParams{GridFunction(r), {ZShape::smooth, 0.5, 0.0}, {ZShape::linear, 0.1, 0.0}}, std::nullopt,
                      1e-12, 500};
    const AxiomReport t = axiom_translation(rs, stream(TerminalSpec::smooth(0.0, 1.0, TerminalShape::sin)), 0.7);
    CHECK(t.pass);
    CHECK(t.worst_violation <= 1e-10);
}

TEST_CASE("discount factor converges at first order") {
    // r(t) = 0.5 + t on [0, 1]: integral 1.
    const DiscountConvergence dc = discount_convergence([](double t) { return 0.5 + t; }, 1.0, 1.0, {2, 4, 8, 16});
    REQUIRE(dc.ratios.size() == 3);
    for (double q : dc.ratios) {
        CHECK(q >= 1.7);
        CHECK(q <= 2.3);
    }
    for (std::size_t k = 0; k < dc.steps.size(); ++k) {
        const int n = dc.steps[k];
        double p = 1.0;
        for (int j = 0; j < n; ++j) p /= 1.0 + (0.5 + static_cast<double>(j) / n) / n;
        CHECK(dc.errors[k] == doctest::Approx(std::abs(p - std::exp(-1.0))).epsilon(1e-12));
    }
}

TEST_CASE("axioms on flag-compliant specifications") {
    const TerminalSpec a = TerminalSpec::smooth(0.0, 1.0, TerminalShape::sin);
    const TerminalSpec b = TerminalSpec::affine(-0.2, 0.5).plus(TerminalSpec::smooth(0.0, 0.3, TerminalShape::square));

    const RiskSpec convex = spec(4, 0.0, {ZShape::smooth, 1.0, 0.0}, {ZShape::linear, 0.1, 0.3});
    CHECK(axiom_convexity(convex, stream(a), stream(b), 0.3).pass);
    CHECK(axiom_monotonicity(convex, stream(a.shifted(-1.0)), stream(a)).pass);
    CHECK(axiom_translation(convex, stream(b), -0.4).pass);

    const RiskSpec coherent = spec(4, 0.0, {ZShape::abs, 0.8, 0.0}, {ZShape::linear, 0.1, 0.0});
    CHECK(axiom_positive_homogeneity(coherent, stream(a), 2.5).pass);
    CHECK(axiom_subadditivity(coherent, stream(a), stream(b)).pass);
    CHECK(axiom_convexity(coherent, stream(a), stream(b), 0.6).pass);

    const RiskSpec discounted = spec(4, 0.2, {ZShape::linear, 0.5, 0.1}, {ZShape::linear, 0.1, 0.0});
    CHECK(axiom_convexity(discounted, stream(a), stream(b), 0.3).pass);
    CHECK(axiom_positive_homogeneity(discounted, stream(a), 2.5, false).pass == false);
    CHECK(axiom_monotonicity(discounted, stream(a.shifted(-1.0)), stream(a)).pass);

    const TerminalSpec early = a.with_phi(GridFunction(std::vector<double>{1.0, 1.0, 0.0, 0.0, 0.0}));
    CHECK(axiom_past_independence(convex, stream(a), stream(early), 2).pass);
    CHECK_FALSE(axiom_past_independence(convex, stream(a), stream(early), 1).pass);
}

TEST_CASE("a decreasing y argument spoils convexity of the nonlinear measure") {
    // -r/2 y couples the rows of the Volterra equation with a negative sign, so
    // rows where h acts linearly inherit the (negative) gap of the other rows.
    const TerminalSpec a = TerminalSpec::smooth(0.0, 1.0, TerminalShape::sin);
    const TerminalSpec b = TerminalSpec::affine(-0.2, 0.5).plus(TerminalSpec::smooth(0.0, 0.3, TerminalShape::square));
    const RiskSpec rs = spec(5, 0.2, {ZShape::abs, 0.8, 0.0}, {});
    const AxiomReport conv = axiom_convexity(rs, stream(a), stream(b), 0.3);
    CHECK(conv.worst_violation > 1e-5);
    CHECK(axiom_subadditivity(rs, stream(a), stream(b)).worst_violation > 1e-5);
    CHECK(axiom_positive_homogeneity(rs, stream(a), 2.5).pass);
}

TEST_CASE("missing structural flags") {
    const TerminalSpec a = TerminalSpec::smooth(0.0, 1.0, TerminalShape::sin);
    const TerminalSpec b = TerminalSpec::affine(0.3, -1.0);
    const RiskSpec concave = spec(3, 0.1, {ZShape::neg_smooth, 1.0, 0.0}, {});
    CHECK(kind_of([&] { axiom_convexity(concave, stream(a), stream(b), 0.5); }) == ErrorKind::FlagMissing);
    CHECK(kind_of([&] { axiom_positive_homogeneity(concave, stream(a), 2.0); }) == ErrorKind::FlagMissing);
    CHECK(kind_of([&] { axiom_subadditivity(concave, stream(a), stream(b)); }) == ErrorKind::FlagMissing);
    const RiskSpec shifted_g = spec(3, 0.1, {ZShape::abs, 1.0, 0.0}, {ZShape::linear, 0.1, 0.2});
    CHECK(kind_of([&] { axiom_subadditivity(shifted_g, stream(a), stream(b)); }) == ErrorKind::FlagMissing);

    CHECK(kind_of([&] { axiom_monotonicity(concave, stream(a), stream(b)); }) == ErrorKind::InputError);

    const AxiomReport forced = axiom_convexity(concave, stream(a), stream(b), 0.5, false);
    CHECK(forced.worst_violation > kAxiomSlack);
    CHECK_FALSE(forced.pass);
}

TEST_CASE("axiom table layout") {
    const CsvTable t = axiom_table({{"monotonicity", 0.0, true}, {"convexity", 1e-3, false}});
    CHECK(t.rows() == 2);
    CHECK(t.to_string().rfind("axiom,worst_violation,pass\n", 0) == 0);
}
