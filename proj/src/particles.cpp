#include "mfbdsvie/particles.hpp"

#include "mfbdsvie/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace mfbdsvie {

namespace {

/// Swaps the increments of lanes a and b on a joint path.
PathIndex swap_lanes(const LatticeSpec& joint, PathIndex p, int a, int b) {
    const auto swap_bits = [&](std::uint64_t bits) {
        for (int j = 0; j < joint.n_steps; ++j) {
            const int ia = j * joint.width + a, ib = j * joint.width + b;
            const std::uint64_t va = (bits >> ia) & 1u, vb = (bits >> ib) & 1u;
            if (va != vb) bits ^= (std::uint64_t{1} << ia) | (std::uint64_t{1} << ib);
        }
        return bits;
    };
    return {swap_bits(p.w_bits), swap_bits(p.b_bits)};
}

double swap_defect(const RandomVariable& xk, const RandomVariable& x0, const LatticeSpec& joint, int k) {
    double worst = 0.0;
    for (std::size_t s = 0; s < xk.size(); ++s) {
        const PathIndex p = xk.path_of(s);
        worst = std::max(worst, std::abs(xk.values()[s] - x0.at(swap_lanes(joint, p, 0, k))));
    }
    return worst;
}

} // namespace

LatticeSpec ParticleConfig::joint_lattice() const {
    if (n < 1 || n > kMaxParticles) throw Error(ErrorKind::JointSpaceTooLarge, "particle count must lie in [1, 3]");
    return build_joint_lattice(base.lattice.n_steps, base.lattice.horizon, n);
}

PathIndex lane_path(const LatticeSpec& joint, PathIndex p, int lane) {
    PathIndex out;
    for (int j = 0; j < joint.n_steps; ++j) {
        const int bit = j * joint.width + lane;
        out.w_bits |= ((p.w_bits >> bit) & 1u) << j;
        out.b_bits |= ((p.b_bits >> bit) & 1u) << j;
    }
    return out;
}

RandomVariable embed_lane(const RandomVariable& x, const LatticeSpec& joint, int lane) {
    return RandomVariable::tabulate(joint, x.field(), [&](PathIndex p) { return x.at(lane_path(joint, p, lane)); });
}

ParticleSolution solve_particles(const ParticleConfig& pc, double tol, int max_iter) {
    ParticleSolution sol;
    sol.joint = pc.joint_lattice();
    const LatticeSpec& l = sol.joint;

    DriverGenerator gen(pc.base.driver);
    EquationSystem sys;
    sys.lattice = l;
    sys.generator = &gen;
    sys.mode = MeanFieldMode::empirical;
    sys.beta = pc.base.beta;
    for (int k = 0; k < pc.n; ++k) sys.terminal.push_back(pc.base.terminal.values(l, k));

    PicardOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    auto [x, trace] = picard_iterate(sys, Iterate::zeros(l, pc.n), opts);
    sol.x = std::move(x);
    sol.trace = std::move(trace);
    sol.residual = system_residual(sys, sol.x);

    for (int k = 1; k < pc.n; ++k) {
        const auto& yk = sol.x.y[static_cast<std::size_t>(k)];
        const auto& y0 = sol.x.y.front();
        const auto& zk = sol.x.z[static_cast<std::size_t>(k)];
        const auto& z0 = sol.x.z.front();
        for (int i = 0; i <= l.n_steps; ++i) {
            sol.exchangeability = std::max(sol.exchangeability, swap_defect(yk[i], y0[i], l, k));
            for (int j = 0; j < l.n_steps; ++j) {
                sol.exchangeability = std::max(sol.exchangeability, swap_defect(zk.at(i, j), z0.at(i, j), l, k));
            }
        }
    }
    return sol;
}

ParticleStudy convergence_study(const Scenario& base, const std::vector<int>& n_list, double tol, int max_iter) {
    const Solution mf = picard_solve(base, tol, max_iter);
    ParticleStudy study;
    for (int n : n_list) {
        const ParticleSolution ps = solve_particles(ParticleConfig{n, base}, tol, max_iter);
        std::vector<double> e;
        double total = 0.0;
        for (int i = 0; i <= base.lattice.n_steps; ++i) {
            const RandomVariable d = ps.x.y.front()[i] - embed_lane(mf.y[i], ps.joint, 0);
            e.push_back(expectation(d * d));
            total += e.back() * base.lattice.dt;
        }
        study.n.push_back(n);
        study.e.push_back(std::move(e));
        study.e_total.push_back(total);
    }
    return study;
}

CsvTable study_table(const ParticleStudy& s) {
    CsvTable t({"n", "t_idx", "e_n"});
    for (std::size_t k = 0; k < s.n.size(); ++k) {
        for (std::size_t i = 0; i < s.e[k].size(); ++i) {
            t.add_row({std::to_string(s.n[k]), std::to_string(i), format_real(s.e[k][i])});
        }
    }
    return t;
}

} // namespace mfbdsvie
