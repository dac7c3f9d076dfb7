#include "mfbdsvie/cli.hpp"

#include "mfbdsvie/error.hpp"
#include "mfbdsvie/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace mfbdsvie {

namespace {

class Summary {
public:
    explicit Summary(std::string title) { os_ << "subcommand " << title << '\n'; }

    void add(const std::string& key, const std::string& value) { os_ << key << ' ' << value << '\n'; }
    void add(const std::string& key, double value) { add(key, format_real(value)); }

    void check(const std::string& name, bool ok, double measured) {
        os_ << "check " << name << ' ' << (ok ? "PASS" : "FAIL") << ' ' << format_real(measured) << '\n';
        pass_ = pass_ && ok;
        if (!ok) failed_.push_back(name);
    }

    bool pass() const noexcept { return pass_; }
    const std::vector<std::string>& failed() const noexcept { return failed_; }
    std::string text() const { return os_.str() + (pass_ ? "PASS\n" : "FAIL\n"); }

private:
    std::ostringstream os_;
    bool pass_ = true;
    std::vector<std::string> failed_;
};

std::string path_csv(const AdaptedPath& y) {
    std::ostringstream os;
    write_path_csv(os, y);
    return os.str();
}

std::string kernel_csv(const VolterraKernel& z) {
    std::ostringstream os;
    write_kernel_csv(os, z);
    return os.str();
}

double solution_scale(const Solution& s) {
    Iterate x;
    x.y.push_back(s.y);
    x.z.push_back(s.z);
    return std::max(1.0, iterate_max_abs(x));
}

double tail_max(const std::vector<double>& ratios) {
    double m = 0.0;
    for (std::size_t k = 1; k < ratios.size(); ++k) m = std::max(m, ratios[k]);
    return m;
}

void solver_checks(const Scenario& sc, const Solution& sol, double tol, Summary& s) {
    const double scale = solution_scale(sol);
    s.check("residual", sol.report.final_residual <= 10.0 * tol * scale, sol.report.final_residual);
    const double ident = m_identity_residual(sol.y, sol.z);
    s.check("representation_identity", ident <= 1e-12 * scale, ident);
    s.check("converged", sol.report.converged, static_cast<double>(sol.report.iterations));
    if (sc.driver.lipschitz_c() > 0.0 || sc.driver.lipschitz_alpha() > 0.0) {
        const double g = geometric_mean(sol.report.ratio_trace);
        s.check("ratio_vs_gamma", g <= sol.report.gamma_theory + 0.1, g);
    }
}

int cmd_solve(const ScenarioFile& f, double tol, int max_iter, const std::filesystem::path& out, Summary& s) {
    const Solution sol = picard_solve(f.scenario, tol, max_iter);
    trace_table(sol.report).write(out / "solver.csv");
    write_text(out / "y.csv", path_csv(sol.y));
    write_text(out / "z.csv", kernel_csv(sol.z));
    s.add("beta", f.scenario.beta);
    std::istringstream lines(summarize(sol.report));
    for (std::string line; std::getline(lines, line);) {
        const auto cut = line.find(' ');
        s.add(line.substr(0, cut), line.substr(cut + 1));
    }
    solver_checks(f.scenario, sol, tol, s);
    return 0;
}

int cmd_norms(const ScenarioFile& f, double tol, int max_iter, const std::filesystem::path& out, Summary& s) {
    const Solution sol = picard_solve(f.scenario, tol, max_iter);
    const double m = sol.report.m_beta, l = sol.report.l_beta;
    const double ratio = m > 0.0 ? (l * l) / (m * m) : 1.0;
    const double ident = m_identity_residual(sol.y, sol.z);
    const double defect = measurability_defect(sol.y, sol.z);
    CsvTable t({"quantity", "value"});
    t.add_row({"beta", format_real(f.scenario.beta)});
    t.add_row({"m_beta", format_real(m)});
    t.add_row({"l_beta", format_real(l)});
    t.add_row({"l2_over_m2", format_real(ratio)});
    t.add_row({"identity_residual", format_real(ident)});
    t.add_row({"measurability_defect", format_real(defect)});
    t.write(out / "norms.csv");
    s.add("m_beta", m);
    s.add("l_beta", l);
    s.check("norm_equivalence", ratio >= 1.0 - 1e-10 && ratio <= 2.0 + 1e-10, ratio);
    s.check("representation_identity", ident <= 1e-12 * solution_scale(sol), ident);
    s.check("measurability", defect <= 1e-12, defect);
    return 0;
}

int cmd_compare(const ScenarioFile& f, double tol, int max_iter, const std::filesystem::path& out, Summary& s) {
    if (!f.comparison) throw Error(ErrorKind::InputError, "compare needs a 'comparison' section");
    const ComparisonSection& c = *f.comparison;
    const HypothesisReport h = check_hypotheses(c.scenario, c.samples);
    s.add("hypothesis_samples", std::to_string(h.samples));
    const ComparisonVerdict v = compare_solve(c.scenario, tol, max_iter);
    verdict_table(v).write(out / "compare.csv");
    s.check("pathwise_order", v.pass, v.overall_min_gap);
    const double lower = *std::min_element(v.lower_gap.begin(), v.lower_gap.end());
    const double upper = *std::min_element(v.upper_gap.begin(), v.upper_gap.end());
    s.check("sandwich_lower", lower >= -1e-10, lower);
    s.check("sandwich_upper", upper >= -1e-10, upper);

    CsvTable chain_csv({"p", "step_norm", "worst_increase"});
    try {
        const MonotoneChain chain = monotone_iteration(c.scenario, c.p_max, tol);
        for (std::size_t p = 0; p < chain.step_norms.size(); ++p) {
            chain_csv.add_row({std::to_string(p + 1), format_real(chain.step_norms[p]), ""});
        }
        s.check("monotone_chain", chain.worst_increase <= 1e-12, chain.worst_increase);
        s.check("chain_contracts", tail_max(chain.ratios) < 1.0 || chain.ratios.size() < 2, tail_max(chain.ratios));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::MonotonicityBroken) throw;
        s.add("monotone_chain_error", e.what());
        s.check("monotone_chain", false, INFINITY);
    }
    chain_csv.write(out / "chain.csv");
    return 0;
}

int cmd_risk(const ScenarioFile& f, double tol, int max_iter, const std::filesystem::path& out, Summary& s) {
    const RiskParams* params = f.scenario.driver.as_risk();
    if (params == nullptr) throw Error(ErrorKind::InputError, "risk needs driver.family = \"risk\"");
    RiskSection sec;
    sec.payoff2.zeta = f.scenario.terminal.shifted(0.5);
    if (f.risk) sec = *f.risk;
    const LatticeSpec& l = f.scenario.lattice;
    const RiskSpec rs{l, *params, f.scenario.beta, tol, max_iter};
    const PayoffStream p1{f.scenario.terminal};

    std::vector<double> bumped;
    for (int i = 0; i <= l.n_steps; ++i) bumped.push_back(p1.zeta.phi().at(i) + (i < sec.past_t_idx ? 1.0 : 0.0));
    const PayoffStream past{p1.zeta.with_phi(GridFunction(bumped))};

    std::vector<AxiomReport> reports;
    reports.push_back(axiom_past_independence(rs, p1, past, sec.past_t_idx));
    const PayoffStream above{p1.zeta.plus(TerminalSpec::smooth(0.25, 0.5, TerminalShape::square))};
    reports.push_back(axiom_monotonicity(rs, p1, above));
    reports.push_back(axiom_translation(rs, p1, sec.translation_c));
    const auto optional_axiom = [&](const char* name, auto&& fn) {
        try {
            reports.push_back(fn());
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::FlagMissing) throw;
            s.add(std::string("skipped_") + name, e.what());
        }
    };
    optional_axiom("convexity", [&] { return axiom_convexity(rs, p1, sec.payoff2, sec.convexity_lambda); });
    optional_axiom("positive_homogeneity",
                   [&] { return axiom_positive_homogeneity(rs, p1, sec.homogeneity_lambda); });
    optional_axiom("subadditivity", [&] { return axiom_subadditivity(rs, p1, sec.payoff2); });
    axiom_table(reports).write(out / "risk.csv");
    for (const auto& r : reports) s.check(r.axiom, r.pass, r.worst_violation);

    const AdaptedPath rho1 = rho(rs, p1);
    write_text(out / "rho.csv", path_csv(rho1));
    const AdaptedPath rho2 = rho(rs, PayoffStream{p1.zeta.shifted(sec.translation_c)});
    const std::vector<double> m = translation_factor(l, params->rate);
    CsvTable tr({"t_idx", "difference", "expected"});
    for (int i = 0; i <= l.n_steps; ++i) {
        tr.add_row({std::to_string(i), format_real(expectation(rho2[i] - rho1[i])),
                    format_real(-sec.translation_c * m[static_cast<std::size_t>(i)])});
    }
    tr.write(out / "translation.csv");
    return 0;
}

int cmd_malliavin(const ScenarioFile& f, double tol, int max_iter, const std::filesystem::path& out, Summary& s) {
    MalliavinSection sec;
    if (f.malliavin) sec = *f.malliavin;
    const Scenario& sc = f.scenario;
    const int N = sc.lattice.n_steps;
    std::vector<int> rs = sec.r_idx;
    if (rs.empty()) {
        for (int r = 0; r < N; ++r) rs.push_back(r);
    }
    const Solution sol = picard_solve(sc, tol, max_iter);
    const bool partials = sc.driver.has_partials();
    const bool linear = sc.driver.as_linear() != nullptr;
    if (!partials) s.add("linearized", "skipped (driver has no analytic partials)");

    CsvTable t({"t_idx", "r_idx", "residual"});
    CsvTable mm({"r_idx", "linearized_mismatch", "delta_linearized", "delta_exact", "expansion"});
    double co = 0.0, expansion = 0.0, delta_exact = 0.0, delta_lin = 0.0, mismatch = 0.0;
    for (int r : rs) {
        const ClarkOconeReport c = check_clark_ocone(sol.y, sol.z, r);
        const DeltaEquationReport d = check_delta_equation(sc, sol.y, sol.z, r, sec.mean_field_terms, sec.point);
        double mis = 0.0;
        if (partials) {
            const LinearizedScenario ls = build_linearized(sc, sol.y, sol.z, r, sec.mean_field_terms, sec.point);
            mis = derivative_mismatch(solve_linearized(ls, tol, max_iter), flip_solution(sol.y, sol.z, r), r);
        }
        for (int i = 0; i <= N; ++i) {
            const double v = i > r ? c.per_row[static_cast<std::size_t>(i)] : d.per_row[static_cast<std::size_t>(i)];
            t.add_row({std::to_string(i), std::to_string(r), format_real(partials || i > r ? v : d.exact)});
        }
        mm.add_row({std::to_string(r), format_real(mis), format_real(partials ? d.linearized : NAN),
                    format_real(d.exact), format_real(c.expansion)});
        co = std::max(co, c.representation);
        expansion = std::max(expansion, c.expansion);
        delta_exact = std::max(delta_exact, d.exact);
        if (partials) delta_lin = std::max(delta_lin, d.linearized);
        mismatch = std::max(mismatch, mis);
    }
    t.write(out / "malliavin.csv");
    mm.write(out / "mismatch.csv");
    s.check("clark_ocone", co <= 1e-10, co);
    s.check("clark_ocone_expansion", expansion <= 1e-10, expansion);
    s.check("delta_identity_exact", delta_exact <= 1e-10, delta_exact);
    if (partials) {
        s.add("linearized_mismatch", mismatch);
        s.add("delta_identity_linearized", delta_lin);
        if (linear) {
            s.check("linearized_equivalence", mismatch <= 1e-10, mismatch);
            s.check("delta_identity_linear", delta_lin <= 1e-8, delta_lin);
        }
    }
    return 0;
}

int cmd_particles(const ScenarioFile& f, double tol, int max_iter, const std::filesystem::path& out, Summary& s) {
    ParticlesSection sec;
    if (f.particles) sec = *f.particles;
    const ParticleStudy study = convergence_study(f.scenario, sec.n_list, tol, max_iter);
    study_table(study).write(out / "particles.csv");
    double exch = 0.0;
    for (int n : sec.n_list) exch = std::max(exch, solve_particles(ParticleConfig{n, f.scenario}, tol, max_iter).exchangeability);
    s.check("exchangeability", exch <= 1e-10, exch);
    for (std::size_t k = 0; k < study.n.size(); ++k) s.add("e_total_n" + std::to_string(study.n[k]), study.e_total[k]);
    if (f.scenario.driver.uses_mean_field()) {
        if (study.n.size() >= 2) {
            const double first = study.e_total.front(), last = study.e_total.back();
            s.check("trend", study.n.back() > study.n.front() ? last < first : true, last);
        }
    } else {
        const double worst = *std::max_element(study.e_total.begin(), study.e_total.end());
        s.check("decoupled", worst <= 1e-12, worst);
    }
    return 0;
}

int exit_code_for(ErrorKind k) {
    switch (k) {
    case ErrorKind::NoConvergence:
    case ErrorKind::MonotonicityBroken:
    case ErrorKind::CheckFailure:
        return kExitCheck;
    default:
        return kExitInput;
    }
}

} // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"solve", "compare", "risk", "malliavin", "particles", "norms"};
    return names;
}

int run(const RunOptions& opts, std::ostream& log) {
    try {
        const auto& names = subcommands();
        if (std::find(names.begin(), names.end(), opts.subcommand) == names.end()) {
            throw Error(ErrorKind::InputError, "unknown subcommand '" + opts.subcommand + "'");
        }
        if (opts.tol && !(*opts.tol > 0.0)) throw Error(ErrorKind::InputError, "--tol must be positive");
        if (opts.max_iter && *opts.max_iter < 1) throw Error(ErrorKind::InputError, "--max-iter must be at least 1");
        const ScenarioFile f = load_scenario(opts.scenario);
        const double tol = opts.tol.value_or(f.tol);
        const int max_iter = opts.max_iter.value_or(f.max_iter);

        std::error_code ec;
        std::filesystem::create_directories(opts.out_dir, ec);
        if (ec) throw Error(ErrorKind::IoError, "cannot create " + opts.out_dir.string() + ": " + ec.message());

        Summary s(opts.subcommand);
        s.add("tol", tol);
        s.add("max_iter", std::to_string(max_iter));
        int status = 0;
        try {
            if (opts.subcommand == "solve") status = cmd_solve(f, tol, max_iter, opts.out_dir, s);
            else if (opts.subcommand == "norms") status = cmd_norms(f, tol, max_iter, opts.out_dir, s);
            else if (opts.subcommand == "compare") status = cmd_compare(f, tol, max_iter, opts.out_dir, s);
            else if (opts.subcommand == "risk") status = cmd_risk(f, tol, max_iter, opts.out_dir, s);
            else if (opts.subcommand == "malliavin") status = cmd_malliavin(f, tol, max_iter, opts.out_dir, s);
            else status = cmd_particles(f, tol, max_iter, opts.out_dir, s);
        } catch (const Error& e) {
            if (exit_code_for(e.kind()) != kExitCheck) throw;
            s.add("error", e.what());
            s.check(std::string(to_string(e.kind())), false, INFINITY);
        }
        (void)status;
        write_text(opts.out_dir / "summary.txt", s.text());
        if (!s.pass()) {
            log << "check failure:";
            for (const auto& name : s.failed()) log << ' ' << name;
            log << '\n';
            return kExitCheck;
        }
        return kExitPass;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

} // namespace mfbdsvie
