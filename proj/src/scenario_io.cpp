#include "mfbdsvie/scenario_io.hpp"

#include "mfbdsvie/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace mfbdsvie {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::InputError, where + ": " + what);
}

const json& object_at(const json& parent, const char* key, const std::string& where) {
    if (!parent.contains(key)) fail(where, std::string("missing section '") + key + "'");
    const json& v = parent.at(key);
    if (!v.is_object()) fail(where + "." + key, "expected an object");
    return v;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) fail(where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) fail(where, "unknown key '" + it.key() + "'");
    }
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "expected a finite number");
    return x;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
    return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    return number(obj.at(key), where + "." + key);
}

int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    return v.get<int>();
}

bool boolean(const json& v, const std::string& where) {
    if (!v.is_boolean()) fail(where, "expected true or false");
    return v.get<bool>();
}

std::string text(const json& v, const std::string& where) {
    if (!v.is_string()) fail(where, "expected a string");
    return v.get<std::string>();
}

GridFunction grid(const json& v, const std::string& where) {
    if (v.is_number()) return GridFunction(number(v, where));
    if (!v.is_array() || v.empty()) fail(where, "expected a number or a non-empty array");
    std::vector<double> xs;
    for (std::size_t k = 0; k < v.size(); ++k) xs.push_back(number(v[k], where + "[" + std::to_string(k) + "]"));
    return GridFunction(std::move(xs));
}

AffineCoefficients affine(const json& v, const std::string& where) {
    check_keys(v, {"y", "z", "sigma", "ybar", "zbar", "sigmabar", "source"}, where);
    AffineCoefficients a;
    a.y = number_or(v, "y", 0.0, where);
    a.z = number_or(v, "z", 0.0, where);
    a.sigma = number_or(v, "sigma", 0.0, where);
    a.ybar = number_or(v, "ybar", 0.0, where);
    a.zbar = number_or(v, "zbar", 0.0, where);
    a.sigmabar = number_or(v, "sigmabar", 0.0, where);
    a.source = number_or(v, "source", 0.0, where);
    return a;
}

ZFunction zfunction(const json& v, const std::string& where) {
    check_keys(v, {"shape", "scale", "offset"}, where);
    ZFunction f;
    const std::string shape = v.contains("shape") ? text(v.at("shape"), where + ".shape") : "zero";
    if (shape == "zero") f.shape = ZShape::zero;
    else if (shape == "linear") f.shape = ZShape::linear;
    else if (shape == "abs") f.shape = ZShape::abs;
    else if (shape == "neg_abs") f.shape = ZShape::neg_abs;
    else if (shape == "smooth") f.shape = ZShape::smooth;
    else if (shape == "neg_smooth") f.shape = ZShape::neg_smooth;
    else fail(where + ".shape", "unknown shape '" + shape + "'");
    f.scale = number_or(v, "scale", 1.0, where);
    f.offset = number_or(v, "offset", 0.0, where);
    return f;
}

DriverSpec driver(const json& v, const LatticeSpec& l, const std::string& where) {
    check_keys(v, {"family", "params", "c", "alpha"}, where);
    if (!v.contains("family")) fail(where, "missing 'family'");
    const std::string family = text(v.at("family"), where + ".family");
    const json params = v.contains("params") ? v.at("params") : json::object();
    const std::string pw = where + ".params";
    const auto c = optional_number(v, "c", where);
    const auto alpha = optional_number(v, "alpha", where);
    if (family == "linear") {
        check_keys(params, {"f", "g"}, pw);
        const AffineCoefficients f = params.contains("f") ? affine(params.at("f"), pw + ".f") : AffineCoefficients{};
        const AffineCoefficients g = params.contains("g") ? affine(params.at("g"), pw + ".g") : AffineCoefficients{};
        return DriverSpec::linear(l, f, g, c, alpha);
    }
    if (family == "risk") {
        check_keys(params, {"rate", "h", "g"}, pw);
        RiskParams p;
        if (params.contains("rate")) p.rate = grid(params.at("rate"), pw + ".rate");
        if (params.contains("h")) p.h = zfunction(params.at("h"), pw + ".h");
        if (params.contains("g")) p.g = zfunction(params.at("g"), pw + ".g");
        return DriverSpec::risk(l, p, c, alpha);
    }
    fail(where + ".family", "unknown driver family '" + family + "' (linear, risk)");
}

TerminalShape terminal_shape(const std::string& s, const std::string& where) {
    if (s == "identity") return TerminalShape::identity;
    if (s == "sin") return TerminalShape::sin;
    if (s == "cos") return TerminalShape::cos;
    if (s == "tanh") return TerminalShape::tanh;
    if (s == "square") return TerminalShape::square;
    if (s == "softabs") return TerminalShape::softabs;
    fail(where, "unknown terminal shape '" + s + "'");
}

TerminalSpec terminal(const json& v, const std::string& where) {
    check_keys(v, {"family", "params"}, where);
    if (!v.contains("family")) fail(where, "missing 'family'");
    const std::string family = text(v.at("family"), where + ".family");
    const json params = v.contains("params") ? v.at("params") : json::object();
    const std::string pw = where + ".params";
    const auto grid_or = [&](const char* key, double fallback) {
        return params.contains(key) ? grid(params.at(key), pw + "." + key) : GridFunction(fallback);
    };
    if (family == "deterministic") {
        check_keys(params, {"phi"}, pw);
        return TerminalSpec::deterministic(grid_or("phi", 0.0));
    }
    if (family == "affine") {
        check_keys(params, {"phi", "theta"}, pw);
        return TerminalSpec::affine(grid_or("phi", 0.0), grid_or("theta", 1.0));
    }
    if (family == "smooth") {
        check_keys(params, {"phi", "theta", "shape"}, pw);
        if (!params.contains("shape")) fail(pw, "missing 'shape'");
        return TerminalSpec::smooth(grid_or("phi", 0.0), grid_or("theta", 1.0),
                                    terminal_shape(text(params.at("shape"), pw + ".shape"), pw + ".shape"));
    }
    fail(where + ".family", "unknown terminal family '" + family + "' (deterministic, affine, smooth)");
}

std::vector<int> int_list(const json& v, const std::string& where) {
    if (v.is_number_integer()) return {integer(v, where)};
    if (!v.is_array()) fail(where, "expected an integer or an array of integers");
    std::vector<int> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(integer(v[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

ComparisonSection comparison(const json& v, const ScenarioFile& base, const std::string& w) {
    check_keys(v, {"f1", "fbar", "f2", "g", "zeta1", "zeta2", "zeta_bar", "fbar_nondecreasing_y",
                   "fbar_nondecreasing_ybar", "p_max", "samples"},
               w);
    const LatticeSpec& l = base.scenario.lattice;
    for (const char* key : {"f1", "fbar", "f2", "zeta1", "zeta2"}) {
        if (!v.contains(key)) fail(w, std::string("missing '") + key + "'");
    }
    ComparisonSection s{ComparisonScenario{driver(v.at("f1"), l, w + ".f1"), driver(v.at("fbar"), l, w + ".fbar"),
                                           driver(v.at("f2"), l, w + ".f2"),
                                           v.contains("g") ? driver(v.at("g"), l, w + ".g") : base.scenario.driver,
                                           terminal(v.at("zeta1"), w + ".zeta1"), terminal(v.at("zeta2"), w + ".zeta2"),
                                           std::nullopt, true, true},
                        3, 2000};
    if (v.contains("zeta_bar")) s.scenario.zeta_bar = terminal(v.at("zeta_bar"), w + ".zeta_bar");
    if (v.contains("fbar_nondecreasing_y"))
        s.scenario.fbar_nondecreasing_y = boolean(v.at("fbar_nondecreasing_y"), w + ".fbar_nondecreasing_y");
    if (v.contains("fbar_nondecreasing_ybar"))
        s.scenario.fbar_nondecreasing_ybar = boolean(v.at("fbar_nondecreasing_ybar"), w + ".fbar_nondecreasing_ybar");
    if (v.contains("p_max")) s.p_max = integer(v.at("p_max"), w + ".p_max");
    if (v.contains("samples")) s.samples = integer(v.at("samples"), w + ".samples");
    if (s.p_max < 1) fail(w + ".p_max", "must be at least 1");
    if (s.samples < 1) fail(w + ".samples", "must be at least 1");
    return s;
}

RiskSection risk(const json& v, const ScenarioFile& base, const std::string& w) {
    check_keys(v, {"payoff2", "translation_c", "convexity_lambda", "homogeneity_lambda", "past_t_idx"}, w);
    if (base.scenario.driver.as_risk() == nullptr) fail(w, "the risk section needs driver.family = \"risk\"");
    RiskSection s;
    s.payoff2.zeta = v.contains("payoff2") ? terminal(v.at("payoff2"), w + ".payoff2") : base.scenario.terminal.shifted(0.5);
    s.translation_c = number_or(v, "translation_c", 1.0, w);
    s.convexity_lambda = number_or(v, "convexity_lambda", 0.5, w);
    s.homogeneity_lambda = number_or(v, "homogeneity_lambda", 2.0, w);
    if (v.contains("past_t_idx")) s.past_t_idx = integer(v.at("past_t_idx"), w + ".past_t_idx");
    if (s.past_t_idx < 0 || s.past_t_idx > base.scenario.lattice.n_steps) fail(w + ".past_t_idx", "outside the grid");
    if (!(s.convexity_lambda >= 0.0 && s.convexity_lambda <= 1.0)) fail(w + ".convexity_lambda", "must lie in [0, 1]");
    if (!(s.homogeneity_lambda > 0.0)) fail(w + ".homogeneity_lambda", "must be positive");
    return s;
}

MalliavinSection malliavin(const json& v, const ScenarioFile& base, const std::string& w) {
    check_keys(v, {"r_idx", "mean_field_terms", "linearization"}, w);
    MalliavinSection s;
    if (v.contains("r_idx")) s.r_idx = int_list(v.at("r_idx"), w + ".r_idx");
    for (int r : s.r_idx) {
        if (r < 0 || r >= base.scenario.lattice.n_steps) fail(w + ".r_idx", "entries must lie in [0, N)");
    }
    if (v.contains("mean_field_terms")) s.mean_field_terms = boolean(v.at("mean_field_terms"), w + ".mean_field_terms");
    if (v.contains("linearization")) {
        const std::string p = text(v.at("linearization"), w + ".linearization");
        if (p == "path") s.point = LinearizationPoint::path;
        else if (p == "midpoint") s.point = LinearizationPoint::midpoint;
        else fail(w + ".linearization", "expected \"path\" or \"midpoint\"");
    }
    return s;
}

ParticlesSection particles(const json& v, const std::string& w) {
    check_keys(v, {"n_list"}, w);
    ParticlesSection s;
    if (v.contains("n_list")) s.n_list = int_list(v.at("n_list"), w + ".n_list");
    if (s.n_list.empty()) fail(w + ".n_list", "must not be empty");
    for (int n : s.n_list) {
        if (n < 1 || n > kMaxParticles) fail(w + ".n_list", "entries must lie in [1, 3]");
    }
    return s;
}

} // namespace

ScenarioFile parse_scenario(const std::string& source) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::exception& e) {
        fail("scenario", std::string("malformed JSON: ") + e.what());
    }
    check_keys(doc, {"lattice", "driver", "terminal", "solver", "comparison", "risk", "malliavin", "particles"},
               "scenario");

    const json& lat = object_at(doc, "lattice", "scenario");
    check_keys(lat, {"n_steps", "horizon"}, "lattice");
    if (!lat.contains("n_steps")) fail("lattice", "missing 'n_steps'");
    const int n = integer(lat.at("n_steps"), "lattice.n_steps");
    const double horizon = number_or(lat, "horizon", 1.0, "lattice");

    try {
        const LatticeSpec l = build_lattice(n, horizon);
        const DriverSpec d = driver(object_at(doc, "driver", "scenario"), l, "driver");
        const TerminalSpec t = terminal(object_at(doc, "terminal", "scenario"), "terminal");
        t.phi().check_against(l, "terminal phi");
        for (const auto& term : t.terms()) term.theta.check_against(l, "terminal theta");

        std::optional<double> beta;
        double tol = 1e-10;
        int max_iter = 500;
        if (doc.contains("solver")) {
            const json& s = object_at(doc, "solver", "scenario");
            check_keys(s, {"beta", "tol", "max_iter"}, "solver");
            beta = optional_number(s, "beta", "solver");
            tol = number_or(s, "tol", tol, "solver");
            if (s.contains("max_iter")) max_iter = integer(s.at("max_iter"), "solver.max_iter");
        }
        if (!(tol > 0.0)) fail("solver.tol", "must be positive");
        if (max_iter < 1) fail("solver.max_iter", "must be at least 1");
        if (beta && !(*beta >= 0.0)) fail("solver.beta", "must be nonnegative");

        ScenarioFile f{make_scenario(d, t, beta), tol, max_iter, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
        if (doc.contains("comparison")) f.comparison = comparison(object_at(doc, "comparison", "scenario"), f, "comparison");
        if (doc.contains("risk")) f.risk = risk(object_at(doc, "risk", "scenario"), f, "risk");
        if (doc.contains("malliavin")) f.malliavin = malliavin(object_at(doc, "malliavin", "scenario"), f, "malliavin");
        if (doc.contains("particles")) f.particles = particles(object_at(doc, "particles", "scenario"), "particles");
        return f;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InputError) throw;
        throw Error(ErrorKind::InputError, std::string("invalid scenario: ") + e.what());
    }
}

ScenarioFile load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::InputError, "cannot read scenario file " + file.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_scenario(os.str());
}

} // namespace mfbdsvie
