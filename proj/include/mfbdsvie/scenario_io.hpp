#pragma once
// JSON scenario files. Every object is checked against its allowed keys before
// anything is built; unknown keys, wrong types and invalid values raise
// InputError.
//
// {
//   "lattice":  {"n_steps": 4, "horizon": 1.0},
//   "driver":   {"family": "linear" | "risk", "params": {...}, "c": 0.1, "alpha": 0.01},
//   "terminal": {"family": "deterministic" | "affine" | "smooth", "params": {...}},
//   "solver":   {"beta": 10.0, "tol": 1e-10, "max_iter": 500},
//   "comparison": {...}, "risk": {...}, "malliavin": {...}, "particles": {...}
// }

#include "mfbdsvie/comparison.hpp"
#include "mfbdsvie/malliavin.hpp"
#include "mfbdsvie/particles.hpp"
#include "mfbdsvie/risk.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfbdsvie {

struct ComparisonSection {
    ComparisonScenario scenario;
    int p_max = 3;
    int samples = 2000;
};

struct RiskSection {
    PayoffStream payoff2;          ///< second leg of the convexity and subadditivity checks
    double translation_c = 1.0;
    double convexity_lambda = 0.5;
    double homogeneity_lambda = 2.0;
    int past_t_idx = 1;
};

struct MalliavinSection {
    std::vector<int> r_idx;        ///< empty means every r in [0, N)
    bool mean_field_terms = false;
    LinearizationPoint point = LinearizationPoint::path;
};

struct ParticlesSection {
    std::vector<int> n_list{1, 2, 3};
};

struct ScenarioFile {
    Scenario scenario;
    double tol = 1e-10;
    int max_iter = 500;
    std::optional<ComparisonSection> comparison;
    std::optional<RiskSection> risk;
    std::optional<MalliavinSection> malliavin;
    std::optional<ParticlesSection> particles;
};

ScenarioFile parse_scenario(const std::string& text);
ScenarioFile load_scenario(const std::filesystem::path& file);

} // namespace mfbdsvie
