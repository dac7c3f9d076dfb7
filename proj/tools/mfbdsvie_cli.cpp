#include "mfbdsvie/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Exact lattice solver and checks for mean-field backward doubly stochastic Volterra equations"};
    app.require_subcommand(1);

    mfbdsvie::RunOptions opts;
    double tol = 0.0;
    int max_iter = 0;
    const std::map<std::string, std::string> about{
        {"solve", "Picard solve; writes the solution, iteration trace and norms"},
        {"compare", "solve a comparison triple and run the monotone chain"},
        {"risk", "evaluate the dynamic risk measure and its axiom checks"},
        {"malliavin", "flip derivatives, linearized equations and Clark-Ocone checks"},
        {"particles", "interacting particle systems against the mean-field limit"},
        {"norms", "weighted norms, norm equivalence and stability checks"},
    };
    for (const auto& name : mfbdsvie::subcommands()) {
        CLI::App* sub = app.add_subcommand(name, about.at(name));
        sub->add_option("--scenario", opts.scenario, "scenario JSON file")->required();
        sub->add_option("--out", opts.out_dir, "output directory")->required();
        sub->add_option("--tol", tol, "Picard stopping tolerance");
        sub->add_option("--max-iter", max_iter, "Picard iteration cap");
        sub->callback([&, name, sub] {
            opts.subcommand = name;
            if (sub->count("--tol") > 0) opts.tol = tol;
            if (sub->count("--max-iter") > 0) opts.max_iter = max_iter;
        });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mfbdsvie::kExitInput;
    }
    return mfbdsvie::run(opts, std::cerr);
}
