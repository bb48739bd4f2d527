// Scenario front end: `pqvi run <config>` and `pqvi verify <config> <dir>`.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pqvi/error.hpp"
#include "pqvi/scenario.hpp"

namespace {

int dispatch(const std::string& config, const std::optional<std::string>& checks,
             const std::function<int(pqvi::Scenario&)>& body) {
    try {
        pqvi::Scenario sc = pqvi::load_scenario(config);
        if (checks) pqvi::select_checks(sc, *checks);
        return body(sc);
    } catch (const pqvi::Error& e) {
        if (e.kind() == pqvi::ErrorKind::Config) {
            std::cerr << "config error: " << e.what() << '\n';
            return pqvi::kExitConfig;
        }
        std::cerr << "solver failure: " << e.what() << '\n';
        return pqvi::kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return pqvi::kExitSolver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parabolic QVI scenarios"};
    app.require_subcommand(1);

    std::string config, dir;
    std::optional<std::string> output_dir, checks;
    std::optional<int> seed_count;

    auto* run = app.add_subcommand("run", "solve a scenario and write u.csv, theta.csv, report.json, meta.json");
    run->add_option("config", config, "scenario config")->required();
    run->add_option("--output-dir", output_dir, "overrides [output] dir");
    run->add_option("--seed-count", seed_count, "truncate or extend the seed list");
    run->add_option("--check", checks, "all, none, or a comma list of check names");

    auto* verify = app.add_subcommand("verify", "recompute the certificates from stored outputs");
    verify->add_option("config", config, "scenario config")->required();
    verify->add_option("dir", dir, "directory written by run")->required();
    verify->add_option("--check", checks, "all, none, or a comma list of check names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : pqvi::kExitConfig;
    }

    if (*run) {
        return dispatch(config, checks, [&](pqvi::Scenario& sc) {
            return pqvi::run_scenario(sc, pqvi::RunOptions{output_dir, seed_count}, std::cerr);
        });
    }
    return dispatch(config, checks,
                    [&](pqvi::Scenario& sc) { return pqvi::verify_scenario(sc, dir, std::cerr); });
}
