#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pqvi/qvi.hpp"

namespace pqvi {

/// Check names accepted by --check and [checks] enabled.
const std::vector<std::string>& known_checks();

struct CheckSettings {
    std::set<std::string> enabled;
    double tol_weak;
    double tol_theta;
    double tol_fixed_point;
    double tol_energy;
    int family_size;
    int min_clusters;
};

/// A validated scenario file. Every key of the file is checked against the
/// scenario's schema before anything is computed.
struct Scenario {
    std::string name;  ///< scalar-example | sweep2d | gradient-pde
    QviProblem problem;
    std::vector<std::string> seeds;
    double cluster_tol;
    CheckSettings checks;
    std::string output_dir;
    std::map<std::string, std::string> echo;  ///< section.key -> raw value
};

/// Throws Error(Config) for unreadable files, unknown keys, bad values and
/// failed domain validation (e.g. p < 2).
Scenario load_scenario(const std::string& path);

/// Seed trajectory from a spec such as "const:1", "decay:0.5", "random:3" or "zero".
Trajectory make_seed(const Scenario& scenario, const std::string& spec);

/// Applies --check: "all", "none" or a comma list of known_checks().
void select_checks(Scenario& scenario, const std::string& selection);

/// Name of the feasibility check for the scenario's constraint family.
std::string feasibility_check_name(const Scenario& scenario);

struct RunOptions {
    std::optional<std::string> output_dir;
    std::optional<int> seed_count;
};

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitCheck = 4 };

/// run: solve, write u.csv, theta.csv, u_seed<i>.csv, report.json, meta.json.
int run_scenario(Scenario& scenario, const RunOptions& options, std::ostream& err);

/// verify: reload the artifacts in `dir` and recompute every enabled check.
int verify_scenario(const Scenario& scenario, const std::string& dir, std::ostream& err);

/// Outcome of one certificate check with the measured values behind it.
struct CheckOutcome {
    std::string name;
    bool pass;
    std::string message;
    std::map<std::string, double> values;
};

/// Recomputes the certificates of (u, theta) and the seed solutions; the
/// same code path serves run and verify.
std::vector<CheckOutcome> evaluate_checks(const Scenario& scenario, const Trajectory& u, const Parameter& theta,
                                          const std::vector<Trajectory>& seed_solutions);

}  // namespace pqvi
