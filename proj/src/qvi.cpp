#include "pqvi/qvi.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <string>

#include "pqvi/error.hpp"

namespace pqvi {

void FixedPointOptions::validate() const {
    if (!(tol_fix >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tol_fix must be >= 0");
    if (max_outer < 1) throw Error(ErrorKind::InvalidArgument, "max_outer must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorKind::InvalidArgument, "damping must lie in (0, 1]");
}

namespace {

Trajectory project_nodewise(const Trajectory& u, const Parameter& theta, const ConstraintFamily& family,
                            const SpaceMetric& m) {
    std::vector<Vec> states(static_cast<std::size_t>(u.nodes()));
    for (int k = 0; k < u.nodes(); ++k) states[static_cast<std::size_t>(k)] = project(family, theta, k, u[k], m);
    return Trajectory(std::move(states));
}

}  // namespace

QviSolution fixed_point_solve(const QviProblem& problem, const Trajectory& seed) {
    problem.options.validate();
    problem.mode.validate();
    const TimeGrid& grid = problem.grid;
    const SpaceMetric& m = problem.metric;
    seed.require_shape(grid, m, "fixed_point_solve seed");
    problem.f.require_shape(grid, m, "fixed_point_solve forcing");

    Trajectory u = project_nodewise(seed, lambda_apply(problem.feedback, seed, grid, m), problem.family, m);
    double omega = problem.options.damping;
    std::vector<double> history;
    for (int it = 0; it < problem.options.max_outer; ++it) {
        Parameter theta = lambda_apply(problem.feedback, u, grid, m);
        Evolution step;
        try {
            step = catching_up_solve(theta, problem.family, problem.op, u, problem.f, problem.u0, problem.mode, grid, m);
        } catch (const Error& e) {
            throw Error(e.kind(), "outer iteration " + std::to_string(it) + ": " + e.what());
        }
        // Right rule: u_0 is shared, the implicit states live on (t_{k-1}, t_k].
        const double gap = lp_h_norm(step.u - u, grid, m, Quadrature::Right);
        history.push_back(gap);
        if (gap < problem.options.tol_fix) {
            return QviSolution{std::move(step.u), std::move(theta), std::move(step.alpha), std::move(history), true,
                               omega};
        }
        const std::size_t h = history.size();
        if (problem.options.oscillation_fallback && omega > 0.5 && h >= 3 && history[h - 1] >= history[h - 2] &&
            history[h - 2] >= history[h - 3]) {
            omega = 0.5;
        }
        if (it + 1 == problem.options.max_outer) {
            return QviSolution{std::move(step.u), std::move(theta), std::move(step.alpha), std::move(history), false,
                               omega};
        }
        u = (1.0 - omega) * u + omega * step.u;
    }
    throw Error(ErrorKind::NonConvergence, "fixed_point_solve: unreachable");
}

Clustering cluster_trajectories(const std::vector<Trajectory>& solutions, const std::vector<bool>& include,
                                double cluster_tol) {
    Clustering out{std::vector<int>(solutions.size(), -1), {}, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        if (i < include.size() && !include[i]) continue;
        for (std::size_t c = 0; c < out.representatives.size(); ++c) {
            const auto& rep = solutions[static_cast<std::size_t>(out.representatives[c])];
            if (sup_abs_distance(solutions[i], rep) <= cluster_tol) {
                out.cluster_of[i] = static_cast<int>(c);
                break;
            }
        }
        if (out.cluster_of[i] < 0) {
            out.cluster_of[i] = static_cast<int>(out.representatives.size());
            out.representatives.push_back(static_cast<int>(i));
        }
    }
    for (std::size_t a = 0; a < out.representatives.size(); ++a) {
        for (std::size_t b = a + 1; b < out.representatives.size(); ++b) {
            out.min_separation =
                std::min(out.min_separation, sup_abs_distance(solutions[static_cast<std::size_t>(out.representatives[a])],
                                                              solutions[static_cast<std::size_t>(out.representatives[b])]));
        }
    }
    return out;
}

Exploration multi_seed_explore(const QviProblem& problem, const std::vector<Trajectory>& seeds, double cluster_tol) {
    if (seeds.size() < 2) throw Error(ErrorKind::InvalidArgument, "multi_seed_explore needs at least two seeds");
    if (!(cluster_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "cluster_tol must be positive");
    std::vector<std::future<QviSolution>> jobs;
    jobs.reserve(seeds.size());
    for (const Trajectory& s : seeds) {
        jobs.push_back(std::async(std::launch::async, [&problem, &s] { return fixed_point_solve(problem, s); }));
    }
    Exploration out;
    for (auto& j : jobs) out.solutions.push_back(j.get());

    std::vector<Trajectory> us;
    std::vector<bool> include;
    for (const QviSolution& sol : out.solutions) {
        us.push_back(sol.u);
        include.push_back(sol.converged);
    }
    Clustering c = cluster_trajectories(us, include, cluster_tol);
    out.cluster_of = std::move(c.cluster_of);
    out.representatives = std::move(c.representatives);
    out.min_separation = c.min_separation;
    return out;
}

Certificate certify(const QviProblem& problem, const QviSolution& solution, int family_size,
                    std::uint64_t family_seed) {
    const TimeGrid& grid = problem.grid;
    const SpaceMetric& m = problem.metric;
    Certificate c{};
    const auto [viol, node] = trajectory_violation(solution.u, solution.theta, problem.family, m, 1);
    c.feasibility = viol;
    c.feasibility_node = node;
    c.gap = solution.history.empty() ? std::numeric_limits<double>::infinity() : solution.history.back();
    c.theta_consistency =
        theta_distance(lambda_apply(problem.feedback, solution.u, grid, m), solution.theta, grid, m.p());
    // g = f - A(u; u) is the candidate element of L(theta; u).
    const Trajectory g = problem.f - solution.alpha;
    const auto tests = standard_test_family(solution.u, solution.theta, problem.family, grid, m, family_size,
                                            family_seed);
    c.weak_residual = weak_residual(solution.u, g, solution.theta, problem.family, tests, grid, m).worst;
    c.family_size = static_cast<int>(tests.size());
    c.energy = energy_check(solution.u, solution.alpha, problem.f, solution.theta, problem.family, grid, m);
    return c;
}

}  // namespace pqvi
