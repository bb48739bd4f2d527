#pragma once

#include <cstdint>
#include <vector>

#include "pqvi/constraints.hpp"
#include "pqvi/evolution.hpp"
#include "pqvi/feedback.hpp"
#include "pqvi/semimonotone.hpp"

namespace pqvi {

struct FixedPointOptions {
    double tol_fix = 1e-8;   ///< converged when the gap is strictly below this
    int max_outer = 100;
    double damping = 1.0;    ///< omega in (0, 1]
    bool oscillation_fallback = true;  ///< drop omega to 0.5 after three non-decreasing gaps

    void validate() const;
};

struct QviProblem {
    FeedbackSpec feedback;
    SemimonotoneOperator op;
    ConstraintFamily family;
    Trajectory f;
    Vec u0;
    TimeGrid grid;
    SpaceMetric metric;
    StepMode mode;
    FixedPointOptions options;
};

struct QviSolution {
    Trajectory u;
    Parameter theta;              ///< the parameter u was solved against
    Trajectory alpha;             ///< A(v; u) from the last inner solve
    std::vector<double> history;  ///< |S(u^m) - u^m|_{L^p(0,T;H)} per outer iteration
    bool converged;
    double damping;               ///< omega in force at the end
};

/// Picard iteration on u -> catching_up_solve(Lambda(u), A(u; .), f, u0).
/// The seed is projected nodewise onto K(Lambda(seed); t_k) first.
/// Non-convergence is reported through `converged`, not thrown.
QviSolution fixed_point_solve(const QviProblem& problem, const Trajectory& seed);

struct Exploration {
    std::vector<QviSolution> solutions;  ///< by seed index
    std::vector<int> cluster_of;         ///< -1 for non-converged runs
    std::vector<int> representatives;    ///< seed index of each cluster's first member
    double min_separation;               ///< smallest sup distance between representatives
};

struct Clustering {
    std::vector<int> cluster_of;       ///< cluster index per input, -1 when skipped
    std::vector<int> representatives;  ///< input index of each cluster's first member
    double min_separation;             ///< smallest sup distance between representatives
};

/// Greedy clustering in input order by sup-norm distance; inputs with
/// include[i] == false are skipped.
Clustering cluster_trajectories(const std::vector<Trajectory>& solutions, const std::vector<bool>& include,
                                double cluster_tol);

/// Independent fixed_point_solve per seed (run concurrently), then greedy
/// clustering in seed order by sup-norm distance.
Exploration multi_seed_explore(const QviProblem& problem, const std::vector<Trajectory>& seeds, double cluster_tol);

struct Certificate {
    double feasibility;       ///< max violation over nodes k >= 1
    int feasibility_node;
    double gap;               ///< last fixed-point gap
    double theta_consistency; ///< d_Theta(Lambda u, theta)
    double weak_residual;     ///< against the test family below
    int family_size;
    std::optional<double> energy;
};

/// Re-derives every certificate quantity for `solution`.
Certificate certify(const QviProblem& problem, const QviSolution& solution, int family_size = 20,
                    std::uint64_t family_seed = 11);

}  // namespace pqvi
