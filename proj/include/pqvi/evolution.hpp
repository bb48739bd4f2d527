#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pqvi/constraints.hpp"
#include "pqvi/parameters.hpp"
#include "pqvi/semimonotone.hpp"
#include "pqvi/spaces.hpp"

namespace pqvi {

enum class StepKind { Plain, DualityRegularized };

/// Implicit-Euler step options. The inner VI is solved by the projected
/// fixed-point map z <- P_K(z - rho * r(z)).
struct StepMode {
    StepKind kind = StepKind::Plain;
    double reg_weight = 1.0;     ///< scales F in the regularized mode
    double step = 0.0;           ///< rho; 0 picks tau / (1 + tau * Lip_est)
    double tol_inner = 1e-11;    ///< bound on the distance to the step's exact solution
    int max_inner = 50000;
    std::uint64_t inner_seed = 0;  ///< 0 starts at P_K(u_prev); otherwise a seeded perturbation

    void validate() const;
};

struct StepResult {
    Vec z;
    int iterations;
    double last_change;
};

/// One implicit-Euler step: z in K(theta; t_{k_next}) with
/// <(z - u_prev)/tau + A(v; z) [+ lambda F z] - f_step, w - z> >= 0 for w in K.
/// f_step is the forcing on [t_{k_next - 1}, t_{k_next}) (left node).
StepResult implicit_step(const Vec& u_prev, int k_next, const Parameter& theta, const ConstraintFamily& family,
                         const SemimonotoneOperator& op, const Trajectory& v, const Vec& f_step,
                         const StepMode& mode, const TimeGrid& grid, const SpaceMetric& m);

/// r(z) = (z - u_prev)/tau + A(v; z) [+ lambda F z] - f_step, the step residual.
Vec step_residual(const Vec& z, const Vec& u_prev, int k_next, const SemimonotoneOperator& op,
                  const Trajectory& v, const Vec& f_step, const StepMode& mode, const TimeGrid& grid,
                  const SpaceMetric& m);

/// Lipschitz estimate of z -> A(v; z) [+ lambda F z] on K(theta; t_k) in H.
double step_lipschitz(const Vec& u_prev, int k, const Parameter& theta, const ConstraintFamily& family,
                      const SemimonotoneOperator& op, const Trajectory& v, const StepMode& mode,
                      const TimeGrid& grid, const SpaceMetric& m);

struct Evolution {
    Trajectory u;
    Trajectory alpha;  ///< A(v_k; u_k)
    int max_inner;
    long total_inner;
};

/// Catching-up scheme over the whole grid. u0 must lie within 1e-6 of
/// K(theta; 0); it is stored unmodified as u_0.
Evolution catching_up_solve(const Parameter& theta, const ConstraintFamily& family, const SemimonotoneOperator& op,
                            const Trajectory& v, const Trajectory& f, const Vec& u0, const StepMode& mode,
                            const TimeGrid& grid, const SpaceMetric& m);

constexpr double kFeasibilityTol = 1e-8;

/// Largest membership violation over nodes k >= first and the node where it occurs.
std::pair<double, int> trajectory_violation(const Trajectory& u, const Parameter& theta,
                                            const ConstraintFamily& family, const SpaceMetric& m,
                                            int first = 1);

struct WeakResidualReport {
    double worst;                ///< max over the family
    int worst_index;
    std::vector<double> margins;  ///< one per test trajectory
};

/// max over eta of sum_{k<K} <eta'_k - g_k, u_k - eta_k> tau - |u_0 - eta_0|^2 / 2,
/// with forward differences eta'_k. Infeasible u (nodes k >= 1) or eta
/// (all nodes) raise Error(Infeasible) naming the offender.
WeakResidualReport weak_residual(const Trajectory& u, const Trajectory& g, const Parameter& theta,
                                 const ConstraintFamily& family, const std::vector<Trajectory>& test_family,
                                 const TimeGrid& grid, const SpaceMetric& m);

/// |u_t - ubar_t|^2 / 2 - |u_s - ubar_s|^2 / 2 - sum_{k=s}^{t-1} <f_k - fbar_k, u_k - ubar_k> tau.
double contraction_check(const Trajectory& u, const Trajectory& u_bar, const Trajectory& f,
                         const Trajectory& f_bar, int s, int t, const TimeGrid& grid, const SpaceMetric& m);

/// max over j of |u_j|^2/2 - |u_0|^2/2 + sum_{k<j} (<alpha_{k+1}, u_{k+1}> - <f_k, u_{k+1}>) tau,
/// the implicit-Euler form of the energy estimate tested with eta = 0.
/// nullopt when 0 is not in K(theta; t_k) for some k >= 1.
std::optional<double> energy_check(const Trajectory& u, const Trajectory& alpha, const Trajectory& f,
                                   const Parameter& theta, const ConstraintFamily& family,
                                   const TimeGrid& grid, const SpaceMetric& m);

struct GraphGap {
    double sup_h;  ///< C([0,T]; H)
    double lp_v;   ///< L^p(0,T; V)
};

struct GraphProbe {
    std::vector<GraphGap> gaps;  ///< u_n against the reference solve
    GraphGap reference;          ///< reference solve against the supplied u
};

/// For each n, solves L(theta_n; u_n) + F u_n ∋ g + F u with u_n(0) = u0_n
/// (regularized mode, A = 0). The reference is the same solve with
/// (theta, u0); in the continuum it reproduces u.
GraphProbe graph_convergence_probe(const Parameter& theta, const Vec& u0, const std::vector<Parameter>& theta_seq,
                                   const std::vector<Vec>& u0_seq, const Trajectory& g, const Trajectory& u,
                                   const ConstraintFamily& family, const StepMode& mode, const TimeGrid& grid,
                                   const SpaceMetric& m);

/// Feasible test trajectories: u itself, nodewise projections of constants,
/// obstacle-following paths and smooth seeded perturbations of u.
std::vector<Trajectory> standard_test_family(const Trajectory& u, const Parameter& theta,
                                             const ConstraintFamily& family, const TimeGrid& grid,
                                             const SpaceMetric& m, int count, std::uint64_t seed);

}  // namespace pqvi
