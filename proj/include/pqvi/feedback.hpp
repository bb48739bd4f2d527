#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "pqvi/parameters.hpp"
#include "pqvi/spaces.hpp"
#include "pqvi/table.hpp"

namespace pqvi {

/// Lambda(v) = L^2(0,T) projection of v onto the discrete X_0.
struct ScalarProjection {
    double slope_bound;  ///< c0
};

/// {x : normal . x >= offset}, unit normal.
struct HalfPlane {
    Vec2 normal;
    double offset;
};

struct Box {
    Vec2 lo;
    Vec2 hi;
};

using PlanarSet = std::variant<HalfPlane, Box>;

Vec2 project(const PlanarSet& set, const Vec2& x);
double distance_to_origin(const PlanarSet& set);
double set_violation(const PlanarSet& set, const Vec2& x);

/// zeta' + dI_Y(zeta) ∋ G(t, int_0^t u, zeta); Lambda(u) = [zeta/|zeta|, gamma, zeta].
struct SweepDynamics {
    std::function<Vec2(double t, const Vec2& memory, const Vec2& zeta)> field;
    double field_lipschitz;  ///< C_G
    PlanarSet region;        ///< Y, 0 not in Y
    Vec2 zeta0;
    PiecewiseLinear gamma;
    double gamma_lo;
    double gamma_hi;
    std::vector<double> probes;
};

/// zeta_t - zeta_xx = source(x, t, u) with d zeta/dn + n0 zeta = 0 on a 1D
/// node grid x_i = i * mesh; Lambda(u) = [gamma, zeta].
struct HeatRobin {
    std::function<double(double x, double t, double u)> source;
    double n0;
    Vec zeta0;
    double mesh;
    PiecewiseLinear gamma;
    double eps0;
    std::vector<double> probes;
    double compat_tol = 1e-8;
};

using FeedbackSpec = std::variant<ScalarProjection, SweepDynamics, HeatRobin>;

const char* feedback_name(const FeedbackSpec& spec);

struct ScalarFeedback {
    ScalarParameter theta;
    double kkt_residual;  ///< stationarity/complementarity defect of the multipliers
};

ScalarFeedback lambda_scalar(const ScalarProjection& spec, const Trajectory& v, const TimeGrid& grid);

/// Projected Euler: zeta_{k+1} = P_Y(zeta_k + tau G(t_k, W_k, zeta_k)) with
/// W_k = sum_{j<k} u_j tau.
SweepParameter lambda_sweep(const SweepDynamics& spec, const Trajectory& u, const TimeGrid& grid);

PdeParameter lambda_pde(const HeatRobin& spec, const Trajectory& u, const TimeGrid& grid);

/// Checks the discrete Robin compatibility of zeta0 with second-order
/// one-sided differences; returns the larger end defect.
double robin_compatibility_defect(const Vec& zeta0, double mesh, double n0);

/// Implicit Euler with ghost-node Robin closure:
/// (I - tau Delta_h) zeta^{k+1} = zeta^k + tau source(x_i, t_{k+1}, i, k+1).
std::vector<Vec> solve_heat_robin(const Vec& zeta0, double mesh, double n0, const TimeGrid& grid,
                                  const std::function<double(double x, double t, int node, int k)>& source);

/// Trapezoid-weighted spatial integral; conserved by the scheme when n0 = 0
/// and the source vanishes.
double trapezoid_mass(const Vec& zeta, double mesh);

/// Dispatch on the variant. `m` fixes the state dimension checks.
Parameter lambda_apply(const FeedbackSpec& spec, const Trajectory& u, const TimeGrid& grid, const SpaceMetric& m);

/// d_Theta(Lambda v_n, Lambda v) for each n.
std::vector<double> lambda_continuity_probe(const FeedbackSpec& spec, const std::vector<Trajectory>& v_seq,
                                            const Trajectory& v, const TimeGrid& grid, const SpaceMetric& m);

}  // namespace pqvi
