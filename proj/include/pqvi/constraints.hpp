#pragma once

#include <functional>
#include <variant>

#include "pqvi/parameters.hpp"
#include "pqvi/spaces.hpp"

namespace pqvi {

/// K(z; t) = { r : r_i >= z(t) - offset } (componentwise).
struct HalfLine {
    double offset = 0.0;
};

/// K(theta; t) = { z in R^2 : a(t).(z - a(t)) = 0, |z - a(t)| <= gamma(zeta(t)) }.
struct CircleSegment {};

enum class BallMethod { Exact, Dykstra };

struct DykstraOptions {
    double gap_tol = 1e-9;
    int max_sweeps = 10000;
};

/// K(theta; t) = { z : z = 0 at both boundary nodes, |z_{i+1} - z_i| / h <= gamma_edge },
/// gamma_edge = min of gamma(zeta) at the two edge nodes. Needs a
/// discrete-gradient metric.
struct GradientBall {
    BallMethod method = BallMethod::Exact;
    DykstraOptions dykstra{};
};

using ConstraintFamily = std::variant<HalfLine, CircleSegment, GradientBall>;

const char* family_name(const ConstraintFamily& family);

/// Largest violated defining inequality/equality at node k; 0 for members.
double max_violation(const ConstraintFamily& family, const Parameter& theta, int k, const Vec& z,
                     const SpaceMetric& m);

bool member(const ConstraintFamily& family, const Parameter& theta, int k, const Vec& z,
            const SpaceMetric& m, double tol);

/// H-metric projection onto K(theta; t_k).
Vec project(const ConstraintFamily& family, const Parameter& theta, int k, const Vec& z,
            const SpaceMetric& m);

/// Difference bounds h * gamma_edge for the gradient ball at node k.
Vec gradient_edge_bounds(const PdeParameter& theta, int k, const SpaceMetric& m);

struct DykstraResult {
    Vec z;
    double dual_gap;
    int sweeps;
};

/// Dykstra's alternating projections over the Dirichlet set and per-edge
/// slabs. Stops when the duality gap and the infeasibility are both below
/// `gap_tol`; throws Error(NonConvergence) with the final gap after
/// `max_sweeps`.
DykstraResult project_gradient_dykstra(const Vec& z, const Vec& edge_bounds, const SpaceMetric& m,
                                       const DykstraOptions& options);

/// R z for the rotation taking a onto a_bar (both unit vectors).
Vec2 rotation_apply(const Vec2& a, const Vec2& a_bar, const Vec2& z);

/// F(z) = (1 + c0(eps)) R z + sigma.
struct TransformationMap {
    std::function<double(double)> c0 = [](double eps) { return -eps; };
};

/// Parameter gap below which transform() maps K(theta) into K(theta_bar).
double admissible_radius(const TransformationMap& map, const ConstraintFamily& family,
                         const Parameter& theta, double eps);

Vec transform(const TransformationMap& map, const ConstraintFamily& family, const Parameter& theta,
              const Parameter& theta_bar, double eps, int k, const Vec& z, const TimeGrid& grid,
              const SpaceMetric& m);

/// Measured constants of the transformation between two parameters.
struct TransformConstants {
    double distance;  ///< d_Theta(theta, theta_bar)
    double r0;        ///< (|R-I|_{C(B(H))} + |R-I|_{C(B(V))} + |R'|_{L^{p'}(B(H))}) / d
    double sigma0;    ///< (|sigma|_{C(V)} + |sigma'|_{L^{p'}(V*)}) / (d + eps)
    double rho;       ///< |R|_{C(B(V))}
};

TransformConstants measure_transform(const TransformationMap& map, const ConstraintFamily& family,
                                     const Parameter& theta, const Parameter& theta_bar, double eps,
                                     const TimeGrid& grid, const SpaceMetric& m);

struct MoscoReport {
    double gap;    ///< |F eta - eta|_{L^p(0,T;V)}
    double bound;  ///< (R0 d + |c0| rho) |eta| + sigma0 (d + eps) T^{1/p}
    double eta_norm;
    TransformConstants constants;
};

MoscoReport mosco_gap(const TransformationMap& map, const ConstraintFamily& family, const Parameter& theta,
                      const Parameter& theta_bar, double eps, const Trajectory& eta, const TimeGrid& grid,
                      const SpaceMetric& m);

}  // namespace pqvi
