#pragma once

#include <array>
#include <cmath>
#include <variant>
#include <vector>

#include "pqvi/spaces.hpp"
#include "pqvi/table.hpp"

namespace pqvi {

using Vec2 = std::array<double, 2>;

/// Obstacle path z_k for the scalar half-line family. Built either as a
/// member of the discrete X_0 = { z_0 = 1, 0 <= (z_{k+1} - z_k)/tau <= c0 }
/// or as an unconstrained obstacle path.
struct ScalarParameter {
    Vec z;
    double slope_bound;  ///< infinity for unconstrained obstacle paths
    bool in_x0;

    static ScalarParameter x0_member(Vec z, double slope_bound, const TimeGrid& grid,
                                     double tol = 1e-9);
    static ScalarParameter obstacle(Vec z);
};

/// [a, gamma, zeta] for the planar sweeping process. gamma is radial:
/// gamma(zeta) = profile(|zeta|).
struct SweepParameter {
    std::vector<Vec2> a;
    std::vector<Vec2> zeta;
    PiecewiseLinear gamma;
    double gamma_lo;  ///< gamma_*
    double gamma_hi;  ///< gamma^*
    std::vector<double> probes;  ///< radii where gamma is compared (knots are always included)

    double gamma_at(int k) const;

    static SweepParameter make(std::vector<Vec2> a, std::vector<Vec2> zeta, PiecewiseLinear gamma,
                               double gamma_lo, double gamma_hi, std::vector<double> probes = {});
};

/// [gamma, zeta] for the gradient-constrained PDE; zeta is a nodal field per
/// time node.
struct PdeParameter {
    PiecewiseLinear gamma;
    double eps0;
    std::vector<Vec> zeta;
    std::vector<double> probes;

    double gamma_at(int k, int node) const;

    static PdeParameter make(PiecewiseLinear gamma, double eps0, std::vector<Vec> zeta,
                             std::vector<double> probes = {});
};

using Parameter = std::variant<ScalarParameter, SweepParameter, PdeParameter>;

const char* variant_name(const Parameter& theta);
int parameter_nodes(const Parameter& theta);

/// d_Theta. Scalar: sup over nodes. Sweep: discrete W^{1,p}(0,T;R^2) norm of
/// the a-difference + sup of the gamma difference + sup of the zeta
/// difference. Pde: sup gamma difference + sup zeta difference over
/// space-time nodes.
double theta_distance(const Parameter& theta, const Parameter& theta_bar, const TimeGrid& grid,
                      double p);

/// Discrete W^{1,p}(0,T;R^2) norm with the left rule and forward differences.
double w1p_norm(const std::vector<Vec2>& path, const TimeGrid& grid, double p);

inline double norm2(const Vec2& v) { return std::hypot(v[0], v[1]); }

}  // namespace pqvi
