#pragma once

#include <functional>
#include <vector>

namespace pqvi {

using Vec = std::vector<double>;

/// Uniform partition t_k = k * tau of [0, T] with K steps (K + 1 nodes).
class TimeGrid {
public:
    TimeGrid(double horizon, int steps);

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    int nodes() const { return steps_ + 1; }
    double tau() const { return horizon_ / steps_; }
    double t(int k) const { return k == steps_ ? horizon_ : k * tau(); }

    /// Same horizon, `factor` times as many steps.
    TimeGrid refined(int factor) const { return TimeGrid(horizon_, steps_ * factor); }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_;
    int steps_;
};

enum class VMode { SameAsH, DiscreteGradient };

/// Finite-dimensional realization of V in H in V*. H carries diagonal
/// quadrature weights; V is either the weighted l^p norm of the coordinates or
/// the l^p norm of forward differences over a uniform 1D mesh with zero ghost
/// nodes on both sides (homogeneous Dirichlet).
class SpaceMetric {
public:
    static SpaceMetric euclidean(int dim, double p);
    static SpaceMetric weighted(Vec weights, double p);
    /// Nodal field on `dim` nodes spaced `mesh` apart; H weights are `mesh`.
    static SpaceMetric gradient(int dim, double mesh, double p);

    int dim() const { return static_cast<int>(weights_.size()); }
    double p() const { return p_; }
    double conjugate() const { return p_ / (p_ - 1.0); }
    const Vec& weights() const { return weights_; }
    VMode mode() const { return mode_; }
    double mesh() const { return mesh_; }

    /// c_V with |z|_H <= c_V |z|_V for every z, computed from the weights.
    double embedding_constant() const;

    void require_dim(const Vec& z, const char* what) const;

    bool operator==(const SpaceMetric&) const = default;

private:
    SpaceMetric(Vec weights, double p, VMode mode, double mesh);

    Vec weights_;
    double p_;
    VMode mode_;
    double mesh_;
};

double h_inner(const Vec& x, const Vec& y, const SpaceMetric& m);
double h_norm(const Vec& x, const SpaceMetric& m);
double v_norm(const Vec& x, const SpaceMetric& m);

/// Duality pairing <g, z>; dual vectors are stored as H-Riesz representatives,
/// so this is the H inner product.
inline double pairing(const Vec& g, const Vec& z, const SpaceMetric& m) { return h_inner(g, z, m); }

/// |g|_{V*} = sup <g, w> / |w|_V. Closed form in same-as-H mode; a
/// one-dimensional convex minimization over the flux constant otherwise.
double dual_norm(const Vec& g, const SpaceMetric& m);

/// Duality map F with gauge r^{p-1}: <Fz, z> = |z|_V^p, |Fz|_{V*} = |z|_V^{p-1}.
Vec duality_map(const Vec& z, const SpaceMetric& m);

/// One state per time node.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(int nodes, int dim, double fill = 0.0);
    explicit Trajectory(std::vector<Vec> states);

    static Trajectory constant(int nodes, const Vec& state);
    static Trajectory sample(const TimeGrid& grid, const std::function<Vec(double)>& fn);

    int nodes() const { return static_cast<int>(states_.size()); }
    int dim() const { return states_.empty() ? 0 : static_cast<int>(states_.front().size()); }

    Vec& operator[](int k) { return states_.at(static_cast<std::size_t>(k)); }
    const Vec& operator[](int k) const { return states_.at(static_cast<std::size_t>(k)); }

    const std::vector<Vec>& states() const { return states_; }

    void require_shape(const TimeGrid& grid, const SpaceMetric& m, const char* what) const;

    bool operator==(const Trajectory&) const = default;

private:
    std::vector<Vec> states_;
};

Trajectory operator-(const Trajectory& a, const Trajectory& b);
Trajectory operator+(const Trajectory& a, const Trajectory& b);
Trajectory operator*(double s, const Trajectory& a);

enum class Quadrature { Left, Right };

/// sum_k <g_k, w_k> tau with the left-endpoint rule (k = 0..K-1).
double time_pairing(const Trajectory& g, const Trajectory& w, const TimeGrid& grid,
                    const SpaceMetric& m);

/// Discrete L^p(0,T;H) / L^p(0,T;V) norms. Left rule sums k = 0..K-1; right
/// rule sums k = 1..K (implicit-Euler states as piecewise constants on
/// (t_{k-1}, t_k]).
double lp_h_norm(const Trajectory& u, const TimeGrid& grid, const SpaceMetric& m,
                 Quadrature rule = Quadrature::Left);
double lp_v_norm(const Trajectory& u, const TimeGrid& grid, const SpaceMetric& m,
                 Quadrature rule = Quadrature::Left);
/// Discrete L^{p'}(0,T;V*) norm of a dual trajectory (left rule).
double lp_dual_norm(const Trajectory& g, const TimeGrid& grid, const SpaceMetric& m);

/// C([0,T];H) distance: max over all nodes.
double sup_h_distance(const Trajectory& a, const Trajectory& b, const SpaceMetric& m);
/// Max absolute coordinate difference over all nodes.
double sup_abs_distance(const Trajectory& a, const Trajectory& b);

}  // namespace pqvi
