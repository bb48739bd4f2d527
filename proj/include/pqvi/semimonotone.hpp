#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "pqvi/spaces.hpp"
#include "pqvi/table.hpp"

namespace pqvi {

struct ZeroOperator {};

/// Nodewise g(u_i) for a nondecreasing scalar g.
struct ScalarMonotone {
    std::function<double(double)> g;
    std::string label;

    /// Rejects g that decreases between consecutive probe points.
    static ScalarMonotone make(std::function<double(double)> g, std::string label,
                               const std::vector<double>& probes);
};

/// -div(a(x,t,v) |grad u|^{p-2} grad u) on a 1D node grid x_i = i * mesh with
/// zero ghost nodes outside. Edge coefficients are the mean of the two nodal
/// values; the padded edges use the boundary node's value.
struct PLaplacian {
    std::function<double(double x, double t, double v)> coefficient;
    double p;
    double mesh;
    double a_lo;  ///< a_*
    double a_hi;  ///< a^*

    static PLaplacian make(std::function<double(double, double, double)> coefficient, double p,
                           double mesh, double a_lo, double a_hi);
    /// a(x, t, v) = table(v); bounds are the table's range.
    static PLaplacian from_table(const PiecewiseLinear& table, double p, double mesh);
};

using SemimonotoneOperator = std::variant<ZeroOperator, ScalarMonotone, PLaplacian>;

const char* operator_name(const SemimonotoneOperator& op);

/// A(v; u) at time t for frozen states (H-Riesz representative).
Vec apply(const SemimonotoneOperator& op, const Vec& v, const Vec& u, double t, const SpaceMetric& m);

/// A(v; u)(t_k). Only v_k and u_k are read, so the result at t_k never sees
/// data after t_k.
Vec apply(const SemimonotoneOperator& op, const Trajectory& v, const Trajectory& u, int k,
          const TimeGrid& grid, const SpaceMetric& m);

Trajectory apply_trajectory(const SemimonotoneOperator& op, const Trajectory& v, const Trajectory& u,
                            const TimeGrid& grid, const SpaceMetric& m);

/// sum_edges (1/p) a_edge |delta u / h|^p h; apply() is its H-gradient.
double discrete_energy(const PLaplacian& op, const Vec& v, const Vec& u, double t, const SpaceMetric& m);

struct ProbeOptions {
    int samples = 500;
    double scale = 1.0;      ///< half-width of the uniform state distribution
    std::uint64_t seed = 7;
};

/// Random state with the boundary convention of the operator (zero ends for
/// the p-Laplacian).
Vec random_state(const SemimonotoneOperator& op, const SpaceMetric& m, double scale, std::mt19937_64& rng);

/// min over sampled (u, w, k) of <A(v;u) - A(v;w), u - w>.
double monotonicity_probe(const SemimonotoneOperator& op, const Trajectory& v, const TimeGrid& grid,
                          const SpaceMetric& m, const ProbeOptions& options = {});

struct BoundReport {
    bool pass;
    double worst_ratio;   ///< max of |A(v;w)|_{L^p'(V*)} / (a1 |w|^{p-1} + a2)
    double witness_norm;  ///< |w|_{L^p(V)} of the worst sample
    int witness;          ///< sample index of the worst sample
};

/// Growth bound |A(v;w)|_{L^{p'}(V*)} <= a1 |w|_{L^p(V)}^{p-1} + a2 on random w.
BoundReport bound_probe(const SemimonotoneOperator& op, const Trajectory& v, const TimeGrid& grid,
                        const SpaceMetric& m, double a1, double a2, const ProbeOptions& options = {});

struct CoercivityReport {
    double a3;
    double a4;
    double worst_margin;  ///< min of <<A(v;w), w>> - a3 |w|^p + a4
};

/// Coercivity with a3 = a_* and a4 = 0 for the p-Laplacian (the V norm is
/// the gradient norm), a3 = a4 = 0 otherwise.
CoercivityReport coercivity_probe(const SemimonotoneOperator& op, const Trajectory& v, const TimeGrid& grid,
                                  const SpaceMetric& m, const ProbeOptions& options = {});

/// Measured per-time growth constants |A(v;w)|_{V*} <= a1 |w|_V^{p-1} + a2: (a1, a2) = (a^*, 0) for the p-Laplacian, the
/// sampled sup of |g(x)| / |x|^{p-1} on 1 <= |x| <= 10 plus sup |g| on |x| <= 1
/// for scalar monotone g (a local bound: the sample range is all it covers).
std::pair<double, double> growth_constants(const SemimonotoneOperator& op, const SpaceMetric& m);

/// |A(v_n; u) - A(v; u)|_{L^{p'}(V*)} for each v_n.
std::vector<double> graph_continuity_probe(const SemimonotoneOperator& op, const std::vector<Trajectory>& v_seq,
                                           const Trajectory& v, const Trajectory& u, const TimeGrid& grid,
                                           const SpaceMetric& m);

}  // namespace pqvi
