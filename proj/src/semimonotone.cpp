#include "pqvi/semimonotone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pqvi/error.hpp"

namespace pqvi {

namespace {

double signed_pow(double x, double q) { return std::copysign(std::pow(std::abs(x), q), x); }

void require_grid_match(const PLaplacian& op, const SpaceMetric& m) {
    if (m.mode() != VMode::DiscreteGradient) {
        throw Error(ErrorKind::InvalidArgument, "p-Laplacian needs a discrete-gradient metric");
    }
    if (std::abs(op.mesh - m.mesh()) > 1e-14 * op.mesh || op.p != m.p()) {
        throw Error(ErrorKind::DimensionMismatch, "p-Laplacian mesh or exponent differs from the metric");
    }
}

// Edge coefficients for the n + 1 padded edges.
Vec edge_coefficients(const PLaplacian& op, const Vec& v, double t) {
    const std::size_t n = v.size();
    Vec nodal(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = op.coefficient(static_cast<double>(i) * op.mesh, t, v[i]);
        if (!(a >= op.a_lo - 1e-12 && a <= op.a_hi + 1e-12)) {
            throw Error(ErrorKind::InvalidArgument, "p-Laplacian coefficient " + std::to_string(a) +
                                                        " at node " + std::to_string(i) +
                                                        " leaves [a_*, a^*]");
        }
        nodal[i] = a;
    }
    Vec edge(n + 1);
    edge[0] = nodal[0];
    edge[n] = nodal[n - 1];
    for (std::size_t e = 1; e < n; ++e) edge[e] = 0.5 * (nodal[e - 1] + nodal[e]);
    return edge;
}

Vec slopes(const Vec& u, double h) {
    const std::size_t n = u.size();
    Vec d(n + 1);
    for (std::size_t e = 0; e <= n; ++e) {
        const double right = e < n ? u[e] : 0.0;
        const double left = e > 0 ? u[e - 1] : 0.0;
        d[e] = (right - left) / h;
    }
    return d;
}

Vec plaplacian_apply(const PLaplacian& op, const Vec& v, const Vec& u, double t) {
    const Vec a = edge_coefficients(op, v, t);
    const Vec d = slopes(u, op.mesh);
    Vec flux(d.size());
    for (std::size_t e = 0; e < d.size(); ++e) flux[e] = a[e] * signed_pow(d[e], op.p - 1.0);
    Vec out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = (flux[i] - flux[i + 1]) / op.mesh;
    return out;
}

Trajectory random_trajectory(const SemimonotoneOperator& op, const TimeGrid& grid, const SpaceMetric& m,
                             double scale, std::mt19937_64& rng) {
    std::vector<Vec> states;
    states.reserve(static_cast<std::size_t>(grid.nodes()));
    for (int k = 0; k < grid.nodes(); ++k) states.push_back(random_state(op, m, scale, rng));
    return Trajectory(std::move(states));
}

double magnitude(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> expo(-2.0, 1.0);
    return scale * std::pow(10.0, expo(rng));
}

}  // namespace

ScalarMonotone ScalarMonotone::make(std::function<double(double)> g, std::string label,
                                    const std::vector<double>& probes) {
    std::vector<double> xs = probes;
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (g(xs[i]) < g(xs[i - 1])) {
            throw Error(ErrorKind::InvalidArgument,
                        "scalar operator " + label + " decreases between probes " + std::to_string(xs[i - 1]) +
                            " and " + std::to_string(xs[i]));
        }
    }
    return ScalarMonotone{std::move(g), std::move(label)};
}

PLaplacian PLaplacian::make(std::function<double(double, double, double)> coefficient, double p, double mesh,
                            double a_lo, double a_hi) {
    if (!(p >= 2.0)) throw Error(ErrorKind::InvalidArgument, "p-Laplacian exponent must be >= 2");
    if (!(mesh > 0.0)) throw Error(ErrorKind::InvalidArgument, "p-Laplacian mesh must be positive");
    if (!(a_lo > 0.0 && a_lo <= a_hi)) throw Error(ErrorKind::InvalidArgument, "need 0 < a_* <= a^*");
    return PLaplacian{std::move(coefficient), p, mesh, a_lo, a_hi};
}

PLaplacian PLaplacian::from_table(const PiecewiseLinear& table, double p, double mesh) {
    return make([table](double, double, double v) { return table(v); }, p, mesh, table.min_value(),
                table.max_value());
}

const char* operator_name(const SemimonotoneOperator& op) {
    switch (op.index()) {
        case 0: return "zero";
        case 1: return "scalar-monotone";
        default: return "p-laplacian";
    }
}

Vec apply(const SemimonotoneOperator& op, const Vec& v, const Vec& u, double t, const SpaceMetric& m) {
    m.require_dim(u, "apply");
    m.require_dim(v, "apply");
    if (std::holds_alternative<ZeroOperator>(op)) return Vec(u.size(), 0.0);
    if (const auto* s = std::get_if<ScalarMonotone>(&op)) {
        Vec out(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) out[i] = s->g(u[i]);
        return out;
    }
    const auto& pl = std::get<PLaplacian>(op);
    require_grid_match(pl, m);
    return plaplacian_apply(pl, v, u, t);
}

Vec apply(const SemimonotoneOperator& op, const Trajectory& v, const Trajectory& u, int k,
          const TimeGrid& grid, const SpaceMetric& m) {
    if (v.nodes() != grid.nodes() || u.nodes() != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, "apply: trajectories are not on the time grid");
    }
    if (k < 0 || k >= grid.nodes()) {
        throw Error(ErrorKind::InvalidArgument, "apply: time index " + std::to_string(k) + " is off the grid");
    }
    return apply(op, v[k], u[k], grid.t(k), m);
}

Trajectory apply_trajectory(const SemimonotoneOperator& op, const Trajectory& v, const Trajectory& u,
                            const TimeGrid& grid, const SpaceMetric& m) {
    std::vector<Vec> out(static_cast<std::size_t>(grid.nodes()));
    for (int k = 0; k < grid.nodes(); ++k) out[static_cast<std::size_t>(k)] = apply(op, v, u, k, grid, m);
    return Trajectory(std::move(out));
}

double discrete_energy(const PLaplacian& op, const Vec& v, const Vec& u, double t, const SpaceMetric& m) {
    m.require_dim(u, "discrete_energy");
    require_grid_match(op, m);
    const Vec a = edge_coefficients(op, v, t);
    const Vec d = slopes(u, op.mesh);
    double e = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) e += a[i] * std::pow(std::abs(d[i]), op.p) / op.p * op.mesh;
    return e;
}

Vec random_state(const SemimonotoneOperator& op, const SpaceMetric& m, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    Vec z(static_cast<std::size_t>(m.dim()));
    for (double& x : z) x = unif(rng);
    if (std::holds_alternative<PLaplacian>(op)) {
        z.front() = 0.0;
        z.back() = 0.0;
    }
    return z;
}

double monotonicity_probe(const SemimonotoneOperator& op, const Trajectory& v, const TimeGrid& grid,
                          const SpaceMetric& m, const ProbeOptions& options) {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<int> node(0, grid.nodes() - 1);
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < options.samples; ++s) {
        const int k = node(rng);
        const Vec u = random_state(op, m, options.scale, rng);
        const Vec w = random_state(op, m, options.scale, rng);
        const Vec au = apply(op, v, Trajectory::constant(grid.nodes(), u), k, grid, m);
        const Vec aw = apply(op, v, Trajectory::constant(grid.nodes(), w), k, grid, m);
        Vec da(au.size()), dz(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            da[i] = au[i] - aw[i];
            dz[i] = u[i] - w[i];
        }
        worst = std::min(worst, pairing(da, dz, m));
    }
    return options.samples > 0 ? worst : 0.0;
}

BoundReport bound_probe(const SemimonotoneOperator& op, const Trajectory& v, const TimeGrid& grid,
                        const SpaceMetric& m, double a1, double a2, const ProbeOptions& options) {
    std::mt19937_64 rng(options.seed);
    BoundReport report{true, 0.0, 0.0, -1};
    for (int s = 0; s < options.samples; ++s) {
        const Trajectory w = random_trajectory(op, grid, m, magnitude(rng, options.scale), rng);
        const double lhs = lp_dual_norm(apply_trajectory(op, v, w, grid, m), grid, m);
        const double wn = lp_v_norm(w, grid, m);
        const double rhs = a1 * std::pow(wn, m.p() - 1.0) + a2;
        const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > report.worst_ratio || report.witness < 0) {
            report.worst_ratio = ratio;
            report.witness_norm = wn;
            report.witness = s;
        }
    }
    report.pass = report.worst_ratio <= 1.0;
    return report;
}

CoercivityReport coercivity_probe(const SemimonotoneOperator& op, const Trajectory& v, const TimeGrid& grid,
                                  const SpaceMetric& m, const ProbeOptions& options) {
    CoercivityReport report{0.0, 0.0, std::numeric_limits<double>::infinity()};
    if (const auto* pl = std::get_if<PLaplacian>(&op)) report.a3 = pl->a_lo;
    std::mt19937_64 rng(options.seed);
    for (int s = 0; s < options.samples; ++s) {
        const Trajectory w = random_trajectory(op, grid, m, magnitude(rng, options.scale), rng);
        const double lhs = time_pairing(apply_trajectory(op, v, w, grid, m), w, grid, m);
        const double margin = lhs - report.a3 * std::pow(lp_v_norm(w, grid, m), m.p()) + report.a4;
        report.worst_margin = std::min(report.worst_margin, margin);
    }
    return report;
}

std::pair<double, double> growth_constants(const SemimonotoneOperator& op, const SpaceMetric& m) {
    if (std::holds_alternative<ZeroOperator>(op)) return {0.0, 0.0};
    if (const auto* pl = std::get_if<PLaplacian>(&op)) return {pl->a_hi, 0.0};
    const auto& s = std::get<ScalarMonotone>(op);
    // |g(x)| <= a1 |x|^{p-1} + a2 pointwise gives, by Minkowski in l^{p'}_w,
    // |g(u)|_{V*} <= a1 |u|_V^{p-1} + a2 (sum w)^{1/p'} in same-as-H mode.
    double a1 = 0.0, a2 = 0.0;
    for (int i = -1000; i <= 1000; ++i) {
        const double x = i / 100.0;
        if (std::abs(x) <= 1.0) a2 = std::max(a2, std::abs(s.g(x)));
        else a1 = std::max(a1, std::abs(s.g(x)) / std::pow(std::abs(x), m.p() - 1.0));
    }
    double total = 0.0;
    for (double w : m.weights()) total += w;
    return {a1, a2 * std::pow(total, 1.0 / m.conjugate())};
}

std::vector<double> graph_continuity_probe(const SemimonotoneOperator& op, const std::vector<Trajectory>& v_seq,
                                           const Trajectory& v, const Trajectory& u, const TimeGrid& grid,
                                           const SpaceMetric& m) {
    const Trajectory base = apply_trajectory(op, v, u, grid, m);
    std::vector<double> gaps;
    gaps.reserve(v_seq.size());
    for (const Trajectory& vn : v_seq) {
        gaps.push_back(lp_dual_norm(apply_trajectory(op, vn, u, grid, m) - base, grid, m));
    }
    return gaps;
}

}  // namespace pqvi
