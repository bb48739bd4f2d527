#include "pqvi/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pqvi/error.hpp"

namespace pqvi {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::InvalidArgument, "time horizon must be positive and finite");
    }
    if (steps < 1) throw Error(ErrorKind::InvalidArgument, "step count must be positive");
}

SpaceMetric::SpaceMetric(Vec weights, double p, VMode mode, double mesh)
    : weights_(std::move(weights)), p_(p), mode_(mode), mesh_(mesh) {
    if (!(p >= 2.0) || !std::isfinite(p)) {
        throw Error(ErrorKind::InvalidArgument, "exponent p must satisfy 2 <= p < infinity");
    }
    if (weights_.empty()) throw Error(ErrorKind::InvalidArgument, "space dimension must be positive");
    for (double w : weights_) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw Error(ErrorKind::InvalidArgument, "H weights must be positive and finite");
        }
    }
}

SpaceMetric SpaceMetric::euclidean(int dim, double p) {
    if (dim < 1) throw Error(ErrorKind::InvalidArgument, "space dimension must be positive");
    return SpaceMetric(Vec(static_cast<std::size_t>(dim), 1.0), p, VMode::SameAsH, 1.0);
}

SpaceMetric SpaceMetric::weighted(Vec weights, double p) {
    return SpaceMetric(std::move(weights), p, VMode::SameAsH, 1.0);
}

SpaceMetric SpaceMetric::gradient(int dim, double mesh, double p) {
    if (dim < 1) throw Error(ErrorKind::InvalidArgument, "space dimension must be positive");
    if (!(mesh > 0.0)) throw Error(ErrorKind::InvalidArgument, "mesh width must be positive");
    return SpaceMetric(Vec(static_cast<std::size_t>(dim), mesh), p, VMode::DiscreteGradient, mesh);
}

void SpaceMetric::require_dim(const Vec& z, const char* what) const {
    if (static_cast<int>(z.size()) != dim()) {
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": expected dimension " +
                                                      std::to_string(dim()) + ", got " +
                                                      std::to_string(z.size()));
    }
}

double SpaceMetric::embedding_constant() const {
    double total = 0.0;
    for (double w : weights_) total += w;
    if (mode_ == VMode::SameAsH) {
        // Hoelder: sum w z^2 <= (sum w)^{1-2/p} (sum w |z|^p)^{2/p}
        return std::pow(total, 0.5 - 1.0 / p_);
    }
    // |z_i| <= sum_e h |d_e| <= L^{1/p'} |z|_V with L = (n+1) h.
    const double length = (dim() + 1) * mesh_;
    return std::sqrt(total) * std::pow(length, 1.0 - 1.0 / p_);
}

double h_inner(const Vec& x, const Vec& y, const SpaceMetric& m) {
    m.require_dim(x, "h_inner");
    m.require_dim(y, "h_inner");
    const Vec& w = m.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * y[i];
    return s;
}

double h_norm(const Vec& x, const SpaceMetric& m) { return std::sqrt(h_inner(x, x, m)); }

namespace {

// Forward differences over the zero-padded node sequence: n + 1 edge slopes.
Vec padded_slopes(const Vec& z, double mesh) {
    const std::size_t n = z.size();
    Vec d(n + 1);
    for (std::size_t e = 0; e <= n; ++e) {
        const double right = e < n ? z[e] : 0.0;
        const double left = e > 0 ? z[e - 1] : 0.0;
        d[e] = (right - left) / mesh;
    }
    return d;
}

double signed_pow(double x, double q) { return std::copysign(std::pow(std::abs(x), q), x); }

}  // namespace

double v_norm(const Vec& x, const SpaceMetric& m) {
    m.require_dim(x, "v_norm");
    const double p = m.p();
    double s = 0.0;
    if (m.mode() == VMode::SameAsH) {
        const Vec& w = m.weights();
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(std::abs(x[i]), p);
    } else {
        for (double d : padded_slopes(x, m.mesh())) s += m.mesh() * std::pow(std::abs(d), p);
    }
    return std::pow(s, 1.0 / p);
}

double dual_norm(const Vec& g, const SpaceMetric& m) {
    m.require_dim(g, "dual_norm");
    const double q = m.conjugate();
    if (m.mode() == VMode::SameAsH) {
        const Vec& w = m.weights();
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += w[i] * std::pow(std::abs(g[i]), q);
        return std::pow(s, 1.0 / q);
    }
    // g = -div_h(flux) with edge fluxes flux_e = c - h * sum_{j<e} g_j; the dual
    // norm is the smallest l^{p'}_h norm over the free constant c.
    const double h = m.mesh();
    const std::size_t n = g.size();
    Vec s(n + 1, 0.0);
    for (std::size_t e = 1; e <= n; ++e) s[e] = s[e - 1] + h * g[e - 1];
    auto slope = [&](double c) {
        double acc = 0.0;
        for (double se : s) acc += signed_pow(c - se, q - 1.0);
        return acc;
    };
    double lo = *std::min_element(s.begin(), s.end());
    double hi = *std::max_element(s.begin(), s.end());
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (slope(mid) > 0.0) hi = mid; else lo = mid;
    }
    const double c = 0.5 * (lo + hi);
    double acc = 0.0;
    for (double se : s) acc += h * std::pow(std::abs(c - se), q);
    return std::pow(acc, 1.0 / q);
}

Vec duality_map(const Vec& z, const SpaceMetric& m) {
    m.require_dim(z, "duality_map");
    const double p = m.p();
    Vec out(z.size(), 0.0);
    if (m.mode() == VMode::SameAsH) {
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = signed_pow(z[i], p - 1.0);
        return out;
    }
    // -div_h(|d|^{p-2} d) as an H-Riesz representative (weights = mesh).
    const double h = m.mesh();
    const Vec d = padded_slopes(z, h);
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = (signed_pow(d[i], p - 1.0) - signed_pow(d[i + 1], p - 1.0)) / h;
    }
    return out;
}

Trajectory::Trajectory(int nodes, int dim, double fill)
    : states_(static_cast<std::size_t>(nodes), Vec(static_cast<std::size_t>(dim), fill)) {}

Trajectory::Trajectory(std::vector<Vec> states) : states_(std::move(states)) {
    for (const Vec& s : states_) {
        if (s.size() != states_.front().size()) {
            throw Error(ErrorKind::DimensionMismatch, "trajectory states have unequal dimensions");
        }
    }
}

Trajectory Trajectory::constant(int nodes, const Vec& state) {
    return Trajectory(std::vector<Vec>(static_cast<std::size_t>(nodes), state));
}

Trajectory Trajectory::sample(const TimeGrid& grid, const std::function<Vec(double)>& fn) {
    std::vector<Vec> states;
    states.reserve(static_cast<std::size_t>(grid.nodes()));
    for (int k = 0; k < grid.nodes(); ++k) states.push_back(fn(grid.t(k)));
    return Trajectory(std::move(states));
}

void Trajectory::require_shape(const TimeGrid& grid, const SpaceMetric& m, const char* what) const {
    if (nodes() != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": trajectory has " +
                                                      std::to_string(nodes()) + " nodes, grid has " +
                                                      std::to_string(grid.nodes()));
    }
    if (dim() != m.dim()) {
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": state dimension " +
                                                      std::to_string(dim()) + " does not match " +
                                                      std::to_string(m.dim()));
    }
}

namespace {

template <typename Op>
Trajectory combine(const Trajectory& a, const Trajectory& b, Op op) {
    if (a.nodes() != b.nodes() || a.dim() != b.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "trajectory shapes differ");
    }
    std::vector<Vec> out(static_cast<std::size_t>(a.nodes()));
    for (int k = 0; k < a.nodes(); ++k) {
        Vec s(a[k].size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = op(a[k][i], b[k][i]);
        out[static_cast<std::size_t>(k)] = std::move(s);
    }
    return Trajectory(std::move(out));
}

void require_same_grid(const Trajectory& a, const Trajectory& b, const TimeGrid& grid) {
    if (a.nodes() != grid.nodes() || b.nodes() != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, "trajectories are not on the given time grid");
    }
}

}  // namespace

Trajectory operator-(const Trajectory& a, const Trajectory& b) {
    return combine(a, b, [](double x, double y) { return x - y; });
}

Trajectory operator+(const Trajectory& a, const Trajectory& b) {
    return combine(a, b, [](double x, double y) { return x + y; });
}

Trajectory operator*(double s, const Trajectory& a) {
    std::vector<Vec> out = a.states();
    for (Vec& v : out) {
        for (double& x : v) x *= s;
    }
    return Trajectory(std::move(out));
}

double time_pairing(const Trajectory& g, const Trajectory& w, const TimeGrid& grid,
                    const SpaceMetric& m) {
    require_same_grid(g, w, grid);
    double s = 0.0;
    for (int k = 0; k < grid.steps(); ++k) s += pairing(g[k], w[k], m);
    return s * grid.tau();
}

namespace {

template <typename Norm>
double lp_time(const Trajectory& u, const TimeGrid& grid, double exponent, Quadrature rule, Norm norm) {
    if (u.nodes() != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, "trajectory is not on the given time grid");
    }
    const int first = rule == Quadrature::Left ? 0 : 1;
    double s = 0.0;
    for (int k = first; k < first + grid.steps(); ++k) s += std::pow(norm(u[k]), exponent);
    return std::pow(s * grid.tau(), 1.0 / exponent);
}

}  // namespace

double lp_h_norm(const Trajectory& u, const TimeGrid& grid, const SpaceMetric& m, Quadrature rule) {
    return lp_time(u, grid, m.p(), rule, [&](const Vec& x) { return h_norm(x, m); });
}

double lp_v_norm(const Trajectory& u, const TimeGrid& grid, const SpaceMetric& m, Quadrature rule) {
    return lp_time(u, grid, m.p(), rule, [&](const Vec& x) { return v_norm(x, m); });
}

double lp_dual_norm(const Trajectory& g, const TimeGrid& grid, const SpaceMetric& m) {
    return lp_time(g, grid, m.conjugate(), Quadrature::Left,
                   [&](const Vec& x) { return dual_norm(x, m); });
}

double sup_h_distance(const Trajectory& a, const Trajectory& b, const SpaceMetric& m) {
    if (a.nodes() != b.nodes()) throw Error(ErrorKind::DimensionMismatch, "trajectory lengths differ");
    double sup = 0.0;
    for (int k = 0; k < a.nodes(); ++k) {
        Vec d = a[k];
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[k][i];
        sup = std::max(sup, h_norm(d, m));
    }
    return sup;
}

double sup_abs_distance(const Trajectory& a, const Trajectory& b) {
    if (a.nodes() != b.nodes() || a.dim() != b.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "trajectory shapes differ");
    }
    double sup = 0.0;
    for (int k = 0; k < a.nodes(); ++k) {
        for (std::size_t i = 0; i < a[k].size(); ++i) sup = std::max(sup, std::abs(a[k][i] - b[k][i]));
    }
    return sup;
}

}  // namespace pqvi
