#include "pqvi/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pqvi/bounded_difference.hpp"
#include "pqvi/error.hpp"

namespace pqvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nodes(const Trajectory& u, const TimeGrid& grid, const char* what) {
    if (u.nodes() != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": trajectory is not on the time grid");
    }
}

// Thomas algorithm; rows i: lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
Vec solve_tridiagonal(const Vec& lower, Vec diag, const Vec& upper, Vec rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) throw Error(ErrorKind::NonConvergence, "heat solve: singular tridiagonal system");
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (diag[n - 1] == 0.0) throw Error(ErrorKind::NonConvergence, "heat solve: singular tridiagonal system");
    Vec x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
    for (double v : x) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonConvergence, "heat solve: non-finite solution");
    }
    return x;
}

}  // namespace

Vec2 project(const PlanarSet& set, const Vec2& x) {
    if (const auto* hp = std::get_if<HalfPlane>(&set)) {
        const double s = hp->normal[0] * x[0] + hp->normal[1] * x[1] - hp->offset;
        if (s >= 0.0) return x;
        return {x[0] - s * hp->normal[0], x[1] - s * hp->normal[1]};
    }
    const auto& b = std::get<Box>(set);
    return {std::clamp(x[0], b.lo[0], b.hi[0]), std::clamp(x[1], b.lo[1], b.hi[1])};
}

double distance_to_origin(const PlanarSet& set) { return norm2(project(set, {0.0, 0.0})); }

double set_violation(const PlanarSet& set, const Vec2& x) {
    const Vec2 p = project(set, x);
    return norm2({x[0] - p[0], x[1] - p[1]});
}

const char* feedback_name(const FeedbackSpec& spec) {
    switch (spec.index()) {
        case 0: return "scalar-projection";
        case 1: return "sweep-dynamics";
        default: return "heat-robin";
    }
}

ScalarFeedback lambda_scalar(const ScalarProjection& spec, const Trajectory& v, const TimeGrid& grid) {
    require_nodes(v, grid, "lambda_scalar");
    if (v.dim() != 1) throw Error(ErrorKind::DimensionMismatch, "lambda_scalar: v must be scalar-valued");
    if (!(spec.slope_bound > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda_scalar: c0 must be positive");
    const int n = grid.nodes();
    const double tau = grid.tau();
    BoundedDifferenceProblem qp;
    qp.target.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) qp.target[static_cast<std::size_t>(k)] = v[k][0];
    qp.weights.assign(static_cast<std::size_t>(n), tau);
    qp.diff_lo.assign(static_cast<std::size_t>(n - 1), 0.0);
    qp.diff_hi.assign(static_cast<std::size_t>(n - 1), spec.slope_bound * tau);
    qp.node_lo.assign(static_cast<std::size_t>(n), -kInf);
    qp.node_hi.assign(static_cast<std::size_t>(n), kInf);
    qp.node_lo[0] = qp.node_hi[0] = 1.0;
    Vec z = solve_bounded_difference(qp);

    // Multipliers of the difference constraints from stationarity, walking
    // back from the free end; check them against the active sets.
    double kkt = 0.0;
    double mu = 0.0;
    for (int k = n - 1; k >= 1; --k) {
        const auto uk = static_cast<std::size_t>(k);
        mu -= 2.0 * tau * (z[uk] - qp.target[uk]);  // mu_{k-1}
        const double d = z[uk] - z[uk - 1];
        const double slack = 1e-12 * (1.0 + std::abs(z[uk]));
        double defect = std::abs(mu);
        if (d <= slack) defect = std::min(defect, std::max(0.0, mu));
        if (d >= qp.diff_hi[uk - 1] - slack) defect = std::min(defect, std::max(0.0, -mu));
        kkt = std::max(kkt, defect);
    }
    return ScalarFeedback{ScalarParameter::x0_member(std::move(z), spec.slope_bound, grid), kkt};
}

SweepParameter lambda_sweep(const SweepDynamics& spec, const Trajectory& u, const TimeGrid& grid) {
    require_nodes(u, grid, "lambda_sweep");
    if (u.dim() != 2) throw Error(ErrorKind::DimensionMismatch, "lambda_sweep: u must be planar");
    if (!(distance_to_origin(spec.region) > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "lambda_sweep: Y must not contain the origin");
    }
    if (set_violation(spec.region, spec.zeta0) > 1e-12) {
        throw Error(ErrorKind::InvalidArgument, "lambda_sweep: zeta0 is not in Y");
    }
    const int n = grid.nodes();
    const double tau = grid.tau();
    std::vector<Vec2> zeta(static_cast<std::size_t>(n));
    std::vector<Vec2> a(static_cast<std::size_t>(n));
    zeta[0] = spec.zeta0;
    Vec2 memory{0.0, 0.0};
    for (int k = 0; k + 1 < n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const Vec2 g = spec.field(grid.t(k), memory, zeta[uk]);
        zeta[uk + 1] = project(spec.region, {zeta[uk][0] + tau * g[0], zeta[uk][1] + tau * g[1]});
        memory[0] += u[k][0] * tau;
        memory[1] += u[k][1] * tau;
    }
    for (std::size_t k = 0; k < zeta.size(); ++k) {
        const double r = norm2(zeta[k]);
        a[k] = {zeta[k][0] / r, zeta[k][1] / r};
    }
    return SweepParameter::make(std::move(a), std::move(zeta), spec.gamma, spec.gamma_lo, spec.gamma_hi,
                                spec.probes);
}

double robin_compatibility_defect(const Vec& zeta0, double mesh, double n0) {
    const std::size_t n = zeta0.size();
    if (n < 3) throw Error(ErrorKind::InvalidArgument, "Robin compatibility needs at least 3 nodes");
    // Outward normal is -x on the left end and +x on the right end.
    const double left = -(-3.0 * zeta0[0] + 4.0 * zeta0[1] - zeta0[2]) / (2.0 * mesh) + n0 * zeta0[0];
    const double right =
        (3.0 * zeta0[n - 1] - 4.0 * zeta0[n - 2] + zeta0[n - 3]) / (2.0 * mesh) + n0 * zeta0[n - 1];
    return std::max(std::abs(left), std::abs(right));
}

double trapezoid_mass(const Vec& zeta, double mesh) {
    double s = 0.0;
    for (std::size_t i = 0; i < zeta.size(); ++i) {
        const double w = (i == 0 || i + 1 == zeta.size()) ? 0.5 : 1.0;
        s += w * zeta[i];
    }
    return s * mesh;
}

std::vector<Vec> solve_heat_robin(const Vec& zeta0, double mesh, double n0, const TimeGrid& grid,
                                  const std::function<double(double, double, int, int)>& source) {
    const std::size_t n = zeta0.size();
    if (n < 3) throw Error(ErrorKind::InvalidArgument, "heat solve needs at least 3 nodes");
    if (!(mesh > 0.0)) throw Error(ErrorKind::InvalidArgument, "heat solve: mesh must be positive");
    if (!(n0 >= 0.0)) throw Error(ErrorKind::InvalidArgument, "heat solve: n0 must be >= 0");
    const double tau = grid.tau();
    const double r = tau / (mesh * mesh);
    Vec lower(n, -r), diag(n, 1.0 + 2.0 * r), upper(n, -r);
    // Ghost nodes zeta_{-1} = zeta_1 - 2 h n0 zeta_0 and its mirror on the right.
    diag[0] = diag[n - 1] = 1.0 + 2.0 * r * (1.0 + mesh * n0);
    upper[0] = -2.0 * r;
    lower[n - 1] = -2.0 * r;
    lower[0] = 0.0;
    upper[n - 1] = 0.0;

    std::vector<Vec> zeta(static_cast<std::size_t>(grid.nodes()));
    zeta[0] = zeta0;
    for (int k = 1; k < grid.nodes(); ++k) {
        Vec rhs = zeta[static_cast<std::size_t>(k - 1)];
        const double t = grid.t(k);
        for (std::size_t i = 0; i < n; ++i) rhs[i] += tau * source(static_cast<double>(i) * mesh, t, static_cast<int>(i), k);
        zeta[static_cast<std::size_t>(k)] = solve_tridiagonal(lower, diag, upper, std::move(rhs));
    }
    return zeta;
}

PdeParameter lambda_pde(const HeatRobin& spec, const Trajectory& u, const TimeGrid& grid) {
    require_nodes(u, grid, "lambda_pde");
    if (static_cast<std::size_t>(u.dim()) != spec.zeta0.size()) {
        throw Error(ErrorKind::DimensionMismatch, "lambda_pde: u does not match the spatial grid of zeta0");
    }
    const double defect = robin_compatibility_defect(spec.zeta0, spec.mesh, spec.n0);
    if (defect > spec.compat_tol) {
        throw Error(ErrorKind::InvalidArgument, "lambda_pde: zeta0 violates d zeta/dn + n0 zeta = 0 by " +
                                                    std::to_string(defect));
    }
    auto zeta = solve_heat_robin(spec.zeta0, spec.mesh, spec.n0, grid, [&](double x, double t, int i, int k) {
        return spec.source(x, t, u[k][static_cast<std::size_t>(i)]);
    });
    return PdeParameter::make(spec.gamma, spec.eps0, std::move(zeta), spec.probes);
}

Parameter lambda_apply(const FeedbackSpec& spec, const Trajectory& u, const TimeGrid& grid, const SpaceMetric& m) {
    u.require_shape(grid, m, "lambda");
    if (const auto* s = std::get_if<ScalarProjection>(&spec)) return lambda_scalar(*s, u, grid).theta;
    if (const auto* s = std::get_if<SweepDynamics>(&spec)) return lambda_sweep(*s, u, grid);
    return lambda_pde(std::get<HeatRobin>(spec), u, grid);
}

std::vector<double> lambda_continuity_probe(const FeedbackSpec& spec, const std::vector<Trajectory>& v_seq,
                                            const Trajectory& v, const TimeGrid& grid, const SpaceMetric& m) {
    const Parameter base = lambda_apply(spec, v, grid, m);
    std::vector<double> gaps;
    gaps.reserve(v_seq.size());
    for (const Trajectory& vn : v_seq) {
        gaps.push_back(theta_distance(lambda_apply(spec, vn, grid, m), base, grid, m.p()));
    }
    return gaps;
}

}  // namespace pqvi
