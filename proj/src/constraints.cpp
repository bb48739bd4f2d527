#include "pqvi/constraints.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "pqvi/bounded_difference.hpp"
#include "pqvi/error.hpp"

namespace pqvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMemberTol = 1e-10;

void require_node(const Parameter& theta, int k) {
    if (k < 0 || k >= parameter_nodes(theta)) {
        throw Error(ErrorKind::InvalidArgument, "time index " + std::to_string(k) + " is off the grid");
    }
}

template <typename P>
const P& require_variant(const Parameter& theta, const char* family) {
    const auto* p = std::get_if<P>(&theta);
    if (p == nullptr) {
        throw Error(ErrorKind::VariantMismatch,
                    std::string(family) + " family given a " + variant_name(theta) + " parameter");
    }
    return *p;
}

void require_planar(const Vec& z) {
    if (z.size() != 2) throw Error(ErrorKind::DimensionMismatch, "circle segment states are planar");
}

void require_gradient_metric(const SpaceMetric& m) {
    if (m.mode() != VMode::DiscreteGradient) {
        throw Error(ErrorKind::InvalidArgument, "gradient ball needs a discrete-gradient metric");
    }
}

double halfline_bound(const HalfLine& f, const ScalarParameter& th, int k) {
    return th.z[static_cast<std::size_t>(k)] - f.offset;
}

Vec2 perp(const Vec2& a) { return {-a[1], a[0]}; }

}  // namespace

const char* family_name(const ConstraintFamily& family) {
    switch (family.index()) {
        case 0: return "half-line";
        case 1: return "circle-segment";
        default: return "gradient-ball";
    }
}

Vec gradient_edge_bounds(const PdeParameter& theta, int k, const SpaceMetric& m) {
    require_gradient_metric(m);
    const auto& zeta = theta.zeta.at(static_cast<std::size_t>(k));
    if (static_cast<int>(zeta.size()) != m.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "zeta field does not match the spatial grid");
    }
    Vec b(zeta.size() > 0 ? zeta.size() - 1 : 0);
    for (std::size_t e = 0; e < b.size(); ++e) {
        b[e] = m.mesh() * std::min(theta.gamma(zeta[e]), theta.gamma(zeta[e + 1]));
    }
    return b;
}

double max_violation(const ConstraintFamily& family, const Parameter& theta, int k, const Vec& z,
                     const SpaceMetric& m) {
    require_node(theta, k);
    m.require_dim(z, "member");
    if (const auto* f = std::get_if<HalfLine>(&family)) {
        const auto& th = require_variant<ScalarParameter>(theta, "half-line");
        const double bound = halfline_bound(*f, th, k);
        double worst = 0.0;
        for (double r : z) worst = std::max(worst, bound - r);
        return worst;
    }
    if (std::holds_alternative<CircleSegment>(family)) {
        const auto& th = require_variant<SweepParameter>(theta, "circle-segment");
        require_planar(z);
        const Vec2& a = th.a[static_cast<std::size_t>(k)];
        const Vec2 d{z[0] - a[0], z[1] - a[1]};
        const double normal = std::abs(a[0] * d[0] + a[1] * d[1]);
        return std::max({0.0, normal, norm2(d) - th.gamma_at(k)});
    }
    const auto& th = require_variant<PdeParameter>(theta, "gradient-ball");
    const Vec b = gradient_edge_bounds(th, k, m);
    double worst = std::max(std::abs(z.front()), std::abs(z.back()));
    for (std::size_t e = 0; e < b.size(); ++e) {
        worst = std::max(worst, (std::abs(z[e + 1] - z[e]) - b[e]) / m.mesh());
    }
    return std::max(worst, 0.0);
}

bool member(const ConstraintFamily& family, const Parameter& theta, int k, const Vec& z,
            const SpaceMetric& m, double tol) {
    return max_violation(family, theta, k, z, m) <= tol;
}

DykstraResult project_gradient_dykstra(const Vec& z, const Vec& edge_bounds, const SpaceMetric& m,
                                       const DykstraOptions& options) {
    m.require_dim(z, "project_gradient_dykstra");
    const std::size_t n = z.size();
    if (edge_bounds.size() + 1 != n) {
        throw Error(ErrorKind::DimensionMismatch, "edge bounds must have one entry per edge");
    }
    const Vec& w = m.weights();
    Vec x = z;
    // Dykstra increments: the Dirichlet set touches only the end nodes; each
    // slab increment is w-orthogonal to its own slab, stored by its flux lambda.
    double pd_first = 0.0;
    double pd_last = 0.0;
    Vec pa(n - 1, 0.0), pb(n - 1, 0.0);

    auto violation = [&]() {
        double v = std::max(std::abs(x.front()), std::abs(x.back()));
        for (std::size_t e = 0; e + 1 < n; ++e) v = std::max(v, std::abs(x[e + 1] - x[e]) - edge_bounds[e]);
        return v;
    };
    auto dual_gap = [&]() {
        double g = -(w.front() * pd_first * x.front());
        if (n > 1) g -= w.back() * pd_last * x.back();
        for (std::size_t e = 0; e + 1 < n; ++e) {
            const double lambda = w[e + 1] * pb[e];
            g += edge_bounds[e] * std::abs(lambda) - lambda * (x[e + 1] - x[e]);
        }
        return g;
    };

    double gap = kInf;
    int sweep = 0;
    for (; sweep < options.max_sweeps; ++sweep) {
        // Dirichlet ends.
        const double y0 = x.front() + pd_first;
        pd_first = y0;
        x.front() = 0.0;
        if (n > 1) {
            const double yn = x.back() + pd_last;
            pd_last = yn;
            x.back() = 0.0;
        }
        for (std::size_t e = 0; e + 1 < n; ++e) {
            const double ya = x[e] + pa[e];
            const double yb = x[e + 1] + pb[e];
            const double delta = yb - ya;
            double xa = ya, xb = yb;
            if (std::abs(delta) > edge_bounds[e]) {
                const double excess = delta - std::copysign(edge_bounds[e], delta);
                const double ia = 1.0 / w[e], ib = 1.0 / w[e + 1];
                xa = ya + excess * ia / (ia + ib);
                xb = yb - excess * ib / (ia + ib);
            }
            pa[e] = ya - xa;
            pb[e] = yb - xb;
            x[e] = xa;
            x[e + 1] = xb;
        }
        gap = dual_gap();
        if (std::abs(gap) <= options.gap_tol && violation() <= options.gap_tol) break;
    }
    if (sweep == options.max_sweeps) {
        throw Error(ErrorKind::NonConvergence, "gradient-ball Dykstra projection stopped after " +
                                                   std::to_string(options.max_sweeps) +
                                                   " sweeps with dual gap " + std::to_string(gap));
    }
    // Exact feasibility: zero the ends, then shrink toward 0 (a member).
    x.front() = 0.0;
    x.back() = 0.0;
    double scale = 1.0;
    for (std::size_t e = 0; e + 1 < n; ++e) {
        const double d = std::abs(x[e + 1] - x[e]);
        if (d > edge_bounds[e]) scale = std::min(scale, edge_bounds[e] / d);
    }
    if (scale < 1.0) {
        for (double& v : x) v *= scale;
    }
    return DykstraResult{std::move(x), gap, sweep + 1};
}

Vec project(const ConstraintFamily& family, const Parameter& theta, int k, const Vec& z,
            const SpaceMetric& m) {
    require_node(theta, k);
    m.require_dim(z, "project");
    if (const auto* f = std::get_if<HalfLine>(&family)) {
        const auto& th = require_variant<ScalarParameter>(theta, "half-line");
        const double bound = halfline_bound(*f, th, k);
        Vec out = z;
        for (double& r : out) r = std::max(r, bound);
        return out;
    }
    if (std::holds_alternative<CircleSegment>(family)) {
        const auto& th = require_variant<SweepParameter>(theta, "circle-segment");
        require_planar(z);
        const Vec2& a = th.a[static_cast<std::size_t>(k)];
        const Vec2 b = perp(a);
        const Vec& w = m.weights();
        const double num = w[0] * b[0] * (z[0] - a[0]) + w[1] * b[1] * (z[1] - a[1]);
        const double den = w[0] * b[0] * b[0] + w[1] * b[1] * b[1];
        const double gamma = th.gamma_at(k);
        const double s = std::clamp(num / den, -gamma, gamma);
        return {a[0] + s * b[0], a[1] + s * b[1]};
    }
    const auto& ball = std::get<GradientBall>(family);
    const auto& th = require_variant<PdeParameter>(theta, "gradient-ball");
    const Vec b = gradient_edge_bounds(th, k, m);
    if (ball.method == BallMethod::Dykstra) return project_gradient_dykstra(z, b, m, ball.dykstra).z;

    const std::size_t n = z.size();
    BoundedDifferenceProblem qp;
    qp.target = z;
    qp.weights = m.weights();
    qp.diff_hi = b;
    qp.diff_lo.resize(b.size());
    for (std::size_t e = 0; e < b.size(); ++e) qp.diff_lo[e] = -b[e];
    qp.node_lo.assign(n, -kInf);
    qp.node_hi.assign(n, kInf);
    qp.node_lo.front() = qp.node_hi.front() = 0.0;
    qp.node_lo.back() = qp.node_hi.back() = 0.0;
    return solve_bounded_difference(qp);
}

Vec2 rotation_apply(const Vec2& a, const Vec2& a_bar, const Vec2& z) {
    if (std::abs(norm2(a) - 1.0) > 1e-10 || std::abs(norm2(a_bar) - 1.0) > 1e-10) {
        throw Error(ErrorKind::InvalidArgument, "rotation_apply needs unit vectors");
    }
    const double s = a[0] * a_bar[1] - a[1] * a_bar[0];
    const double c = a[0] * a_bar[0] + a[1] * a_bar[1];
    return {c * z[0] - s * z[1], s * z[0] + c * z[1]};
}

double admissible_radius(const TransformationMap& map, const ConstraintFamily& family,
                         const Parameter& theta, double eps) {
    const double shrink = std::max(0.0, -map.c0(eps));
    if (std::holds_alternative<HalfLine>(family)) {
        require_variant<ScalarParameter>(theta, "half-line");
        return kInf;  // the shift absorbs any obstacle gap
    }
    if (std::holds_alternative<CircleSegment>(family)) {
        const auto& th = require_variant<SweepParameter>(theta, "circle-segment");
        return shrink * th.gamma_lo / std::max(1.0, th.gamma.lipschitz());
    }
    const auto& th = require_variant<PdeParameter>(theta, "gradient-ball");
    return shrink * th.eps0 / std::max(1.0, th.gamma.lipschitz());
}

namespace {

void require_eps(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "eps must lie in (0, 1]");
    }
}

// Largest |z_k - kappa| over the path; bounds the obstacle drift under scaling.
double halfline_reach(const HalfLine& f, const ScalarParameter& th) {
    double reach = 0.0;
    for (double v : th.z) reach = std::max(reach, std::abs(v - f.offset));
    return reach;
}

// sigma_k for the family; R is the identity except for the circle segment.
Vec shift(const TransformationMap& map, const ConstraintFamily& family, const Parameter& theta,
          const Parameter& theta_bar, double eps, int k, std::size_t dim, const TimeGrid& grid,
          double p) {
    const double c0 = map.c0(eps);
    if (const auto* f = std::get_if<HalfLine>(&family)) {
        const auto& th = std::get<ScalarParameter>(theta);
        const double d = theta_distance(theta, theta_bar, grid, p);
        return Vec(dim, d + std::abs(c0) * halfline_reach(*f, th));
    }
    if (std::holds_alternative<CircleSegment>(family)) {
        const Vec2& ab = std::get<SweepParameter>(theta_bar).a[static_cast<std::size_t>(k)];
        return {-c0 * ab[0], -c0 * ab[1]};
    }
    return Vec(dim, 0.0);
}

using Mat2 = std::array<std::array<double, 2>, 2>;

Mat2 rotation_matrix(const Vec2& a, const Vec2& a_bar) {
    const Vec2 c0 = rotation_apply(a, a_bar, {1.0, 0.0});
    const Vec2 c1 = rotation_apply(a, a_bar, {0.0, 1.0});
    return {{{c0[0], c1[0]}, {c0[1], c1[1]}}};
}

// Operator norm of M on (R^2, sum w_i |x_i|^q)^{1/q}: exact for q = 2, the
// Riesz-Thorin bound |N|_1^{1/q} |N|_inf^{1-1/q} otherwise (an upper bound).
double weighted_op_norm(const Mat2& mat, const Vec& w, double q) {
    Mat2 nmat{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            nmat[i][j] = std::pow(w[i] / w[j], 1.0 / q) * mat[i][j];
        }
    }
    if (q == 2.0) {
        const double a = nmat[0][0] * nmat[0][0] + nmat[1][0] * nmat[1][0];
        const double d = nmat[0][1] * nmat[0][1] + nmat[1][1] * nmat[1][1];
        const double b = nmat[0][0] * nmat[0][1] + nmat[1][0] * nmat[1][1];
        const double top = 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b * b);
        return std::sqrt(std::max(top, 0.0));
    }
    const double col = std::max(std::abs(nmat[0][0]) + std::abs(nmat[1][0]),
                                std::abs(nmat[0][1]) + std::abs(nmat[1][1]));
    const double row = std::max(std::abs(nmat[0][0]) + std::abs(nmat[0][1]),
                                std::abs(nmat[1][0]) + std::abs(nmat[1][1]));
    return std::pow(col, 1.0 / q) * std::pow(row, 1.0 - 1.0 / q);
}

Mat2 minus(const Mat2& a, const Mat2& b) {
    return {{{a[0][0] - b[0][0], a[0][1] - b[0][1]}, {a[1][0] - b[1][0], a[1][1] - b[1][1]}}};
}

}  // namespace

Vec transform(const TransformationMap& map, const ConstraintFamily& family, const Parameter& theta,
              const Parameter& theta_bar, double eps, int k, const Vec& z, const TimeGrid& grid,
              const SpaceMetric& m) {
    require_eps(eps);
    if (theta.index() != theta_bar.index()) {
        throw Error(ErrorKind::VariantMismatch, "transform: parameters of different variants");
    }
    const double viol = max_violation(family, theta, k, z, m);
    if (viol > kMemberTol) {
        throw Error(ErrorKind::Infeasible, "transform: state at node " + std::to_string(k) +
                                               " is not in K(theta) (violation " + std::to_string(viol) + ")");
    }
    const double scale = 1.0 + map.c0(eps);
    const Vec sigma = shift(map, family, theta, theta_bar, eps, k, z.size(), grid, m.p());
    Vec out = z;
    if (std::holds_alternative<CircleSegment>(family)) {
        const auto& a = std::get<SweepParameter>(theta).a[static_cast<std::size_t>(k)];
        const auto& ab = std::get<SweepParameter>(theta_bar).a[static_cast<std::size_t>(k)];
        const Vec2 r = rotation_apply(a, ab, {z[0], z[1]});
        out = {r[0], r[1]};
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * out[i] + sigma[i];
    return out;
}

TransformConstants measure_transform(const TransformationMap& map, const ConstraintFamily& family,
                                     const Parameter& theta, const Parameter& theta_bar, double eps,
                                     const TimeGrid& grid, const SpaceMetric& m) {
    require_eps(eps);
    const int nodes = grid.nodes();
    if (parameter_nodes(theta) != nodes || parameter_nodes(theta_bar) != nodes) {
        throw Error(ErrorKind::DimensionMismatch, "measure_transform: parameters not on the grid");
    }
    const double d = theta_distance(theta, theta_bar, grid, m.p());
    const double tau = grid.tau();
    const double q = m.conjugate();

    double r_minus_h = 0.0, r_minus_v = 0.0, rho = 1.0, r_dot = 0.0;
    if (std::holds_alternative<CircleSegment>(family)) {
        const auto& th = require_variant<SweepParameter>(theta, "circle-segment");
        const auto& tb = require_variant<SweepParameter>(theta_bar, "circle-segment");
        const Mat2 eye{{{1.0, 0.0}, {0.0, 1.0}}};
        // Same-as-H is the only V mode for planar states.
        const double pv = m.mode() == VMode::SameAsH ? m.p() : 2.0;
        rho = 0.0;
        Mat2 prev{};
        for (int k = 0; k < nodes; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const Mat2 r = rotation_matrix(th.a[uk], tb.a[uk]);
            r_minus_h = std::max(r_minus_h, weighted_op_norm(minus(r, eye), m.weights(), 2.0));
            r_minus_v = std::max(r_minus_v, weighted_op_norm(minus(r, eye), m.weights(), pv));
            rho = std::max(rho, weighted_op_norm(r, m.weights(), pv));
            if (k > 0) {
                Mat2 diff = minus(r, prev);
                for (auto& row : diff) {
                    for (double& v : row) v /= tau;
                }
                r_dot += std::pow(weighted_op_norm(diff, m.weights(), 2.0), q) * tau;
            }
            prev = r;
        }
        r_dot = std::pow(r_dot, 1.0 / q);
    }
    const double r_total = r_minus_h + r_minus_v + r_dot;
    const double r0 = r_total == 0.0 ? 0.0 : (d > 0.0 ? r_total / d : kInf);

    double sigma_sup = 0.0, sigma_dot = 0.0;
    const auto dim = static_cast<std::size_t>(m.dim());
    Vec prev_sigma;
    for (int k = 0; k < nodes; ++k) {
        const Vec s = shift(map, family, theta, theta_bar, eps, k, dim, grid, m.p());
        sigma_sup = std::max(sigma_sup, v_norm(s, m));
        if (k > 0) {
            Vec ds(dim);
            for (std::size_t i = 0; i < dim; ++i) ds[i] = (s[i] - prev_sigma[i]) / tau;
            sigma_dot += std::pow(dual_norm(ds, m), q) * tau;
        }
        prev_sigma = s;
    }
    sigma_dot = std::pow(sigma_dot, 1.0 / q);
    const double sigma0 = (sigma_sup + sigma_dot) / (d + eps);
    return TransformConstants{d, r0, sigma0, rho};
}

MoscoReport mosco_gap(const TransformationMap& map, const ConstraintFamily& family, const Parameter& theta,
                      const Parameter& theta_bar, double eps, const Trajectory& eta, const TimeGrid& grid,
                      const SpaceMetric& m) {
    eta.require_shape(grid, m, "mosco_gap");
    for (int k = 0; k < grid.nodes(); ++k) {
        const double viol = max_violation(family, theta, k, eta[k], m);
        if (viol > kMemberTol) {
            throw Error(ErrorKind::Infeasible, "mosco_gap: test trajectory leaves K(theta) at node " +
                                                   std::to_string(k) + " (violation " + std::to_string(viol) +
                                                   ")");
        }
    }
    std::vector<Vec> moved(static_cast<std::size_t>(grid.nodes()));
    for (int k = 0; k < grid.nodes(); ++k) {
        Vec fz = transform(map, family, theta, theta_bar, eps, k, eta[k], grid, m);
        for (std::size_t i = 0; i < fz.size(); ++i) fz[i] -= eta[k][i];
        moved[static_cast<std::size_t>(k)] = std::move(fz);
    }
    const double gap = lp_v_norm(Trajectory(std::move(moved)), grid, m);
    const double eta_norm = lp_v_norm(eta, grid, m);
    const TransformConstants c = measure_transform(map, family, theta, theta_bar, eps, grid, m);
    const double r_term = c.distance > 0.0 ? c.r0 * c.distance : 0.0;
    const double bound = (r_term + std::abs(map.c0(eps)) * c.rho) * eta_norm +
                         c.sigma0 * (c.distance + eps) * std::pow(grid.horizon(), 1.0 / m.p());
    return MoscoReport{gap, bound, eta_norm, c};
}

}  // namespace pqvi
