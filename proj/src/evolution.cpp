#include "pqvi/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pqvi/error.hpp"

namespace pqvi {

namespace {

Vec axpy(const Vec& x, double a, const Vec& y) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * y[i];
    return out;
}

double h_dist(const Vec& x, const Vec& y, const SpaceMetric& m) { return h_norm(axpy(x, -1.0, y), m); }

double regularization(const StepMode& mode) {
    return mode.kind == StepKind::DualityRegularized ? mode.reg_weight : 0.0;
}

// B(z) = A(v; z) + lambda F z at time index k.
Vec step_operator(const Vec& z, int k, const SemimonotoneOperator& op, const Trajectory& v, const StepMode& mode,
                  const TimeGrid& grid, const SpaceMetric& m) {
    Vec out = apply(op, v[k], z, grid.t(k), m);
    const double lambda = regularization(mode);
    if (lambda > 0.0) {
        const Vec fz = duality_map(z, m);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += lambda * fz[i];
    }
    return out;
}

// Largest slope allowed by the gradient ball at node k; nullopt for other families.
std::optional<double> slope_cap(const Parameter& theta, const ConstraintFamily& family, int k) {
    if (!std::holds_alternative<GradientBall>(family)) return std::nullopt;
    const auto* th = std::get_if<PdeParameter>(&theta);
    if (th == nullptr) return std::nullopt;
    double g = 0.0;
    for (double z : th->zeta.at(static_cast<std::size_t>(k))) g = std::max(g, th->gamma(z));
    return g;
}

void require_forcing(const Trajectory& f, const TimeGrid& grid, const SpaceMetric& m, const char* what) {
    f.require_shape(grid, m, what);
}

}  // namespace

void StepMode::validate() const {
    if (!(reg_weight > 0.0)) throw Error(ErrorKind::InvalidArgument, "regularization weight must be positive");
    if (!(tol_inner > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol_inner must be positive");
    if (!(step >= 0.0)) throw Error(ErrorKind::InvalidArgument, "inner step rho must be positive (or 0 for auto)");
    if (max_inner < 1) throw Error(ErrorKind::InvalidArgument, "max_inner must be positive");
}

Vec step_residual(const Vec& z, const Vec& u_prev, int k_next, const SemimonotoneOperator& op,
                  const Trajectory& v, const Vec& f_step, const StepMode& mode, const TimeGrid& grid,
                  const SpaceMetric& m) {
    const double tau = grid.tau();
    Vec r = step_operator(z, k_next, op, v, mode, grid, m);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += (z[i] - u_prev[i]) / tau - f_step[i];
    return r;
}

double step_lipschitz(const Vec& u_prev, int k, const Parameter& theta, const ConstraintFamily& family,
                      const SemimonotoneOperator& op, const Trajectory& v, const StepMode& mode,
                      const TimeGrid& grid, const SpaceMetric& m) {
    const double lambda = regularization(mode);
    const auto cap = slope_cap(theta, family, k);
    bool exact = true;
    double bound = 0.0;

    // Discrete -div(c |d|^{p-2} d) in H has Lipschitz constant at most
    // 4 c (p-1) G^{p-2} / h^2 on states whose slopes stay below G.
    auto gradient_bound = [&](double c) {
        const double h = m.mesh();
        return 4.0 * c * (m.p() - 1.0) * std::pow(*cap, m.p() - 2.0) / (h * h);
    };

    if (const auto* pl = std::get_if<PLaplacian>(&op)) {
        if (cap) bound += gradient_bound(pl->a_hi);
        else exact = false;
    } else if (std::holds_alternative<ScalarMonotone>(op)) {
        exact = false;
    }
    if (lambda > 0.0) {
        if (m.mode() == VMode::SameAsH && m.p() == 2.0) bound += lambda;
        else if (m.mode() == VMode::DiscreteGradient && cap) bound += lambda * gradient_bound(1.0);
        else exact = false;
    }
    if (exact) return 1.2 * bound;

    // Sampled ratios |B z - B w| / |z - w| over states drawn from K.
    std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(k));
    std::normal_distribution<double> normal(0.0, 1.0);
    double reach = 1.0;
    for (double x : u_prev) reach = std::max(reach, 1.0 + std::abs(x));
    std::vector<Vec> states;
    std::vector<Vec> images;
    for (double s : {0.01, 0.1, 1.0}) {
        for (int j = 0; j < 8; ++j) {
            Vec z = u_prev;
            for (double& x : z) x += s * reach * normal(rng);
            z = project(family, theta, k, z, m);
            images.push_back(step_operator(z, k, op, v, mode, grid, m));
            states.push_back(std::move(z));
        }
    }
    double sampled = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (std::size_t j = i + 1; j < states.size(); ++j) {
            const double dz = h_dist(states[i], states[j], m);
            if (dz > 1e-12) sampled = std::max(sampled, h_dist(images[i], images[j], m) / dz);
        }
    }
    return 1.2 * std::max(bound, sampled);
}

StepResult implicit_step(const Vec& u_prev, int k_next, const Parameter& theta, const ConstraintFamily& family,
                         const SemimonotoneOperator& op, const Trajectory& v, const Vec& f_step,
                         const StepMode& mode, const TimeGrid& grid, const SpaceMetric& m) {
    mode.validate();
    if (k_next < 1 || k_next >= grid.nodes()) {
        throw Error(ErrorKind::InvalidArgument, "implicit_step: node " + std::to_string(k_next) + " is off the grid");
    }
    m.require_dim(u_prev, "implicit_step");
    m.require_dim(f_step, "implicit_step forcing");
    for (double x : u_prev) {
        if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "implicit_step: non-finite previous state");
    }
    const double tau = grid.tau();
    double rho = mode.step;
    if (rho == 0.0) {
        const double lip = step_lipschitz(u_prev, k_next, theta, family, op, v, mode, grid, m);
        rho = tau / (1.0 + tau * lip);
    } else if (rho > tau) {
        throw Error(ErrorKind::InvalidArgument, "implicit_step: inner step rho must not exceed tau");
    }
    // Contraction factor of the projected map for monotone gradient operators.
    double q = 1.0 - rho / tau;

    Vec start = u_prev;
    if (mode.inner_seed != 0) {
        std::mt19937_64 rng(mode.inner_seed);
        std::uniform_real_distribution<double> unif(-1e-3, 1e-3);
        for (double& x : start) x += unif(rng);
    }
    Vec z = project(family, theta, k_next, start, m);

    double prev_change = std::numeric_limits<double>::infinity();
    int growth = 0;
    double change = 0.0;
    for (int it = 1; it <= mode.max_inner; ++it) {
        const Vec r = step_residual(z, u_prev, k_next, op, v, f_step, mode, grid, m);
        Vec next = project(family, theta, k_next, axpy(z, -rho, r), m);
        change = h_dist(next, z, m);
        z = std::move(next);
        if (change == 0.0 || change * q <= mode.tol_inner * (1.0 - q)) return StepResult{std::move(z), it, change};
        if (change > prev_change) {
            if (++growth >= 5) {
                rho *= 0.5;
                q = 1.0 - rho / tau;
                growth = 0;
            }
        } else {
            growth = 0;
        }
        prev_change = change;
    }
    throw Error(ErrorKind::NonConvergence, "implicit_step at node " + std::to_string(k_next) +
                                               ": inner iteration stopped after " +
                                               std::to_string(mode.max_inner) + " iterations, last change " +
                                               std::to_string(change));
}

Evolution catching_up_solve(const Parameter& theta, const ConstraintFamily& family, const SemimonotoneOperator& op,
                            const Trajectory& v, const Trajectory& f, const Vec& u0, const StepMode& mode,
                            const TimeGrid& grid, const SpaceMetric& m) {
    mode.validate();
    m.require_dim(u0, "catching_up_solve u0");
    require_forcing(f, grid, m, "catching_up_solve forcing");
    v.require_shape(grid, m, "catching_up_solve v");
    if (parameter_nodes(theta) != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, "catching_up_solve: parameter is not on the time grid");
    }
    const double viol0 = max_violation(family, theta, 0, u0, m);
    if (viol0 > 1e-6) {
        throw Error(ErrorKind::Infeasible,
                    "catching_up_solve: u0 lies outside K(theta; 0) by " + std::to_string(viol0));
    }
    std::vector<Vec> states(static_cast<std::size_t>(grid.nodes()));
    states[0] = u0;
    int max_inner = 0;
    long total = 0;
    for (int k = 1; k < grid.nodes(); ++k) {
        StepResult step;
        try {
            step = implicit_step(states[static_cast<std::size_t>(k - 1)], k, theta, family, op, v, f[k - 1], mode,
                                 grid, m);
        } catch (const Error& e) {
            throw Error(e.kind(), "catching_up_solve failed at node " + std::to_string(k) + ": " + e.what());
        }
        max_inner = std::max(max_inner, step.iterations);
        total += step.iterations;
        states[static_cast<std::size_t>(k)] = std::move(step.z);
    }
    Trajectory u(std::move(states));
    Trajectory alpha = apply_trajectory(op, v, u, grid, m);
    return Evolution{std::move(u), std::move(alpha), max_inner, total};
}

std::pair<double, int> trajectory_violation(const Trajectory& u, const Parameter& theta,
                                            const ConstraintFamily& family, const SpaceMetric& m, int first) {
    double worst = 0.0;
    int where = -1;
    for (int k = first; k < u.nodes(); ++k) {
        const double v = max_violation(family, theta, k, u[k], m);
        if (v > worst || where < 0) {
            worst = v;
            where = k;
        }
    }
    return {worst, where};
}

WeakResidualReport weak_residual(const Trajectory& u, const Trajectory& g, const Parameter& theta,
                                 const ConstraintFamily& family, const std::vector<Trajectory>& test_family,
                                 const TimeGrid& grid, const SpaceMetric& m) {
    u.require_shape(grid, m, "weak_residual u");
    g.require_shape(grid, m, "weak_residual g");
    const auto [uv, uk] = trajectory_violation(u, theta, family, m, 1);
    if (uv > kFeasibilityTol) {
        throw Error(ErrorKind::Infeasible, "weak_residual: u leaves K(theta) at node " + std::to_string(uk) +
                                               " (violation " + std::to_string(uv) + ")");
    }
    const double tau = grid.tau();
    WeakResidualReport report{-std::numeric_limits<double>::infinity(), -1, {}};
    for (std::size_t i = 0; i < test_family.size(); ++i) {
        const Trajectory& eta = test_family[i];
        eta.require_shape(grid, m, "weak_residual test trajectory");
        const auto [ev, ek] = trajectory_violation(eta, theta, family, m, 0);
        if (ev > kFeasibilityTol) {
            throw Error(ErrorKind::Infeasible, "weak_residual: test trajectory " + std::to_string(i) +
                                                   " leaves K(theta) at node " + std::to_string(ek) +
                                                   " (violation " + std::to_string(ev) + ")");
        }
        double s = 0.0;
        for (int k = 0; k < grid.steps(); ++k) {
            Vec lhs(eta[k].size()), rhs(eta[k].size());
            for (std::size_t j = 0; j < lhs.size(); ++j) {
                lhs[j] = (eta[k + 1][j] - eta[k][j]) / tau - g[k][j];
                rhs[j] = u[k][j] - eta[k][j];
            }
            s += pairing(lhs, rhs, m) * tau;
        }
        const double d0 = h_dist(u[0], eta[0], m);
        const double margin = s - 0.5 * d0 * d0;
        report.margins.push_back(margin);
        if (margin > report.worst) {
            report.worst = margin;
            report.worst_index = static_cast<int>(i);
        }
    }
    return report;
}

double contraction_check(const Trajectory& u, const Trajectory& u_bar, const Trajectory& f,
                         const Trajectory& f_bar, int s, int t, const TimeGrid& grid, const SpaceMetric& m) {
    if (s < 0 || t < s || t >= grid.nodes()) {
        throw Error(ErrorKind::InvalidArgument, "contraction_check: need 0 <= s <= t <= K");
    }
    for (const Trajectory* x : {&u, &u_bar, &f, &f_bar}) x->require_shape(grid, m, "contraction_check");
    const double dt = h_dist(u[t], u_bar[t], m);
    const double ds = h_dist(u[s], u_bar[s], m);
    double rhs = 0.0;
    for (int k = s; k < t; ++k) rhs += pairing(axpy(f[k], -1.0, f_bar[k]), axpy(u[k], -1.0, u_bar[k]), m);
    return 0.5 * dt * dt - 0.5 * ds * ds - rhs * grid.tau();
}

std::optional<double> energy_check(const Trajectory& u, const Trajectory& alpha, const Trajectory& f,
                                   const Parameter& theta, const ConstraintFamily& family,
                                   const TimeGrid& grid, const SpaceMetric& m) {
    for (const Trajectory* x : {&u, &alpha, &f}) x->require_shape(grid, m, "energy_check");
    const Vec zero(static_cast<std::size_t>(m.dim()), 0.0);
    for (int k = 1; k < grid.nodes(); ++k) {
        if (!member(family, theta, k, zero, m, 1e-10)) return std::nullopt;
    }
    const double tau = grid.tau();
    const double e0 = 0.5 * h_inner(u[0], u[0], m);
    double acc = 0.0;
    double worst = 0.0;
    for (int j = 1; j < grid.nodes(); ++j) {
        acc += (pairing(alpha[j], u[j], m) - pairing(f[j - 1], u[j], m)) * tau;
        worst = std::max(worst, 0.5 * h_inner(u[j], u[j], m) - e0 + acc);
    }
    return worst;
}

GraphProbe graph_convergence_probe(const Parameter& theta, const Vec& u0, const std::vector<Parameter>& theta_seq,
                                   const std::vector<Vec>& u0_seq, const Trajectory& g, const Trajectory& u,
                                   const ConstraintFamily& family, const StepMode& mode, const TimeGrid& grid,
                                   const SpaceMetric& m) {
    if (theta_seq.size() != u0_seq.size()) {
        throw Error(ErrorKind::DimensionMismatch, "graph_convergence_probe: theta and u0 sequences differ in length");
    }
    g.require_shape(grid, m, "graph_convergence_probe g");
    u.require_shape(grid, m, "graph_convergence_probe u");
    StepMode reg = mode;
    reg.kind = StepKind::DualityRegularized;
    std::vector<Vec> forcing(static_cast<std::size_t>(grid.nodes()));
    for (int k = 0; k < grid.nodes(); ++k) {
        forcing[static_cast<std::size_t>(k)] = axpy(g[k], reg.reg_weight, duality_map(u[k], m));
    }
    const Trajectory r(std::move(forcing));
    const SemimonotoneOperator zero = ZeroOperator{};
    auto gap = [&](const Trajectory& a, const Trajectory& b) {
        return GraphGap{sup_h_distance(a, b, m), lp_v_norm(a - b, grid, m)};
    };
    const Trajectory ref = catching_up_solve(theta, family, zero, u, r, u0, reg, grid, m).u;
    GraphProbe probe{{}, gap(ref, u)};
    for (std::size_t n = 0; n < theta_seq.size(); ++n) {
        const Trajectory un = catching_up_solve(theta_seq[n], family, zero, u, r, u0_seq[n], reg, grid, m).u;
        probe.gaps.push_back(gap(un, ref));
    }
    return probe;
}

std::vector<Trajectory> standard_test_family(const Trajectory& u, const Parameter& theta,
                                             const ConstraintFamily& family, const TimeGrid& grid,
                                             const SpaceMetric& m, int count, std::uint64_t seed) {
    u.require_shape(grid, m, "standard_test_family");
    const int nodes = grid.nodes();
    const auto dim = static_cast<std::size_t>(m.dim());
    auto projected = [&](const std::function<Vec(int)>& fn) {
        std::vector<Vec> states(static_cast<std::size_t>(nodes));
        for (int k = 0; k < nodes; ++k) states[static_cast<std::size_t>(k)] = project(family, theta, k, fn(k), m);
        return Trajectory(std::move(states));
    };
    std::vector<Trajectory> out;
    out.push_back(projected([&](int k) { return u[k]; }));

    double lo = u[0][0], hi = u[0][0];
    for (const Vec& s : u.states()) {
        for (double x : s) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    for (double c : {lo - 1.0, lo, 0.5 * (lo + hi), hi, hi + 1.0}) {
        out.push_back(projected([&](int) { return Vec(dim, c); }));
    }

    if (const auto* hl = std::get_if<HalfLine>(&family)) {
        const auto& th = std::get<ScalarParameter>(theta);
        for (double lift : {0.0, 0.1, 0.5}) {
            out.push_back(projected([&](int k) { return Vec(dim, th.z[static_cast<std::size_t>(k)] - hl->offset + lift); }));
        }
    } else if (std::holds_alternative<CircleSegment>(family)) {
        const auto& th = std::get<SweepParameter>(theta);
        for (double frac : {0.0, 0.5, -0.5}) {
            out.push_back(projected([&](int k) {
                const Vec2& a = th.a[static_cast<std::size_t>(k)];
                const double s = frac * th.gamma_at(k);
                return Vec{a[0] - s * a[1], a[1] + s * a[0]};
            }));
        }
    } else {
        for (double scale : {0.0, 0.5, 0.9}) {
            out.push_back(projected([&](int k) {
                Vec z = u[k];
                for (double& x : z) x *= scale;
                return z;
            }));
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> size(0.2, 1.0);
    const double T = grid.horizon();
    for (int j = 0; static_cast<int>(out.size()) < count; ++j) {
        const int freq = 1 + j % 3;
        // |eta'| from the perturbation stays below 2.5.
        const double amp = size(rng) * 2.5 * T / (2.0 * std::numbers::pi * freq);
        const double ph = phase(rng);
        Vec dir(dim);
        for (double& x : dir) x = unif(rng);
        out.push_back(projected([&](int k) {
            const double w = amp * std::sin(2.0 * std::numbers::pi * freq * grid.t(k) / T + ph);
            return axpy(u[k], w, dir);
        }));
    }
    if (static_cast<int>(out.size()) > count) out.resize(static_cast<std::size_t>(std::max(count, 1)));
    return out;
}

}  // namespace pqvi
