// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "oracles.hpp"
#include "pqvi/error.hpp"
#include "pqvi/qvi.hpp"
#include "pqvi/scenario.hpp"

using namespace pqvi;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = PQVI_CONFIG_DIR;
const SpaceMetric kPlane = SpaceMetric::euclidean(2, 2.0);

struct Verdict {
    bool pass;
    std::string detail;
};

class Clock {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

Scenario scenario(const std::string& file) { return load_scenario(kConfigs + "/" + file); }

/// Same scenario on another time grid; forcing stays constant.
Scenario at_steps(Scenario sc, int steps) {
    const double horizon = sc.problem.grid.horizon();
    const Vec f = sc.problem.f[0];
    sc.problem.grid = TimeGrid(horizon, steps);
    sc.problem.f = Trajectory::constant(sc.problem.grid.nodes(), f);
    return sc;
}

double sup_h_gap_refined(const Trajectory& coarse, const Trajectory& fine, const SpaceMetric& m) {
    double gap = 0.0;
    for (int k = 0; k < coarse.nodes(); ++k) {
        Vec d = coarse[k];
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= fine[2 * k][i];
        gap = std::max(gap, h_norm(d, m));
    }
    return gap;
}

SweepParameter rotating(const TimeGrid& g, double speed, double phase = 0.0, double gamma = 0.4) {
    std::vector<Vec2> a, zeta;
    for (int k = 0; k < g.nodes(); ++k) {
        const double t = speed * g.t(k) + phase;
        a.push_back({std::cos(t), std::sin(t)});
        zeta.push_back({1.0, 0.0});
    }
    return SweepParameter::make(a, zeta, PiecewiseLinear::constant(gamma), 0.25, 0.6);
}

Verdict analytic_family() {
    const Clock clock;
    const TimeGrid g(1.0, 1000);
    const SpaceMetric line = SpaceMetric::euclidean(1, 2.0);
    double worst_lambda = 0.0, worst_weak = -std::numeric_limits<double>::infinity();
    for (double c : {0.0, 0.25, 0.5, 1.0}) {
        const Trajectory u = Trajectory::sample(g, [c](double t) { return Vec{2.0 - std::exp(-c * t)}; });
        const ScalarParameter theta = lambda_scalar(ScalarProjection{1.0}, u, g).theta;
        for (int k = 0; k < g.nodes(); ++k) worst_lambda = std::max(worst_lambda, std::abs(theta.z[static_cast<std::size_t>(k)] - u[k][0]));
        const auto family = standard_test_family(u, theta, HalfLine{}, g, line, 20, 11);
        const auto r = weak_residual(u, Trajectory(g.nodes(), 1, 0.0), theta, HalfLine{}, family, g, line);
        worst_weak = std::max(worst_weak, r.worst);
    }
    const double secs = clock.seconds();
    return {worst_lambda <= 1e-8 && worst_weak <= 5 * g.tau() && secs < 5.0,
            fmt("max |lambda(u_c) - u_c| = %.3g, max weak residual = %.3g (5 tau = %.3g), %.2f s", worst_lambda,
                worst_weak, 5 * g.tau(), secs)};
}

Verdict non_uniqueness() {
    const Clock clock;
    const Scenario sc = scenario("scalar_example.ini");
    std::vector<Trajectory> seeds;
    for (const auto& s : sc.seeds) seeds.push_back(make_seed(sc, s));
    const Exploration ex = multi_seed_explore(sc.problem, seeds, sc.cluster_tol);
    const double secs = clock.seconds();
    const auto clusters = ex.representatives.size();
    return {seeds.size() == 3 && clusters >= 2 && ex.min_separation >= 0.1 && secs < 30.0,
            fmt("%zu seeds, %zu clusters, separation %.3g, %.2f s", seeds.size(), clusters, ex.min_separation, secs)};
}

Verdict fixed_theta_uniqueness() {
    double worst_seed = 0.0, worst_excess = -std::numeric_limits<double>::infinity();
    for (const char* file : {"sweep2d.ini", "gradient_pde.ini"}) {
        const Scenario sc = scenario(file);
        const QviProblem& P = sc.problem;
        const Trajectory v = make_seed(sc, "random:1");
        const Parameter theta = lambda_apply(P.feedback, v, P.grid, P.metric);
        StepMode a = P.mode, b = P.mode;
        b.inner_seed = 12345;
        const Evolution ea = catching_up_solve(theta, P.family, P.op, v, P.f, P.u0, a, P.grid, P.metric);
        const Evolution eb = catching_up_solve(theta, P.family, P.op, v, P.f, P.u0, b, P.grid, P.metric);
        worst_seed = std::max(worst_seed, sup_abs_distance(ea.u, eb.u));

        // Shift the start by an H-distance delta inside K(theta; 0).
        Vec shifted = P.u0, dir(P.u0.size(), 0.0);
        if (P.metric.dim() == 2) {
            dir = {0.0, 1.0};
        } else {
            const auto n = dir.size();
            for (std::size_t i = 0; i < n; ++i) dir[i] = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        }
        const double delta = 0.05;
        const double scale = delta / h_norm(dir, P.metric);
        for (std::size_t i = 0; i < dir.size(); ++i) shifted[i] += scale * dir[i];
        if (!member(P.family, theta, 0, shifted, P.metric, 1e-8)) return {false, std::string(file) + ": shifted start left K"};
        const Evolution ec = catching_up_solve(theta, P.family, P.op, v, P.f, shifted, a, P.grid, P.metric);
        worst_excess = std::max(worst_excess, sup_h_distance(ea.u, ec.u, P.metric) - delta - 5 * P.grid.tau());
    }
    return {worst_seed <= 1e-10 && worst_excess <= 0.0,
            fmt("inner-seed sup difference %.3g, worst sup gap - (delta + 5 tau) = %.3g", worst_seed, worst_excess)};
}

Verdict contraction() {
    const Scenario sc = scenario("sweep2d.ini");
    const QviProblem& P = sc.problem;
    if (P.grid.steps() != 400) return {false, "sweep2d grid is not K = 400"};
    const QviSolution s = fixed_point_solve(P, make_seed(sc, sc.seeds.front()));
    Trajectory f_bar = P.f;
    for (int k = 0; k < f_bar.nodes(); ++k) {
        f_bar[k][0] += 0.7 * std::cos(3.0 * P.grid.t(k));
        f_bar[k][1] += 0.4;
    }
    const Evolution a = catching_up_solve(s.theta, P.family, P.op, s.u, P.f, P.u0, P.mode, P.grid, P.metric);
    const Evolution b = catching_up_solve(s.theta, P.family, P.op, s.u, f_bar, P.u0, P.mode, P.grid, P.metric);
    std::vector<int> idx;
    for (int i = 0; i < 20; ++i) idx.push_back(static_cast<int>(std::lround(i * 400.0 / 19.0)));
    double worst = -std::numeric_limits<double>::infinity();
    int pairs = 0;
    for (int s0 : idx) {
        for (int t0 : idx) {
            if (s0 > t0) continue;
            worst = std::max(worst, contraction_check(a.u, b.u, P.f, f_bar, s0, t0, P.grid, P.metric));
            ++pairs;
        }
    }
    return {worst <= 5 * P.grid.tau(), fmt("%d pairs, worst margin %.3g (5 tau = %.3g)", pairs, worst, 5 * P.grid.tau())};
}

Verdict mosco_suite() {
    const TimeGrid g(1.0, 50);
    const TransformationMap map;
    std::vector<Vec2> a;
    std::vector<Vec> eta;
    for (int k = 0; k <= 50; ++k) {
        const double t = g.t(k);
        a.push_back({std::cos(0.5 * t), std::sin(0.5 * t)});
        const double s = 0.3 * std::sin(2.0 * t);
        eta.push_back({a.back()[0] - s * a.back()[1], a.back()[1] + s * a.back()[0]});
    }
    const auto segment = [](const std::vector<Vec2>& path) {
        return SweepParameter::make(path, std::vector<Vec2>(path.size(), Vec2{1.0, 0.0}), PiecewiseLinear::constant(0.4),
                                    0.25, 0.6);
    };
    const SweepParameter th = segment(a);
    bool ok = true;
    double last = std::numeric_limits<double>::infinity();
    std::string detail;
    for (double d : {0.1, 0.05, 0.025}) {
        const double phi = 2.0 * std::asin(d / 2.0);
        std::vector<Vec2> ab;
        for (const auto& v : a) ab.push_back({std::cos(phi) * v[0] - std::sin(phi) * v[1], std::sin(phi) * v[0] + std::cos(phi) * v[1]});
        const MoscoReport r = mosco_gap(map, CircleSegment{}, th, segment(ab), d, Trajectory(eta), g, kPlane);
        ok = ok && r.gap <= r.bound && r.gap < last;
        last = r.gap;
        detail += fmt("d=%.3g: gap %.3g <= %.3g (R0 %.3g, sigma0 %.3g); ", d, r.gap, r.bound, r.constants.r0,
                      r.constants.sigma0);
    }
    return {ok, detail};
}

Verdict feasibility() {
    double worst = 0.0;
    int solves = 0;
    for (const char* file : {"scalar_example.ini", "sweep2d.ini", "gradient_pde.ini"}) {
        const Scenario sc = scenario(file);
        for (const auto& spec : sc.seeds) {
            const QviSolution s = fixed_point_solve(sc.problem, make_seed(sc, spec));
            worst = std::max(worst, trajectory_violation(s.u, s.theta, sc.problem.family, sc.problem.metric).first);
            ++solves;
        }
    }
    gen::Source src(5);
    const double mesh = 0.25;
    const SpaceMetric m = SpaceMetric::gradient(5, mesh, 2.0);
    double qp = 0.0;
    for (int i = 0; i < 40; ++i) {
        std::vector<Vec> zeta(3, src.vec(5, 0.0, 1.0));
        const PdeParameter theta =
            PdeParameter::make(PiecewiseLinear({0.0, 1.0}, {src.uniform(0.3, 1.5), src.uniform(0.3, 1.5)}), 0.2, zeta);
        const Vec z = src.vec(5, -1.5, 1.5);
        const Vec expect = oracle::gradient_ball_qp(z, gradient_edge_bounds(theta, 1, m), mesh);
        for (BallMethod method : {BallMethod::Exact, BallMethod::Dykstra}) {
            const Vec got = project(GradientBall{method, {}}, theta, 1, z, m);
            for (std::size_t j = 0; j < 5; ++j) qp = std::max(qp, std::abs(got[j] - expect[j]));
        }
    }
    return {worst <= kFeasibilityTol && qp <= 1e-6,
            fmt("%d solves, worst violation %.3g; gradient-ball QP deviation %.3g over 40 instances", solves, worst, qp)};
}

Verdict heat_order() {
    const Clock clock;
    const double T = 0.5;
    auto run = [&](int cells, int steps) {
        const double mesh = 1.0 / cells;
        const TimeGrid g(T, steps);
        Vec z0(static_cast<std::size_t>(cells + 1));
        for (int i = 0; i <= cells; ++i) z0[static_cast<std::size_t>(i)] = std::cos(std::numbers::pi * i * mesh);
        const auto zeta = solve_heat_robin(z0, mesh, 0.0, g, [](double x, double t, int, int) {
            return (std::numbers::pi * std::numbers::pi - 1.0) * std::exp(-t) * std::cos(std::numbers::pi * x);
        });
        double err = 0.0;
        for (int k = 0; k <= steps; ++k) {
            for (int i = 0; i <= cells; ++i) {
                err = std::max(err, std::abs(zeta[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] -
                                             std::exp(-g.t(k)) * std::cos(std::numbers::pi * i * mesh)));
            }
        }
        return err;
    };
    const double e1 = run(8, 16), e2 = run(16, 64), e3 = run(32, 256);
    const double r1 = e1 / e2, r2 = e2 / e3, secs = clock.seconds();
    const auto in = [](double r) { return r >= 3.5 && r <= 4.5; };
    return {in(r1) && in(r2) && secs < 60.0, fmt("errors %.3g, %.3g, %.3g; ratios %.3f, %.3f; %.2f s", e1, e2, e3, r1, r2, secs)};
}

Verdict p_laplacian() {
    gen::Source src(101);
    double worst_rel = 0.0, worst_mono = std::numeric_limits<double>::infinity();
    for (double p : {2.0, 3.0}) {
        const int n = 17;
        const double mesh = 1.0 / (n - 1);
        const SpaceMetric m = SpaceMetric::gradient(n, mesh, p);
        const PLaplacian op = PLaplacian::from_table(PiecewiseLinear({-1.0, 1.0}, {0.2, 2.0}), p, mesh);
        const Vec v = src.pinned(n, -1, 1);
        for (int i = 0; i < 100; ++i) {
            const Vec u = src.pinned(n, -1, 1);
            const Vec au = apply(op, v, u, 0.0, m);
            double err = 0.0, scale = 0.0;
            for (std::size_t j = 1; j + 1 < u.size(); ++j) {
                const double fd = oracle::central_difference(
                    [&](double x) {
                        Vec w = u;
                        w[j] = x;
                        return discrete_energy(op, v, w, 0.0, m);
                    },
                    u[j], 1e-6);
                err = std::max(err, std::abs(mesh * au[j] - fd));
                scale = std::max(scale, std::abs(fd));
            }
            worst_rel = std::max(worst_rel, err / std::max(scale, 1.0));
        }
        const TimeGrid g(1.0, 4);
        std::vector<Vec> vs;
        for (int k = 0; k < 5; ++k) vs.push_back(src.pinned(n, -1, 1));
        worst_mono = std::min(worst_mono, monotonicity_probe(op, Trajectory(vs), g, m, ProbeOptions{500, 2.0, 7}));
    }
    return {worst_rel <= 1e-5 && worst_mono >= -1e-10,
            fmt("worst relative gradient error %.3g over 200 states, min monotonicity %.3g over 1000 pairs", worst_rel, worst_mono)};
}

Verdict refinement() {
    bool ok = true;
    std::string detail;
    for (const auto& [file, base] : std::vector<std::pair<std::string, int>>{
             {"scalar_example.ini", 25}, {"sweep2d.ini", 25}, {"gradient_pde.ini", 25}}) {
        const Scenario root = scenario(file);
        std::vector<Trajectory> sols;
        for (int j = 0; j <= 5; ++j) {
            const Scenario sc = at_steps(root, base << j);
            const QviSolution s = fixed_point_solve(sc.problem, make_seed(sc, sc.seeds.front()));
            if (!s.converged) {
                ok = false;
                detail += file + fmt(": no convergence at K = %d; ", base << j);
                break;
            }
            sols.push_back(s.u);
        }
        if (sols.size() != 6) continue;
        std::vector<double> gaps;
        for (std::size_t j = 0; j + 1 < sols.size(); ++j) gaps.push_back(sup_h_gap_refined(sols[j], sols[j + 1], root.problem.metric));
        detail += file + ":";
        for (std::size_t j = 0; j < gaps.size(); ++j) {
            detail += fmt(" %.3g", gaps[j]);
            // An exact solution on every grid has nothing left to shrink.
            if (j > 0 && !(gaps[j] <= 0.9 * gaps[j - 1] || gaps[j] <= 1e-12)) ok = false;
        }
        detail += "; ";
    }
    return {ok, detail};
}

Verdict graph_probe() {
    const TimeGrid g(1.0, 200);
    StepMode reg;
    reg.kind = StepKind::DualityRegularized;
    const SweepParameter th = rotating(g, 1.0);
    const Vec u0{1.0, 0.0};
    const Trajectory force = Trajectory::constant(201, {0.0, -1.0});
    const Trajectory u = catching_up_solve(th, CircleSegment{}, ZeroOperator{}, Trajectory(201, 2), force, u0, reg, g, kPlane).u;
    std::vector<Parameter> seq;
    std::vector<Vec> starts;
    std::string detail;
    for (int n = 1; n <= 5; ++n) {
        // |a_n - a| and |a_n' - a'| both equal 2 sin(phi/2), so d_Theta is 2^{-n}.
        const double phi = 2.0 * std::asin(std::ldexp(1.0, -n) / (2.0 * std::sqrt(2.0)));
        const SweepParameter thn = rotating(g, 1.0, phi);
        detail += fmt("d=%.4g ", theta_distance(thn, th, g, 2.0));
        seq.push_back(thn);
        starts.push_back({std::cos(phi), std::sin(phi)});
    }
    const GraphProbe probe = graph_convergence_probe(th, u0, seq, starts, force, u, CircleSegment{}, reg, g, kPlane);
    bool ok = true;
    detail += "| gaps";
    for (std::size_t n = 0; n < probe.gaps.size(); ++n) {
        detail += fmt(" (%.3g, %.3g)", probe.gaps[n].sup_h, probe.gaps[n].lp_v);
        if (n > 0) {
            ok = ok && probe.gaps[n].sup_h <= 1.1 * probe.gaps[n - 1].sup_h && probe.gaps[n].lp_v <= 1.1 * probe.gaps[n - 1].lp_v;
        }
    }
    return {ok, detail};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("'") + PQVI_CLI + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict end_to_end() {
    const Clock clock;
    const fs::path root = fs::temp_directory_path() / "pqvi_acceptance";
    fs::remove_all(root);
    std::string detail;
    bool ok = true;
    for (const char* name : {"scalar_example", "sweep2d", "gradient_pde"}) {
        const std::string config = kConfigs + "/" + name + ".ini";
        const std::string out = (root / name).string();
        const int run = run_cli("run " + config + " --output-dir " + out);
        const int verify = run_cli("verify " + config + " " + out);
        ok = ok && run == 0 && verify == 0;
        detail += fmt("%s run=%d verify=%d; ", name, run, verify);
    }
    const double secs = clock.seconds();
    detail += fmt("%.1f s total", secs);
    return {ok && secs < 300.0, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"analytic fixed-point family", analytic_family},
        {"non-uniqueness", non_uniqueness},
        {"uniqueness for fixed theta", fixed_theta_uniqueness},
        {"contraction inequality", contraction},
        {"transformation gap suite", mosco_suite},
        {"feasibility everywhere", feasibility},
        {"heat feedback order", heat_order},
        {"p-Laplacian correctness", p_laplacian},
        {"refinement Cauchy property", refinement},
        {"graph-convergence probe", graph_probe},
        {"end-to-end CLI", end_to_end},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", index, name, v.detail.c_str());
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", index - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
