#include <doctest.h>

#include "oracles.hpp"
#include "pqvi/error.hpp"
#include "pqvi/feedback.hpp"

using namespace pqvi;

namespace {

const SpaceMetric kLine = SpaceMetric::euclidean(1, 2.0);
const SpaceMetric kPlane = SpaceMetric::euclidean(2, 2.0);

Trajectory scalar_path(const TimeGrid& g, const std::function<double(double)>& f) {
    return Trajectory::sample(g, [&](double t) { return Vec{f(t)}; });
}

Vec lambda_z(double c0, const Trajectory& v, const TimeGrid& g) { return lambda_scalar(ScalarProjection{c0}, v, g).theta.z; }

/// Dense QP oracle: min sum_k (z_k - v_k)^2 tau, z_0 = 1, 0 <= z_{k+1} - z_k <= c0 tau.
Vec scalar_oracle(const Vec& v, double c0, double tau) {
    const auto n = static_cast<Eigen::Index>(v.size());
    oracle::DenseQp qp;
    qp.target = oracle::to_eigen(v);
    qp.weights = Eigen::VectorXd::Constant(n, tau);
    qp.rows = Eigen::MatrixXd::Zero(n - 1, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        qp.rows(k, k) = -1.0;
        qp.rows(k, k + 1) = 1.0;
    }
    qp.lo = Eigen::VectorXd::Zero(n - 1);
    qp.hi = Eigen::VectorXd::Constant(n - 1, c0 * tau);
    qp.eq = Eigen::MatrixXd::Zero(1, n);
    qp.eq(0, 0) = 1.0;
    qp.eq_rhs = Eigen::VectorXd::Ones(1);
    return oracle::to_vec(oracle::brute_force_qp(qp));
}

SweepDynamics sweep_spec(std::function<Vec2(double, const Vec2&, const Vec2&)> field, PlanarSet region = HalfPlane{{1, 0}, 1.0},
                         Vec2 zeta0 = {1, 0}) {
    return SweepDynamics{std::move(field), 0.0, region, zeta0, PiecewiseLinear::constant(0.4), 0.25, 0.6, {}};
}

HeatRobin heat_spec(std::function<double(double, double, double)> source, double n0, Vec zeta0, double mesh) {
    return HeatRobin{std::move(source), n0, std::move(zeta0), mesh, PiecewiseLinear::constant(1.0), 0.2, {}, 1e-8};
}

/// Bump supported away from the ends, so the Robin data holds exactly.
Vec bump(int nodes, double mesh) {
    Vec z(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        const double x = i * mesh;
        z[static_cast<std::size_t>(i)] = std::max(0.0, 1.0 - 16.0 * (x - 0.5) * (x - 0.5));
    }
    return z;
}

}  // namespace

TEST_CASE("scalar feedback anchors") {
    const TimeGrid g(1.0, 1000);
    for (double c : {0.0, 0.25, 0.5, 1.0}) {
        const Trajectory v = scalar_path(g, [c](double t) { return 2.0 - std::exp(-c * t); });
        const Vec z = lambda_z(1.0, v, g);
        for (int k = 0; k <= 1000; ++k) CHECK(std::abs(z[static_cast<std::size_t>(k)] - v[k][0]) <= 1e-8);
    }
    const Vec ones = lambda_z(1.0, scalar_path(g, [](double) { return 1.0; }), g);
    for (double x : ones) CHECK(x == doctest::Approx(1.0));
    const Vec threes = lambda_z(1.0, scalar_path(g, [](double) { return 3.0; }), g);
    for (int k = 0; k <= 1000; ++k) CHECK(threes[static_cast<std::size_t>(k)] == doctest::Approx(1.0 + g.t(k)).epsilon(1e-12));
    const auto fb = lambda_scalar(ScalarProjection{1.0}, scalar_path(g, [](double t) { return std::sin(9 * t); }), g);
    CHECK(fb.kkt_residual <= 1e-9);
    CHECK(fb.theta.in_x0);
    CHECK_THROWS_AS(lambda_scalar(ScalarProjection{0.0}, scalar_path(g, [](double) { return 1.0; }), g), Error);
}

TEST_CASE("scalar feedback matches the dense QP oracle") {
    gen::Source src(107);
    const TimeGrid g(1.0, 6);
    for (int i = 0; i < 60; ++i) {
        const double c0 = src.uniform(0.2, 3.0);
        const Vec v = src.vec(7, -1.0, 3.0);
        std::vector<Vec> states;
        for (double x : v) states.push_back({x});
        const Vec z = lambda_z(c0, Trajectory(states), g);
        const Vec expect = scalar_oracle(v, c0, g.tau());
        REQUIRE(expect.size() == 7);
        for (std::size_t k = 0; k < 7; ++k) CHECK(std::abs(z[k] - expect[k]) <= 1e-9);
    }
}

TEST_CASE("property: scalar feedback variational inequality") {
    gen::Source src(109);
    const TimeGrid g(1.0, 40);
    const double tau = g.tau();
    for (int i = 0; i < 100; ++i) {
        const double c0 = src.uniform(0.3, 2.0);
        const Vec v = src.vec(41, -1.0, 3.0);
        std::vector<Vec> states;
        for (double x : v) states.push_back({x});
        const Vec z = lambda_z(c0, Trajectory(states), g);
        for (int j = 0; j < 50; ++j) {
            Vec w{1.0};
            for (int k = 0; k < 40; ++k) w.push_back(w.back() + src.uniform(0.0, c0 * tau));
            double s = 0.0;
            for (std::size_t k = 0; k < 41; ++k) s += (v[k] - z[k]) * (w[k] - z[k]) * tau;
            CHECK(s <= 1e-8);
        }
    }
}

TEST_CASE("sweep feedback anchors") {
    const TimeGrid g(1.0, 100);
    const Trajectory u(101, 2, 0.0);
    const SweepParameter idle = lambda_sweep(sweep_spec([](double, const Vec2&, const Vec2&) { return Vec2{0, 0}; }), u, g);
    for (int k = 0; k <= 100; ++k) {
        CHECK(idle.zeta[static_cast<std::size_t>(k)] == Vec2{1, 0});
        CHECK(idle.a[static_cast<std::size_t>(k)] == Vec2{1, 0});
    }
    const SweepParameter drift = lambda_sweep(sweep_spec([](double, const Vec2&, const Vec2&) { return Vec2{1, 0}; }), u, g);
    for (int k = 0; k <= 100; ++k) {
        CHECK(drift.zeta[static_cast<std::size_t>(k)][0] == doctest::Approx(1.0 + g.t(k)));
        CHECK(drift.zeta[static_cast<std::size_t>(k)][1] == 0.0);
        CHECK(drift.a[static_cast<std::size_t>(k)][0] == doctest::Approx(1.0));
    }
    const SweepParameter pinned = lambda_sweep(sweep_spec([](double, const Vec2&, const Vec2&) { return Vec2{-1, 0}; }), u, g);
    for (int k = 0; k <= 100; ++k) CHECK(pinned.zeta[static_cast<std::size_t>(k)] == Vec2{1, 0});
}

TEST_CASE("sweep memory is the left-rule running integral") {
    const TimeGrid g(1.0, 10);
    const Trajectory u = Trajectory::constant(11, {1.0, 0.0});
    const SweepParameter p =
        lambda_sweep(sweep_spec([](double, const Vec2& w, const Vec2&) { return Vec2{0, w[0]}; }), u, g);
    double expect = 0.0;
    for (int k = 0; k < 10; ++k) {
        // zeta_{k+1} = zeta_k + tau W_k with W_k = sum_{j<k} u_j tau = t_k.
        expect += g.tau() * g.t(k);
        CHECK(p.zeta[static_cast<std::size_t>(k + 1)][1] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("sweep feedback rejects bad regions") {
    const TimeGrid g(1.0, 4);
    const Trajectory u(5, 2);
    auto zero = [](double, const Vec2&, const Vec2&) { return Vec2{0, 0}; };
    CHECK_THROWS_AS(lambda_sweep(sweep_spec(zero, HalfPlane{{1, 0}, 1.0}, {0.5, 0}), u, g), Error);
    CHECK_THROWS_AS(lambda_sweep(sweep_spec(zero, Box{{-1, -1}, {1, 1}}, {0.5, 0}), u, g), Error);
}

TEST_CASE("property: sweep feedback stays in Y with unit directions") {
    gen::Source src(113);
    for (int i = 0; i < 50; ++i) {
        const TimeGrid g(1.0, 50);
        const double m1 = src.uniform(-3, 3), m2 = src.uniform(-3, 3), b1 = src.uniform(-2, 2), b2 = src.uniform(-2, 2);
        auto field = [=](double t, const Vec2& w, const Vec2& z) { return Vec2{m1 * w[1] + b1 * std::cos(5 * t), m2 * w[0] - z[1] + b2}; };
        const PlanarSet region = (i % 2) ? PlanarSet(HalfPlane{{0.6, 0.8}, 0.7}) : PlanarSet(Box{{0.5, -1.0}, {2.0, 1.5}});
        const Vec2 z0 = project(region, {1.0, 0.5});
        std::vector<Vec> states;
        for (int k = 0; k <= 50; ++k) states.push_back(src.vec(2, -2, 2));
        const SweepParameter p = lambda_sweep(sweep_spec(field, region, z0), Trajectory(states), g);
        for (std::size_t k = 0; k < p.a.size(); ++k) {
            CHECK(set_violation(region, p.zeta[k]) <= 1e-12);
            CHECK(std::abs(norm2(p.a[k]) - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("heat feedback anchors") {
    const TimeGrid g(1.0, 50);
    const double mesh = 1.0 / 32;
    const HeatRobin quiet = heat_spec([](double, double, double) { return 0.0; }, 1.0, Vec(33, 0.0), mesh);
    const PdeParameter z = lambda_pde(quiet, Trajectory(51, 33), g);
    for (const Vec& row : z.zeta) {
        for (double x : row) CHECK(x == 0.0);
    }

    const HeatRobin neumann = heat_spec([](double, double, double) { return 0.0; }, 0.0, bump(33, mesh), mesh);
    const PdeParameter c = lambda_pde(neumann, Trajectory(51, 33), g);
    const double mass0 = trapezoid_mass(c.zeta.front(), mesh);
    for (const Vec& row : c.zeta) CHECK(std::abs(trapezoid_mass(row, mesh) - mass0) <= 1e-10);
    CHECK(c.zeta.back()[0] > 0.0);  // it did diffuse
}

TEST_CASE("heat feedback rejects incompatible initial data") {
    const TimeGrid g(1.0, 4);
    Vec z0(9, 1.0);
    const HeatRobin spec = heat_spec([](double, double, double) { return 0.0; }, 1.0, z0, 0.125);
    CHECK(robin_compatibility_defect(z0, 0.125, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(lambda_pde(spec, Trajectory(5, 9), g), Error);
    CHECK(robin_compatibility_defect(z0, 0.125, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("heat scheme converges at first order in tau and second in mesh") {
    const double T = 0.5;
    auto run = [&](int cells, int steps) {
        const double mesh = 1.0 / cells;
        const TimeGrid g(T, steps);
        Vec z0(static_cast<std::size_t>(cells + 1));
        for (int i = 0; i <= cells; ++i) z0[static_cast<std::size_t>(i)] = std::cos(M_PI * i * mesh);
        const auto zeta = solve_heat_robin(z0, mesh, 0.0, g, [](double x, double t, int, int) {
            return (M_PI * M_PI - 1.0) * std::exp(-t) * std::cos(M_PI * x);
        });
        double err = 0.0;
        for (int k = 0; k <= steps; ++k) {
            for (int i = 0; i <= cells; ++i) {
                err = std::max(err, std::abs(zeta[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] -
                                             std::exp(-g.t(k)) * std::cos(M_PI * i * mesh)));
            }
        }
        return err;
    };
    const double e1 = run(8, 16), e2 = run(16, 64), e3 = run(32, 256);
    CHECK(e1 / e2 >= 3.5);
    CHECK(e1 / e2 <= 4.5);
    CHECK(e2 / e3 >= 3.5);
    CHECK(e2 / e3 <= 4.5);
}

TEST_CASE("property: heat feedback bound and maximum principle") {
    gen::Source src(127);
    for (int i = 0; i < 30; ++i) {
        const TimeGrid g(src.uniform(0.2, 2.0), 40);
        const double mesh = 1.0 / 24;
        const double gain = src.uniform(0, 3), n0 = src.uniform(0, 2);
        const HeatRobin spec = heat_spec([gain](double x, double, double u) { return gain * std::abs(u) * (1 + x); }, n0,
                                         Vec(25, 0.0), mesh);
        std::vector<Vec> states;
        for (int k = 0; k <= 40; ++k) states.push_back(src.vec(25, -1, 1));
        const PdeParameter p = lambda_pde(spec, Trajectory(states), g);
        double hsup = 0.0;
        for (int k = 0; k <= 40; ++k) {
            for (int j = 0; j < 25; ++j) hsup = std::max(hsup, gain * std::abs(states[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]) * (1 + j * mesh));
        }
        for (const Vec& row : p.zeta) {
            for (double x : row) {
                CHECK(x >= -1e-14);
                CHECK(x <= g.horizon() * hsup + 1e-12);
            }
        }
    }
}

TEST_CASE("continuity probes") {
    const TimeGrid g(1.0, 100);
    const Trajectory v = scalar_path(g, [](double t) { return 1.0 + 0.7 * t + 0.2 * std::sin(8 * t); });
    const FeedbackSpec scalar = ScalarProjection{1.0};
    CHECK(lambda_continuity_probe(scalar, {v, v}, v, g, kLine) == std::vector<double>{0.0, 0.0});
    std::vector<Trajectory> seq;
    for (int n = 1; n <= 6; ++n) seq.push_back(v + scalar_path(g, [n](double) { return std::ldexp(1.0, -n); }));
    const auto gaps = lambda_continuity_probe(scalar, seq, v, g, kLine);
    for (int n = 1; n <= 6; ++n) CHECK(gaps[static_cast<std::size_t>(n - 1)] <= std::ldexp(1.0, -n) + 1e-12);

    const FeedbackSpec sweep = sweep_spec([](double, const Vec2& w, const Vec2& z) { return Vec2{0.5 * w[1], 0.8 - 0.3 * z[1]}; });
    const Trajectory u = Trajectory::sample(g, [](double t) { return Vec{std::cos(t), std::sin(2 * t)}; });
    std::vector<Trajectory> useq;
    std::vector<double> sizes;
    for (int n = 1; n <= 5; ++n) {
        const double s = std::ldexp(1.0, -n);
        useq.push_back(u + Trajectory::sample(g, [s](double t) { return Vec{s * t, -s}; }));
        sizes.push_back(lp_h_norm(useq.back() - u, g, kPlane));
    }
    const auto sg = lambda_continuity_probe(sweep, useq, u, g, kPlane);
    const double c = sg[0] / sizes[0];
    for (std::size_t n = 1; n < sg.size(); ++n) {
        CHECK(sg[n] <= 1.1 * sg[n - 1]);
        CHECK(sg[n] <= 1.1 * c * sizes[n]);
    }
}
