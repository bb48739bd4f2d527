#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pqvi/bounded_difference.hpp"
#include "pqvi/constraints.hpp"
#include "pqvi/error.hpp"
#include "pqvi/evolution.hpp"
#include "pqvi/feedback.hpp"
#include "pqvi/qvi.hpp"
#include "pqvi/scenario.hpp"
#include "pqvi/semimonotone.hpp"

namespace py = pybind11;
using namespace pqvi;

namespace {

TimeGrid grid_of(double horizon, int steps) { return TimeGrid(horizon, steps); }

// Scalar obstacle problem: u' + dI_{[z(t), inf)}(u) ∋ f with u(0) = u0.
std::vector<double> solve_obstacle(const std::vector<double>& obstacle, double u0, const std::vector<double>& forcing,
                                   double horizon) {
    const TimeGrid grid(horizon, static_cast<int>(obstacle.size()) - 1);
    const SpaceMetric m = SpaceMetric::euclidean(1, 2.0);
    std::vector<Vec> f;
    for (double x : forcing) f.push_back({x});
    const Evolution ev = catching_up_solve(ScalarParameter::obstacle(obstacle), HalfLine{}, ZeroOperator{},
                                           Trajectory(grid.nodes(), 1), Trajectory(std::move(f)), {u0}, StepMode{},
                                           grid, m);
    std::vector<double> out;
    for (const Vec& z : ev.u.states()) out.push_back(z[0]);
    return out;
}

py::dict scalar_feedback(double slope_bound, const std::vector<double>& v, double horizon) {
    const TimeGrid grid(horizon, static_cast<int>(v.size()) - 1);
    std::vector<Vec> states;
    for (double x : v) states.push_back({x});
    const ScalarFeedback fb = lambda_scalar(ScalarProjection{slope_bound}, Trajectory(std::move(states)), grid);
    py::dict d;
    d["z"] = fb.theta.z;
    d["kkt_residual"] = fb.kkt_residual;
    return d;
}

py::dict scalar_qvi(double slope_bound, const std::vector<std::vector<double>>& seeds, int steps, double horizon,
                    double cluster_tol) {
    const TimeGrid grid(horizon, steps);
    QviProblem P{ScalarProjection{slope_bound},
                 ZeroOperator{},
                 HalfLine{},
                 Trajectory(grid.nodes(), 1),
                 {1.0},
                 grid,
                 SpaceMetric::euclidean(1, 2.0),
                 StepMode{},
                 FixedPointOptions{}};
    std::vector<Trajectory> seed_traj;
    for (const auto& s : seeds) {
        std::vector<Vec> st;
        for (double x : s) st.push_back({x});
        seed_traj.emplace_back(std::move(st));
    }
    py::list sols;
    Exploration ex;
    {
        py::gil_scoped_release release;
        ex = multi_seed_explore(P, seed_traj, cluster_tol);
    }
    for (const auto& s : ex.solutions) {
        std::vector<double> u;
        for (const Vec& z : s.u.states()) u.push_back(z[0]);
        py::dict d;
        d["u"] = u;
        d["converged"] = s.converged;
        d["history"] = s.history;
        sols.append(d);
    }
    py::dict out;
    out["solutions"] = sols;
    out["cluster_of"] = ex.cluster_of;
    out["representatives"] = ex.representatives;
    out["min_separation"] = ex.min_separation;
    return out;
}

std::vector<double> gradient_ball(const std::vector<double>& z, const std::vector<double>& edge_bounds, double mesh,
                                  double p, const std::string& method) {
    const SpaceMetric m = SpaceMetric::gradient(static_cast<int>(z.size()), mesh, p);
    if (method == "dykstra") return project_gradient_dykstra(z, edge_bounds, m, DykstraOptions{}).z;
    if (method != "exact") throw Error(ErrorKind::InvalidArgument, "method must be 'exact' or 'dykstra'");
    const std::size_t n = z.size();
    Vec lo(n - 1), hi(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        lo[i] = -edge_bounds[i];
        hi[i] = edge_bounds[i];
    }
    Vec node_lo(n, -std::numeric_limits<double>::infinity()), node_hi(n, std::numeric_limits<double>::infinity());
    node_lo.front() = node_hi.front() = node_lo.back() = node_hi.back() = 0.0;
    return solve_bounded_difference({z, Vec(n, mesh), lo, hi, node_lo, node_hi});
}

std::vector<double> p_laplacian(const std::vector<double>& u, double mesh, double p, double coefficient) {
    const SpaceMetric m = SpaceMetric::gradient(static_cast<int>(u.size()), mesh, p);
    const PLaplacian op = PLaplacian::make([coefficient](double, double, double) { return coefficient; }, p, mesh,
                                           coefficient, coefficient);
    return apply(op, u, u, 0.0, m);
}

py::tuple run_config(const std::string& config, std::optional<std::string> output_dir, std::optional<int> seed_count,
                     std::optional<std::string> checks) {
    std::ostringstream err;
    int code;
    {
        py::gil_scoped_release release;
        try {
            Scenario sc = load_scenario(config);
            if (checks) select_checks(sc, *checks);
            code = run_scenario(sc, RunOptions{output_dir, seed_count}, err);
        } catch (const Error& e) {
            err << e.what() << '\n';
            code = e.kind() == ErrorKind::Config ? kExitConfig : kExitSolver;
        }
    }
    return py::make_tuple(code, err.str());
}

py::tuple verify_config(const std::string& config, const std::string& dir, std::optional<std::string> checks) {
    std::ostringstream err;
    int code;
    try {
        Scenario sc = load_scenario(config);
        if (checks) select_checks(sc, *checks);
        code = verify_scenario(sc, dir, err);
    } catch (const Error& e) {
        err << e.what() << '\n';
        code = e.kind() == ErrorKind::Config ? kExitConfig : kExitSolver;
    }
    return py::make_tuple(code, err.str());
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Parabolic quasi-variational inequality solvers";

    static py::exception<Error> error(mod, "PqviError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error)(std::string(to_string(e.kind())) + ": " + e.what());
            exc.attr("kind") = to_string(e.kind());
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    py::class_<TimeGrid>(mod, "TimeGrid")
        .def(py::init(&grid_of), py::arg("horizon"), py::arg("steps"))
        .def_property_readonly("tau", &TimeGrid::tau)
        .def_property_readonly("steps", &TimeGrid::steps)
        .def_property_readonly("nodes", &TimeGrid::nodes)
        .def("t", &TimeGrid::t);

    mod.def("solve_obstacle", &solve_obstacle, py::arg("obstacle"), py::arg("u0"), py::arg("forcing"),
            py::arg("horizon") = 1.0, "Catching-up solve of the scalar obstacle problem; returns u at every node.");
    mod.def("scalar_feedback", &scalar_feedback, py::arg("slope_bound"), py::arg("v"), py::arg("horizon") = 1.0,
            "Bounded-slope isotonic projection of v through 1 at t = 0.");
    mod.def("scalar_qvi", &scalar_qvi, py::arg("slope_bound"), py::arg("seeds"), py::arg("steps"),
            py::arg("horizon") = 1.0, py::arg("cluster_tol") = 0.05,
            "Multi-seed Picard iteration for the scalar feedback problem.");
    mod.def("project_gradient_ball", &gradient_ball, py::arg("z"), py::arg("edge_bounds"), py::arg("mesh"),
            py::arg("p") = 2.0, py::arg("method") = "exact");
    mod.def("p_laplacian", &p_laplacian, py::arg("u"), py::arg("mesh"), py::arg("p"), py::arg("coefficient") = 1.0);
    mod.def("run", &run_config, py::arg("config"), py::arg("output_dir") = py::none(),
            py::arg("seed_count") = py::none(), py::arg("checks") = py::none(),
            "Same as `pqvi run`; returns (exit_code, diagnostics).");
    mod.def("verify", &verify_config, py::arg("config"), py::arg("dir"), py::arg("checks") = py::none());
    mod.attr("EXIT_OK") = static_cast<int>(kExitOk);
    mod.attr("EXIT_CONFIG") = static_cast<int>(kExitConfig);
    mod.attr("EXIT_SOLVER") = static_cast<int>(kExitSolver);
    mod.attr("EXIT_CHECK") = static_cast<int>(kExitCheck);
}
