#include "pqvi/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "pqvi/error.hpp"

namespace pqvi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& text, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        config_error(where + ": '" + text + "' is not a number");
    }
    if (used != text.size()) config_error(where + ": '" + text + "' is not a number");
    return v;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Sectioned key-value file with a closed schema.
class Ini {
public:
    explicit Ini(const std::string& path) {
        std::ifstream in(path);
        if (!in) config_error("cannot read config file " + path);
        try {
            boost::property_tree::ini_parser::read_ini(in, tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            config_error(std::string("config parse error: ") + e.what());
        }
    }

    void allow(const std::string& section, std::initializer_list<const char*> keys) {
        for (const char* k : keys) allowed_[section].insert(k);
    }

    void reject_unknown() const {
        for (const auto& [section, body] : tree_) {
            auto it = allowed_.find(section);
            if (it == allowed_.end()) config_error("unknown section [" + section + "]");
            if (!body.data().empty() && body.empty()) config_error("key '" + section + "' outside any section");
            for (const auto& [key, value] : body) {
                if (!it->second.count(key)) config_error("unknown key '" + key + "' in [" + section + "]");
            }
        }
    }

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        auto s = tree_.get_child_optional(boost::property_tree::ptree::path_type(section, '\0'));
        if (!s) return std::nullopt;
        auto v = s->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    std::string str(const std::string& section, const std::string& key, const std::string& fallback) const {
        return raw(section, key).value_or(fallback);
    }

    double real(const std::string& section, const std::string& key, double fallback) const {
        auto v = raw(section, key);
        return v ? parse_double(*v, section + "." + key) : fallback;
    }

    int integer(const std::string& section, const std::string& key, int fallback) const {
        const double v = real(section, key, fallback);
        if (v != std::floor(v) || std::abs(v) > 1e9) config_error(section + "." + key + " must be an integer");
        return static_cast<int>(v);
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const {
        auto v = raw(section, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        config_error(section + "." + key + " must be true or false");
    }

    std::vector<double> list(const std::string& section, const std::string& key, std::vector<double> fallback,
                             std::size_t expected = 0) const {
        auto v = raw(section, key);
        std::vector<double> out;
        if (v) {
            for (const auto& item : split(*v, ',')) out.push_back(parse_double(item, section + "." + key));
        } else {
            out = std::move(fallback);
        }
        if (expected != 0 && out.size() != expected) {
            config_error(section + "." + key + " needs " + std::to_string(expected) + " values");
        }
        return out;
    }

    std::map<std::string, std::string> echo() const {
        std::map<std::string, std::string> out;
        for (const auto& [section, body] : tree_) {
            for (const auto& [key, value] : body) out[section + "." + key] = trim(value.data());
        }
        return out;
    }

private:
    boost::property_tree::ptree tree_;
    std::map<std::string, std::set<std::string>> allowed_;
};

PiecewiseLinear table(const Ini& ini, const std::string& section, const char* knots_key, const char* values_key,
                      std::vector<double> knots, std::vector<double> values) {
    try {
        return PiecewiseLinear(ini.list(section, knots_key, std::move(knots)),
                               ini.list(section, values_key, std::move(values)));
    } catch (const Error& e) {
        config_error("[" + section + "] table: " + e.what());
    }
}

Vec2 pair_of(const std::vector<double>& v) { return {v[0], v[1]}; }

double frobenius(const std::vector<double>& mat) {
    double s = 0.0;
    for (double x : mat) s += x * x;
    return std::sqrt(s);
}

void common_schema(Ini& ini) {
    ini.allow("scenario", {"name"});
    ini.allow("grid", {"horizon", "steps"});
    ini.allow("space", {"p"});
    ini.allow("solver", {"kind", "reg_weight", "tol_inner", "max_inner", "step", "inner_seed"});
    ini.allow("fixed_point", {"tol_fix", "max_outer", "damping", "oscillation_fallback"});
    ini.allow("explore", {"seeds", "cluster_tol", "min_clusters"});
    ini.allow("checks", {"enabled", "tol_weak", "tol_theta", "tol_fixed_point", "tol_energy", "family_size"});
    ini.allow("output", {"dir"});
    ini.allow("data", {"u0", "forcing"});
}

StepMode read_mode(const Ini& ini) {
    StepMode mode;
    const std::string kind = ini.str("solver", "kind", "plain");
    if (kind == "plain") mode.kind = StepKind::Plain;
    else if (kind == "regularized") mode.kind = StepKind::DualityRegularized;
    else config_error("solver.kind must be plain or regularized");
    mode.reg_weight = ini.real("solver", "reg_weight", 1.0);
    mode.tol_inner = ini.real("solver", "tol_inner", 1e-11);
    mode.max_inner = ini.integer("solver", "max_inner", 50000);
    mode.step = ini.real("solver", "step", 0.0);
    mode.inner_seed = static_cast<std::uint64_t>(ini.integer("solver", "inner_seed", 0));
    return mode;
}

FixedPointOptions read_fixed_point(const Ini& ini) {
    FixedPointOptions o;
    o.tol_fix = ini.real("fixed_point", "tol_fix", 1e-8);
    o.max_outer = ini.integer("fixed_point", "max_outer", 100);
    o.damping = ini.real("fixed_point", "damping", 1.0);
    o.oscillation_fallback = ini.boolean("fixed_point", "oscillation_fallback", true);
    return o;
}

Trajectory constant_forcing(const TimeGrid& grid, const Vec& value) { return Trajectory::constant(grid.nodes(), value); }

QviProblem scalar_problem(Ini& ini, const TimeGrid& grid, double p) {
    ini.allow("feedback", {"slope_bound"});
    ini.allow("constraint", {"offset"});
    ini.reject_unknown();
    const SpaceMetric m = SpaceMetric::euclidean(1, p);
    const double c0 = ini.real("feedback", "slope_bound", 1.0);
    if (!(c0 > 0.0)) config_error("feedback.slope_bound must be positive");
    return QviProblem{ScalarProjection{c0},
                      ZeroOperator{},
                      HalfLine{ini.real("constraint", "offset", 0.0)},
                      constant_forcing(grid, {ini.real("data", "forcing", 0.0)}),
                      {ini.real("data", "u0", 1.0)},
                      grid,
                      m,
                      read_mode(ini),
                      read_fixed_point(ini)};
}

QviProblem sweep_problem(Ini& ini, const TimeGrid& grid, double p) {
    ini.allow("feedback", {"region", "normal", "offset", "box_lo", "box_hi", "zeta0", "memory_gain", "zeta_gain",
                           "bias", "field_cap"});
    ini.allow("gamma", {"radii", "values", "lower", "upper", "probes"});
    ini.reject_unknown();
    const SpaceMetric m = SpaceMetric::euclidean(2, p);

    PlanarSet region;
    const std::string kind = ini.str("feedback", "region", "halfplane");
    if (kind == "halfplane") {
        const Vec2 n = pair_of(ini.list("feedback", "normal", {1.0, 0.0}, 2));
        const double len = norm2(n);
        if (!(len > 0.0)) config_error("feedback.normal must be nonzero");
        region = HalfPlane{{n[0] / len, n[1] / len}, ini.real("feedback", "offset", 1.0) / len};
    } else if (kind == "box") {
        const Vec2 lo = pair_of(ini.list("feedback", "box_lo", {}, 2));
        const Vec2 hi = pair_of(ini.list("feedback", "box_hi", {}, 2));
        if (!(lo[0] <= hi[0] && lo[1] <= hi[1])) config_error("feedback.box_lo must not exceed box_hi");
        region = Box{lo, hi};
    } else {
        config_error("feedback.region must be halfplane or box");
    }
    if (!(distance_to_origin(region) > 0.0)) config_error("feedback region Y must not contain the origin");

    const auto mw = ini.list("feedback", "memory_gain", {0.0, 0.0, 0.5, 0.0}, 4);
    const auto mz = ini.list("feedback", "zeta_gain", {0.0, 0.0, 0.0, 0.0}, 4);
    const Vec2 bias = pair_of(ini.list("feedback", "bias", {0.0, 0.8}, 2));
    const double cap = ini.real("feedback", "field_cap", kInf);
    if (!(cap > 0.0)) config_error("feedback.field_cap must be positive");
    auto field = [mw, mz, bias, cap](double, const Vec2& w, const Vec2& z) -> Vec2 {
        Vec2 g{mw[0] * w[0] + mw[1] * w[1] + mz[0] * z[0] + mz[1] * z[1] + bias[0],
               mw[2] * w[0] + mw[3] * w[1] + mz[2] * z[0] + mz[3] * z[1] + bias[1]};
        const double len = norm2(g);
        if (len > cap) g = {g[0] * cap / len, g[1] * cap / len};
        return g;
    };
    const Vec2 zeta0 = pair_of(ini.list("feedback", "zeta0", {1.0, 0.0}, 2));
    if (set_violation(region, zeta0) > 1e-12) config_error("feedback.zeta0 is not in Y");

    SweepDynamics spec{field,
                       frobenius(mw) + frobenius(mz),
                       region,
                       zeta0,
                       table(ini, "gamma", "radii", "values", {0.0, 2.0}, {0.5, 0.3}),
                       ini.real("gamma", "lower", 0.25),
                       ini.real("gamma", "upper", 0.6),
                       ini.list("gamma", "probes", {})};
    const auto u0 = ini.list("data", "u0", {zeta0[0] / norm2(zeta0), zeta0[1] / norm2(zeta0)}, 2);
    const auto f = ini.list("data", "forcing", {0.0, -1.0}, 2);
    return QviProblem{std::move(spec), ZeroOperator{}, CircleSegment{}, constant_forcing(grid, f), u0, grid, m,
                      read_mode(ini), read_fixed_point(ini)};
}

QviProblem pde_problem(Ini& ini, const TimeGrid& grid, double p) {
    ini.allow("grid", {"nodes", "length"});
    ini.allow("operator", {"v_knots", "a_values"});
    ini.allow("gamma", {"knots", "values", "eps0", "probes"});
    ini.allow("feedback", {"source_gain", "source_cap", "n0", "zeta0", "compat_tol"});
    ini.allow("constraint", {"method"});
    ini.reject_unknown();
    const int nodes = ini.integer("grid", "nodes", 65);
    if (nodes < 3) config_error("grid.nodes must be at least 3");
    const double length = ini.real("grid", "length", 1.0);
    if (!(length > 0.0)) config_error("grid.length must be positive");
    const double mesh = length / (nodes - 1);
    const SpaceMetric m = SpaceMetric::gradient(nodes, mesh, p);

    const PiecewiseLinear a_table = table(ini, "operator", "v_knots", "a_values", {0.0, 1.0}, {0.05, 0.02});
    if (!(a_table.min_value() > 0.0)) config_error("operator.a_values must be positive");
    const PiecewiseLinear gamma = table(ini, "gamma", "knots", "values", {0.0, 1.0}, {1.0, 0.3});
    const double eps0 = ini.real("gamma", "eps0", 0.2);
    const double gain = ini.real("feedback", "source_gain", 2.0);
    const double cap = ini.real("feedback", "source_cap", 1.0);
    if (!(cap >= 0.0)) config_error("feedback.source_cap must be >= 0");
    const double n0 = ini.real("feedback", "n0", 1.0);
    if (!(n0 >= 0.0)) config_error("feedback.n0 must be >= 0");
    HeatRobin spec{[gain, cap](double, double, double u) { return gain * std::min(std::abs(u), cap); },
                   n0,
                   Vec(static_cast<std::size_t>(nodes), ini.real("feedback", "zeta0", 0.0)),
                   mesh,
                   gamma,
                   eps0,
                   ini.list("gamma", "probes", {}),
                   ini.real("feedback", "compat_tol", 1e-8)};
    GradientBall ball;
    const std::string method = ini.str("constraint", "method", "exact");
    if (method == "dykstra") ball.method = BallMethod::Dykstra;
    else if (method != "exact") config_error("constraint.method must be exact or dykstra");

    Vec u0(static_cast<std::size_t>(nodes), ini.real("data", "u0", 0.0));
    u0.front() = u0.back() = 0.0;
    const Vec f(static_cast<std::size_t>(nodes), ini.real("data", "forcing", 2.0));
    return QviProblem{std::move(spec), PLaplacian::from_table(a_table, p, mesh), ball, constant_forcing(grid, f), u0,
                      grid, m, read_mode(ini), read_fixed_point(ini)};
}

}  // namespace

const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names{"obstacle_feasibility", "segment_feasibility", "gradient_feasibility",
                                                "fixed_point",          "theta_consistency",   "weak_residual",
                                                "energy",               "clusters",            "lambda_invariants"};
    return names;
}

std::string feasibility_check_name(const Scenario& scenario) {
    switch (scenario.problem.family.index()) {
        case 0: return "obstacle_feasibility";
        case 1: return "segment_feasibility";
        default: return "gradient_feasibility";
    }
}

void select_checks(Scenario& scenario, const std::string& selection) {
    std::set<std::string> chosen;
    const std::string sel = trim(selection);
    if (sel == "all") {
        chosen.insert(known_checks().begin(), known_checks().end());
    } else if (sel != "none") {
        for (const auto& name : split(sel, ',')) {
            if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end()) {
                config_error("unknown check '" + name + "'");
            }
            chosen.insert(name);
        }
    }
    scenario.checks.enabled = std::move(chosen);
}

Scenario load_scenario(const std::string& path) {
    Ini ini(path);
    common_schema(ini);
    Scenario sc{ini.str("scenario", "name", ""), QviProblem{ScalarProjection{1.0}, ZeroOperator{}, HalfLine{},
                                                           Trajectory(), {}, TimeGrid(1.0, 1),
                                                           SpaceMetric::euclidean(1, 2.0), {}, {}},
                {}, 0.05, {}, "", ini.echo()};
    try {
        const TimeGrid grid(ini.real("grid", "horizon", 1.0),
                            ini.integer("grid", "steps", sc.name == "scalar-example" ? 1000
                                                         : sc.name == "sweep2d"      ? 400
                                                                                     : 200));
        const double p = ini.real("space", "p", sc.name == "gradient-pde" ? 3.0 : 2.0);
        if (!(p >= 2.0) || !std::isfinite(p)) config_error("space.p must satisfy 2 <= p < infinity");
        if (sc.name == "scalar-example") sc.problem = scalar_problem(ini, grid, p);
        else if (sc.name == "sweep2d") sc.problem = sweep_problem(ini, grid, p);
        else if (sc.name == "gradient-pde") sc.problem = pde_problem(ini, grid, p);
        else config_error("scenario.name must be scalar-example, sweep2d or gradient-pde");
        sc.problem.mode.validate();
        sc.problem.options.validate();

        const std::string default_seeds = sc.name == "scalar-example" ? "const:1, decay:0.5, decay:1"
                                          : sc.name == "sweep2d"      ? "const:0, random:1, random:2"
                                                                      : "zero, random:1";
        sc.seeds = split(ini.str("explore", "seeds", default_seeds), ',');
        if (sc.seeds.empty()) config_error("explore.seeds must list at least one seed");
        sc.cluster_tol = ini.real("explore", "cluster_tol", 0.05);
        if (!(sc.cluster_tol > 0.0)) config_error("explore.cluster_tol must be positive");

        const double tau = grid.tau();
        sc.checks.tol_weak = ini.real("checks", "tol_weak", 10.0 * tau);
        sc.checks.tol_theta = ini.real("checks", "tol_theta", 1e-6);
        sc.checks.tol_fixed_point = ini.real("checks", "tol_fixed_point", 1e-6);
        sc.checks.tol_energy = ini.real("checks", "tol_energy", 10.0 * tau);
        sc.checks.family_size = ini.integer("checks", "family_size", 20);
        sc.checks.min_clusters = ini.integer("explore", "min_clusters", 1);
        if (sc.checks.family_size < 1) config_error("checks.family_size must be positive");
        select_checks(sc, ini.str("checks", "enabled", "all"));
        sc.output_dir = ini.str("output", "dir", "out/" + sc.name);

        for (const auto& s : sc.seeds) make_seed(sc, s);
        // (Lambda1): every Lambda(v) starts from the configured initial
        // feedback state, so u0 can be checked against K(Lambda(v); 0) now.
        const Trajectory probe = Trajectory::constant(grid.nodes(), sc.problem.u0);
        const Parameter theta = lambda_apply(sc.problem.feedback, probe, grid, sc.problem.metric);
        const double v0 = max_violation(sc.problem.family, theta, 0, sc.problem.u0, sc.problem.metric);
        if (v0 > 1e-6) config_error("data.u0 lies outside K(theta; 0) by " + fmt(v0));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        config_error(e.what());
    }
    return sc;
}

Trajectory make_seed(const Scenario& sc, const std::string& spec) {
    const TimeGrid& grid = sc.problem.grid;
    const auto dim = static_cast<std::size_t>(sc.problem.metric.dim());
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "zero") return Trajectory(grid.nodes(), static_cast<int>(dim), 0.0);
    if (kind == "const") return Trajectory(grid.nodes(), static_cast<int>(dim), parse_double(arg, "seed " + spec));
    if (kind == "decay") {
        if (sc.name != "scalar-example") config_error("seed " + spec + ": decay seeds are scalar-only");
        const double c = parse_double(arg, "seed " + spec);
        return Trajectory::sample(grid, [c](double t) { return Vec{2.0 - std::exp(-c * t)}; });
    }
    if (kind == "random") {
        const double s = parse_double(arg, "seed " + spec);
        if (s < 0.0 || s != std::floor(s)) config_error("seed " + spec + ": random seeds take an integer");
        std::mt19937_64 rng(static_cast<std::uint64_t>(s));
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        const double T = grid.horizon();
        if (sc.name == "gradient-pde") {
            const double c1 = unif(rng), c2 = unif(rng), c3 = unif(rng);
            return Trajectory::sample(grid, [&](double t) {
                Vec z(dim);
                for (std::size_t i = 0; i < dim; ++i) {
                    const double x = std::numbers::pi * static_cast<double>(i) / static_cast<double>(dim - 1);
                    z[i] = 0.3 * (t / T) * (c1 * std::sin(x) + c2 * std::sin(2 * x) + c3 * std::sin(3 * x));
                }
                return z;
            });
        }
        Vec base = sc.problem.u0;
        Vec amp(dim), freq(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            amp[i] = 0.3 * unif(rng);
            freq[i] = 1.0 + std::floor(2.0 * (unif(rng) + 1.0));
        }
        return Trajectory::sample(grid, [&](double t) {
            Vec z = base;
            for (std::size_t i = 0; i < dim; ++i) z[i] += amp[i] * std::sin(std::numbers::pi * freq[i] * t / T);
            return z;
        });
    }
    config_error("unknown seed '" + spec + "' (use zero, const:c, decay:c or random:n)");
}

namespace {

// ---------------------------------------------------------------- CSV I/O

std::vector<std::string> u_header(const Scenario& sc) {
    std::vector<std::string> h{"t"};
    if (sc.name == "scalar-example") h.push_back("u");
    else if (sc.name == "sweep2d") h.insert(h.end(), {"u_x", "u_y"});
    else {
        for (int i = 0; i < sc.problem.metric.dim(); ++i) h.push_back("u_" + std::to_string(i));
    }
    return h;
}

std::vector<std::string> theta_header(const Scenario& sc) {
    std::vector<std::string> h{"t"};
    if (sc.name == "scalar-example") h.push_back("z");
    else if (sc.name == "sweep2d") h.insert(h.end(), {"a_x", "a_y", "zeta_x", "zeta_y", "gamma"});
    else {
        for (int i = 0; i < sc.problem.metric.dim(); ++i) h.push_back("zeta_" + std::to_string(i));
    }
    return h;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const std::vector<Vec>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const Vec& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt(r[i]);
        out << '\n';
    }
}

// Rows without the time column; the time column must match the grid.
std::vector<Vec> read_csv(const fs::path& path, const std::vector<std::string>& header, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) config_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) config_error(path.string() + " is empty");
    const auto got = split(line, ',');
    if (got != header) {
        config_error(path.string() + ": header has " + std::to_string(got.size()) + " columns, expected " +
                     std::to_string(header.size()) + " (" + header.front() + "," + header[1] + ",...)");
    }
    std::vector<Vec> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            config_error(path.string() + ": row " + std::to_string(rows.size()) + " has the wrong column count");
        }
        Vec row;
        for (std::size_t i = 0; i < cells.size(); ++i) row.push_back(parse_double(cells[i], path.string()));
        const auto k = static_cast<int>(rows.size());
        if (k >= grid.nodes() || std::abs(row[0] - grid.t(k)) > 1e-12 * (1.0 + grid.horizon())) {
            config_error(path.string() + ": time column does not match the configured grid at row " +
                         std::to_string(k));
        }
        row.erase(row.begin());
        rows.push_back(std::move(row));
    }
    if (static_cast<int>(rows.size()) != grid.nodes()) {
        config_error(path.string() + ": " + std::to_string(rows.size()) + " rows, grid has " +
                     std::to_string(grid.nodes()) + " nodes");
    }
    return rows;
}

std::vector<Vec> u_rows(const Trajectory& u) { return u.states(); }

std::vector<Vec> with_time(const std::vector<Vec>& rows, const TimeGrid& grid) {
    std::vector<Vec> out;
    for (int k = 0; k < grid.nodes(); ++k) {
        Vec r{grid.t(k)};
        r.insert(r.end(), rows[static_cast<std::size_t>(k)].begin(), rows[static_cast<std::size_t>(k)].end());
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Vec> theta_rows(const Parameter& theta) {
    std::vector<Vec> rows;
    if (const auto* s = std::get_if<ScalarParameter>(&theta)) {
        for (double z : s->z) rows.push_back({z});
    } else if (const auto* w = std::get_if<SweepParameter>(&theta)) {
        for (std::size_t k = 0; k < w->a.size(); ++k) {
            rows.push_back({w->a[k][0], w->a[k][1], w->zeta[k][0], w->zeta[k][1], w->gamma_at(static_cast<int>(k))});
        }
    } else {
        for (const Vec& z : std::get<PdeParameter>(theta).zeta) rows.push_back(z);
    }
    return rows;
}

Parameter theta_from_rows(const Scenario& sc, const std::vector<Vec>& rows) {
    try {
        if (sc.name == "scalar-example") {
            Vec z;
            for (const Vec& r : rows) z.push_back(r[0]);
            return ScalarParameter::obstacle(std::move(z));
        }
        if (sc.name == "sweep2d") {
            const auto& spec = std::get<SweepDynamics>(sc.problem.feedback);
            std::vector<Vec2> a, zeta;
            for (const Vec& r : rows) {
                a.push_back({r[0], r[1]});
                zeta.push_back({r[2], r[3]});
            }
            return SweepParameter::make(std::move(a), std::move(zeta), spec.gamma, spec.gamma_lo, spec.gamma_hi,
                                        spec.probes);
        }
        const auto& spec = std::get<HeatRobin>(sc.problem.feedback);
        return PdeParameter::make(spec.gamma, spec.eps0, rows, spec.probes);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, std::string("theta.csv: ") + e.what());
    }
}

// ---------------------------------------------------------------- checks

CheckOutcome make_outcome(const std::string& name, bool pass, std::string message,
                          std::map<std::string, double> values = {}) {
    return CheckOutcome{name, pass, std::move(message), std::move(values)};
}

CheckOutcome lambda_invariants(const Scenario& sc, const Trajectory& u, const Parameter& theta) {
    const QviProblem& P = sc.problem;
    const TimeGrid& grid = P.grid;
    const SpaceMetric& m = P.metric;
    const double u0_violation = max_violation(P.family, theta, 0, P.u0, m);
    std::map<std::string, double> values{{"u0_violation", u0_violation}};
    bool pass = u0_violation <= kFeasibilityTol;
    std::string message = pass ? "" : "u0 is outside K(theta; 0) by " + fmt(u0_violation);
    auto fail = [&](const std::string& why) {
        pass = false;
        if (message.empty()) message = why;
    };
    if (const auto* spec = std::get_if<ScalarProjection>(&P.feedback)) {
        try {
            ScalarParameter::x0_member(std::get<ScalarParameter>(theta).z, spec->slope_bound, grid);
        } catch (const Error& e) {
            fail(e.what());
        }
        const double kkt = lambda_scalar(*spec, u, grid).kkt_residual;
        values["kkt_residual"] = kkt;
        if (kkt > 1e-9) fail("projection KKT residual " + fmt(kkt) + " exceeds 1e-9");
    } else if (const auto* sweep = std::get_if<SweepDynamics>(&P.feedback)) {
        const auto& th = std::get<SweepParameter>(theta);
        double region = 0.0, unit = 0.0;
        for (std::size_t k = 0; k < th.a.size(); ++k) {
            region = std::max(region, set_violation(sweep->region, th.zeta[k]));
            unit = std::max(unit, std::abs(norm2(th.a[k]) - 1.0));
        }
        values["zeta_outside_region"] = region;
        values["unit_defect"] = unit;
        if (region > 1e-12) fail("zeta leaves Y by " + fmt(region));
        if (unit > 1e-12) fail("|a| deviates from 1 by " + fmt(unit));
    } else {
        const auto& heat = std::get<HeatRobin>(P.feedback);
        const auto& th = std::get<PdeParameter>(theta);
        double zsup = 0.0, z0sup = 0.0, hsup = 0.0;
        for (double z : heat.zeta0) z0sup = std::max(z0sup, std::abs(z));
        for (const Vec& z : th.zeta) {
            for (double x : z) zsup = std::max(zsup, std::abs(x));
        }
        for (int k = 0; k < grid.nodes(); ++k) {
            for (int i = 0; i < m.dim(); ++i) {
                hsup = std::max(hsup, std::abs(heat.source(i * heat.mesh, grid.t(k), u[k][static_cast<std::size_t>(i)])));
            }
        }
        const double bound = z0sup + grid.horizon() * hsup;
        const double compat = robin_compatibility_defect(heat.zeta0, heat.mesh, heat.n0);
        values["zeta_sup"] = zsup;
        values["zeta_bound"] = bound;
        values["robin_defect"] = compat;
        if (zsup > bound * (1.0 + 1e-12) + 1e-14) fail("sup |zeta| exceeds |zeta0| + T sup|h|");
        if (compat > heat.compat_tol) fail("zeta0 violates the Robin compatibility by " + fmt(compat));
    }
    return make_outcome("lambda_invariants", pass, message, values);
}

}  // namespace

std::vector<CheckOutcome> evaluate_checks(const Scenario& sc, const Trajectory& u, const Parameter& theta,
                                          const std::vector<Trajectory>& seed_solutions) {
    const QviProblem& P = sc.problem;
    const TimeGrid& grid = P.grid;
    const SpaceMetric& m = P.metric;
    const auto& on = sc.checks.enabled;
    std::vector<CheckOutcome> out;

    const std::string feas = feasibility_check_name(sc);
    if (on.count(feas)) {
        const auto [viol, node] = trajectory_violation(u, theta, P.family, m, 1);
        const bool pass = viol <= kFeasibilityTol;
        out.push_back(make_outcome(feas, pass,
                                   pass ? "" : "node " + std::to_string(node) + " violates K(theta; t) by " + fmt(viol),
                                   {{"max_violation", viol}, {"worst_node", node}}));
    }
    auto guarded = [&](const std::string& name, const std::function<CheckOutcome()>& body) {
        if (!on.count(name)) return;
        try {
            out.push_back(body());
        } catch (const Error& e) {
            out.push_back(make_outcome(name, false, e.what()));
        }
    };
    guarded("fixed_point", [&] {
        const Parameter next = lambda_apply(P.feedback, u, grid, m);
        const Trajectory su = catching_up_solve(next, P.family, P.op, u, P.f, P.u0, P.mode, grid, m).u;
        const double gap = lp_h_norm(su - u, grid, m, Quadrature::Right);
        const bool pass = gap <= sc.checks.tol_fixed_point;
        return make_outcome("fixed_point", pass, pass ? "" : "one Picard step moves u by " + fmt(gap),
                            {{"gap", gap}, {"tolerance", sc.checks.tol_fixed_point}});
    });
    guarded("theta_consistency", [&] {
        const double d = theta_distance(lambda_apply(P.feedback, u, grid, m), theta, grid, m.p());
        const bool pass = d <= sc.checks.tol_theta;
        return make_outcome("theta_consistency", pass, pass ? "" : "d(Lambda u, theta) = " + fmt(d),
                            {{"distance", d}, {"tolerance", sc.checks.tol_theta}});
    });
    guarded("weak_residual", [&] {
        const Trajectory g = P.f - apply_trajectory(P.op, u, u, grid, m);
        const auto tests = standard_test_family(u, theta, P.family, grid, m, sc.checks.family_size, 11);
        const auto rep = weak_residual(u, g, theta, P.family, tests, grid, m);
        const bool pass = rep.worst <= sc.checks.tol_weak;
        return make_outcome("weak_residual", pass,
                            pass ? "" : "test trajectory " + std::to_string(rep.worst_index) + " gives " + fmt(rep.worst),
                            {{"worst", rep.worst},
                             {"worst_index", rep.worst_index},
                             {"family_size", static_cast<double>(tests.size())},
                             {"tolerance", sc.checks.tol_weak}});
    });
    guarded("energy", [&] {
        const Trajectory alpha = apply_trajectory(P.op, u, u, grid, m);
        const auto e = energy_check(u, alpha, P.f, theta, P.family, grid, m);
        if (!e) return make_outcome("energy", true, "not applicable: 0 is not in K(theta; t)", {{"applicable", 0.0}});
        const bool pass = *e <= sc.checks.tol_energy;
        return make_outcome("energy", pass, pass ? "" : "energy margin " + fmt(*e),
                            {{"applicable", 1.0}, {"margin", *e}, {"tolerance", sc.checks.tol_energy}});
    });
    guarded("clusters", [&] {
        const Clustering c = cluster_trajectories(seed_solutions, {}, sc.cluster_tol);
        const auto count = static_cast<int>(c.representatives.size());
        const bool pass = count >= sc.checks.min_clusters;
        return make_outcome("clusters", pass,
                            pass ? "" : std::to_string(count) + " clusters, expected at least " +
                                            std::to_string(sc.checks.min_clusters),
                            {{"count", count},
                             {"solutions", static_cast<double>(seed_solutions.size())},
                             {"min_separation", c.min_separation},
                             {"cluster_tol", sc.cluster_tol}});
    });
    guarded("lambda_invariants", [&] { return lambda_invariants(sc, u, theta); });
    return out;
}

namespace {

json checks_json(const std::vector<CheckOutcome>& outcomes) {
    json j = json::object();
    for (const auto& c : outcomes) {
        json entry{{"pass", c.pass}};
        if (!c.message.empty()) entry["message"] = c.message;
        for (const auto& [k, v] : c.values) entry[k] = num(v);
        j[c.name] = entry;
    }
    return j;
}

int report_outcomes(const std::vector<CheckOutcome>& outcomes, std::ostream& err) {
    bool ok = true;
    for (const auto& c : outcomes) {
        if (!c.pass) {
            ok = false;
            err << "check " << c.name << " failed: " << c.message << '\n';
        }
    }
    return ok ? kExitOk : kExitCheck;
}

json diagnostics(const Scenario& sc, const QviSolution& sol) {
    const QviProblem& P = sc.problem;
    const TimeGrid& grid = P.grid;
    const SpaceMetric& m = P.metric;
    json d;
    // Transformation constants between theta and the feedback of a nearby trajectory.
    try {
        const Trajectory near = 0.95 * sol.u + 0.05 * Trajectory::constant(grid.nodes(), P.u0);
        const Parameter theta_bar = lambda_apply(P.feedback, near, grid, m);
        std::vector<Vec> eta(static_cast<std::size_t>(grid.nodes()));
        for (int k = 0; k < grid.nodes(); ++k) {
            eta[static_cast<std::size_t>(k)] = project(P.family, sol.theta, k, sol.u[k], m);
        }
        const double eps = 0.1;
        const MoscoReport r = mosco_gap(TransformationMap{}, P.family, sol.theta, theta_bar, eps,
                                        Trajectory(std::move(eta)), grid, m);
        d["transform"] = {{"eps", eps},
                          {"distance", num(r.constants.distance)},
                          {"admissible_radius", num(admissible_radius(TransformationMap{}, P.family, sol.theta, eps))},
                          {"r0", num(r.constants.r0)},
                          {"sigma0", num(r.constants.sigma0)},
                          {"rho", num(r.constants.rho)},
                          {"mosco_gap", num(r.gap)},
                          {"mosco_bound", num(r.bound)}};
    } catch (const Error& e) {
        d["transform"] = {{"error", e.what()}};
    }
    const auto [a1, a2] = growth_constants(P.op, m);
    ProbeOptions probe;
    probe.samples = 20;
    const CoercivityReport co = coercivity_probe(P.op, sol.u, grid, m, probe);
    d["operator"] = {{"name", operator_name(P.op)},
                     {"a1", num(a1)},
                     {"a2", num(a2)},
                     {"a3", num(co.a3)},
                     {"a4", num(co.a4)},
                     {"coercivity_margin", num(co.worst_margin)}};
    d["embedding_constant"] = num(m.embedding_constant());
    return d;
}

json solution_json(const QviSolution& s) {
    json hist = json::array();
    for (double g : s.history) hist.push_back(num(g));
    return {{"converged", s.converged}, {"outer_iterations", s.history.size()}, {"history", hist}, {"damping", s.damping}};
}

}  // namespace

int run_scenario(Scenario& sc, const RunOptions& options, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = options.output_dir.value_or(sc.output_dir);
    std::vector<std::string> seeds = sc.seeds;
    if (options.seed_count) {
        const int n = *options.seed_count;
        if (n < 1) {
            err << "config error: --seed-count must be positive\n";
            return kExitConfig;
        }
        seeds.resize(static_cast<std::size_t>(std::min<int>(n, static_cast<int>(seeds.size()))));
        for (int i = 1; static_cast<int>(seeds.size()) < n; ++i) seeds.push_back("random:" + std::to_string(100 + i));
    }
    std::vector<Trajectory> seed_traj;
    try {
        for (const auto& s : seeds) seed_traj.push_back(make_seed(sc, s));
        fs::create_directories(dir);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::vector<QviSolution> solutions;
    try {
        if (seed_traj.size() >= 2) {
            solutions = multi_seed_explore(sc.problem, seed_traj, sc.cluster_tol).solutions;
        } else {
            solutions.push_back(fixed_point_solve(sc.problem, seed_traj.front()));
        }
    } catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    }
    const auto primary_it =
        std::find_if(solutions.begin(), solutions.end(), [](const QviSolution& s) { return s.converged; });
    const QviSolution& primary = primary_it != solutions.end() ? *primary_it : solutions.front();
    const int primary_index = static_cast<int>(&primary - solutions.data());

    std::vector<Trajectory> converged;
    json seeds_json = json::array();
    try {
        write_csv(dir / "u.csv", u_header(sc), with_time(u_rows(primary.u), sc.problem.grid));
        write_csv(dir / "theta.csv", theta_header(sc), with_time(theta_rows(primary.theta), sc.problem.grid));
        for (const auto& old : fs::directory_iterator(dir)) {
            const std::string name = old.path().filename().string();
            if (name.rfind("u_seed", 0) == 0 && old.path().extension() == ".csv") fs::remove(old.path());
        }
        for (std::size_t i = 0; i < solutions.size(); ++i) {
            json sj = solution_json(solutions[i]);
            sj["seed"] = seeds[i];
            if (solutions[i].converged) {
                const std::string file = "u_seed" + std::to_string(i) + ".csv";
                write_csv(dir / file, u_header(sc), with_time(u_rows(solutions[i].u), sc.problem.grid));
                converged.push_back(solutions[i].u);
                sj["file"] = file;
            }
            seeds_json.push_back(sj);
        }
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const auto outcomes = evaluate_checks(sc, primary.u, primary.theta, converged);
    const Clustering clusters = cluster_trajectories(converged, {}, sc.cluster_tol);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json report;
    report["scenario"] = sc.name;
    report["primary_seed"] = primary_index;
    report["solution"] = solution_json(primary);
    report["grid"] = {{"horizon", sc.problem.grid.horizon()},
                      {"steps", sc.problem.grid.steps()},
                      {"tau", sc.problem.grid.tau()},
                      {"dimension", sc.problem.metric.dim()},
                      {"p", sc.problem.metric.p()}};
    report["checks"] = checks_json(outcomes);
    report["diagnostics"] = diagnostics(sc, primary);
    json cluster_json = {{"count", clusters.representatives.size()},
                         {"cluster_tol", sc.cluster_tol},
                         {"min_separation", num(clusters.min_separation)},
                         {"assignment", clusters.cluster_of},
                         {"seeds", seeds_json}};
    report["clusters"] = cluster_json;
    report["test_family"] = {{"size", sc.checks.family_size},
                             {"members", "u, projected constants, obstacle-following paths, seeded smooth perturbations"}};
    report["runtime_seconds"] = seconds;

    json meta;
    meta["config"] = sc.echo;
    meta["versions"] = {{"pqvi", "0.1.0"},
                        {"compiler", __VERSION__},
                        {"cxx_standard", static_cast<long>(__cplusplus)},
                        {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    meta["seeds"] = seeds;
    std::ofstream(dir / "report.json") << report.dump(2) << '\n';
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
    return report_outcomes(outcomes, err);
}

int verify_scenario(const Scenario& sc, const std::string& dir_text, std::ostream& err) {
    const fs::path dir = dir_text;
    Trajectory u;
    Parameter theta;
    std::vector<Trajectory> seeds;
    try {
        u = Trajectory(read_csv(dir / "u.csv", u_header(sc), sc.problem.grid));
        theta = theta_from_rows(sc, read_csv(dir / "theta.csv", theta_header(sc), sc.problem.grid));
        std::vector<std::pair<int, fs::path>> files;
        if (fs::exists(dir)) {
            for (const auto& e : fs::directory_iterator(dir)) {
                const std::string name = e.path().filename().string();
                if (name.rfind("u_seed", 0) == 0 && e.path().extension() == ".csv") {
                    files.emplace_back(std::stoi(name.substr(6)), e.path());
                }
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& [i, path] : files) seeds.emplace_back(read_csv(path, u_header(sc), sc.problem.grid));
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return report_outcomes(evaluate_checks(sc, u, theta, seeds), err);
}

}  // namespace pqvi
