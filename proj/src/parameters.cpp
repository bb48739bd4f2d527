#include "pqvi/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pqvi/error.hpp"

namespace pqvi {

namespace {

[[noreturn]] void reject(const std::string& clause, int node) {
    throw Error(ErrorKind::InvalidArgument,
                "parameter rejected: " + clause + " violated at node " + std::to_string(node));
}

[[noreturn]] void reject(const std::string& clause) {
    throw Error(ErrorKind::InvalidArgument, "parameter rejected: " + clause);
}

}  // namespace

ScalarParameter ScalarParameter::x0_member(Vec z, double slope_bound, const TimeGrid& grid, double tol) {
    if (!(slope_bound > 0.0)) reject("slope bound c0 > 0");
    if (static_cast<int>(z.size()) != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, "scalar parameter path does not match the time grid");
    }
    if (std::abs(z[0] - 1.0) > tol) reject("z(0) = 1", 0);
    for (int k = 0; k + 1 < grid.nodes(); ++k) {
        const auto uk = static_cast<std::size_t>(k);
        if (!std::isfinite(z[uk + 1])) reject("finite path", k + 1);
        const double slope = (z[uk + 1] - z[uk]) / grid.tau();
        if (slope < -tol) reject("0 <= z' (nondecreasing path)", k);
        if (slope > slope_bound + tol) reject("z' <= c0", k);
    }
    return ScalarParameter{std::move(z), slope_bound, true};
}

ScalarParameter ScalarParameter::obstacle(Vec z) {
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (!std::isfinite(z[k])) reject("finite path", static_cast<int>(k));
    }
    return ScalarParameter{std::move(z), std::numeric_limits<double>::infinity(), false};
}

double SweepParameter::gamma_at(int k) const { return gamma(norm2(zeta.at(static_cast<std::size_t>(k)))); }

SweepParameter SweepParameter::make(std::vector<Vec2> a, std::vector<Vec2> zeta, PiecewiseLinear gamma,
                                    double gamma_lo, double gamma_hi, std::vector<double> probes) {
    if (a.size() != zeta.size() || a.empty()) reject("a and zeta sampled on the same grid");
    if (!(gamma_lo > 0.0 && gamma_lo < gamma_hi)) reject("0 < gamma_* < gamma^*");
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(norm2(a[k]) - 1.0) > 1e-10) reject("|a(t)| = 1", static_cast<int>(k));
        if (!std::isfinite(zeta[k][0]) || !std::isfinite(zeta[k][1])) reject("finite zeta", static_cast<int>(k));
    }
    // Piecewise-linear with constant extension: the knot values are the range.
    if (gamma.min_value() < gamma_lo) reject("gamma_* <= gamma");
    if (gamma.max_value() > gamma_hi) reject("gamma <= gamma^*");
    for (double r : probes) {
        const double g = gamma(r);
        if (g < gamma_lo || g > gamma_hi) reject("gamma_* <= gamma <= gamma^* on probes");
    }
    return SweepParameter{std::move(a), std::move(zeta), std::move(gamma), gamma_lo, gamma_hi, std::move(probes)};
}

double PdeParameter::gamma_at(int k, int node) const {
    return gamma(zeta.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(node)));
}

PdeParameter PdeParameter::make(PiecewiseLinear gamma, double eps0, std::vector<Vec> zeta,
                                std::vector<double> probes) {
    if (!(eps0 > 0.0)) reject("eps0 > 0");
    if (zeta.empty()) reject("zeta sampled on the time grid");
    if (gamma.min_value() < eps0) reject("gamma >= eps0");
    for (double r : probes) {
        if (gamma(r) < eps0) reject("gamma >= eps0 on probes");
    }
    for (std::size_t k = 0; k < zeta.size(); ++k) {
        if (zeta[k].size() != zeta.front().size()) reject("zeta fields of equal size", static_cast<int>(k));
        for (double v : zeta[k]) {
            if (!std::isfinite(v)) reject("finite zeta", static_cast<int>(k));
        }
    }
    return PdeParameter{std::move(gamma), eps0, std::move(zeta), std::move(probes)};
}

const char* variant_name(const Parameter& theta) {
    switch (theta.index()) {
        case 0: return "scalar";
        case 1: return "sweep";
        default: return "pde";
    }
}

int parameter_nodes(const Parameter& theta) {
    return std::visit(
        [](const auto& th) -> int {
            using T = std::decay_t<decltype(th)>;
            if constexpr (std::is_same_v<T, ScalarParameter>) return static_cast<int>(th.z.size());
            else if constexpr (std::is_same_v<T, SweepParameter>) return static_cast<int>(th.a.size());
            else return static_cast<int>(th.zeta.size());
        },
        theta);
}

double w1p_norm(const std::vector<Vec2>& path, const TimeGrid& grid, double p) {
    if (static_cast<int>(path.size()) != grid.nodes()) {
        throw Error(ErrorKind::DimensionMismatch, "path does not match the time grid");
    }
    const double tau = grid.tau();
    double s = 0.0;
    for (int k = 0; k < grid.steps(); ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const Vec2 dv{(path[uk + 1][0] - path[uk][0]) / tau, (path[uk + 1][1] - path[uk][1]) / tau};
        s += (std::pow(norm2(path[uk]), p) + std::pow(norm2(dv), p)) * tau;
    }
    return std::pow(s, 1.0 / p);
}

namespace {

double probe_sup(const PiecewiseLinear& g, const PiecewiseLinear& gb, const std::vector<double>& p1,
                 const std::vector<double>& p2) {
    double sup = PiecewiseLinear::sup_distance(g, gb);
    for (double r : p1) sup = std::max(sup, std::abs(g(r) - gb(r)));
    for (double r : p2) sup = std::max(sup, std::abs(g(r) - gb(r)));
    return sup;
}

// Radial profiles only matter on r >= 0.
double radial_sup(const PiecewiseLinear& g, const PiecewiseLinear& gb, const std::vector<double>& p1,
                  const std::vector<double>& p2) {
    double sup = std::abs(g(0.0) - gb(0.0));
    for (const auto* knots : {&g.knots(), &gb.knots(), &p1, &p2}) {
        for (double r : *knots) {
            if (r >= 0.0) sup = std::max(sup, std::abs(g(r) - gb(r)));
        }
    }
    return sup;
}


}  // namespace

double theta_distance(const Parameter& theta, const Parameter& theta_bar, const TimeGrid& grid, double p) {
    if (theta.index() != theta_bar.index()) {
        throw Error(ErrorKind::VariantMismatch, std::string("theta_distance: ") + variant_name(theta) +
                                                    " vs " + variant_name(theta_bar));
    }
    if (parameter_nodes(theta) != parameter_nodes(theta_bar)) {
        throw Error(ErrorKind::DimensionMismatch, "theta_distance: parameters on different grids");
    }
    if (const auto* s = std::get_if<ScalarParameter>(&theta)) {
        const auto& sb = std::get<ScalarParameter>(theta_bar);
        double sup = 0.0;
        for (std::size_t k = 0; k < s->z.size(); ++k) sup = std::max(sup, std::abs(s->z[k] - sb.z[k]));
        return sup;
    }
    if (const auto* s = std::get_if<SweepParameter>(&theta)) {
        const auto& sb = std::get<SweepParameter>(theta_bar);
        std::vector<Vec2> diff(s->a.size());
        double zsup = 0.0;
        for (std::size_t k = 0; k < diff.size(); ++k) {
            diff[k] = {s->a[k][0] - sb.a[k][0], s->a[k][1] - sb.a[k][1]};
            zsup = std::max(zsup, norm2({s->zeta[k][0] - sb.zeta[k][0], s->zeta[k][1] - sb.zeta[k][1]}));
        }
        // gamma is radial, so the sup over R^2 is the sup over radii >= 0.
        return w1p_norm(diff, grid, p) + radial_sup(s->gamma, sb.gamma, s->probes, sb.probes) + zsup;
    }
    const auto& s = std::get<PdeParameter>(theta);
    const auto& sb = std::get<PdeParameter>(theta_bar);
    double zsup = 0.0;
    for (std::size_t k = 0; k < s.zeta.size(); ++k) {
        if (s.zeta[k].size() != sb.zeta[k].size()) {
            throw Error(ErrorKind::DimensionMismatch, "theta_distance: zeta fields differ in size");
        }
        for (std::size_t i = 0; i < s.zeta[k].size(); ++i) {
            zsup = std::max(zsup, std::abs(s.zeta[k][i] - sb.zeta[k][i]));
        }
    }
    return probe_sup(s.gamma, sb.gamma, s.probes, sb.probes) + zsup;
}

}  // namespace pqvi
