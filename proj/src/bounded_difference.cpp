#include "pqvi/bounded_difference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pqvi/error.hpp"

namespace pqvi {

namespace {

constexpr double kWall = 1e300;

struct Knot {
    double x;
    double d;
};

// Derivative of a convex piecewise-quadratic function on [front.x, back.x].
// The first and last knots are walls (d = -/+kWall) marking the domain ends;
// consecutive knots with equal x encode jumps.
using Derivative = std::vector<Knot>;

double add_finite(double d, double inc) { return std::abs(d) >= kWall ? d : d + inc; }

// Location where the derivative crosses zero, and the index of the first knot
// with d >= 0.
std::pair<double, std::size_t> crossing(const Derivative& f) {
    std::size_t j = 0;
    while (f[j].d < 0.0) ++j;
    const Knot& a = f[j - 1];
    const Knot& b = f[j];
    if (b.x == a.x || b.d == a.d) return {b.x, j};
    double m = a.x + (0.0 - a.d) * (b.x - a.x) / (b.d - a.d);
    m = std::clamp(m, a.x, b.x);
    return {m, j};
}

double eval_right(const Derivative& f, double x) {
    // right limit at x, x inside the open domain
    for (std::size_t j = 1; j < f.size(); ++j) {
        if (f[j].x > x) {
            const Knot& a = f[j - 1];
            const Knot& b = f[j];
            return a.d + (x - a.x) * (b.d - a.d) / (b.x - a.x);
        }
    }
    return f.back().d;
}

double eval_left(const Derivative& f, double x) {
    for (std::size_t j = f.size() - 1; j > 0; --j) {
        if (f[j - 1].x < x) {
            const Knot& a = f[j - 1];
            const Knot& b = f[j];
            return a.d + (x - a.x) * (b.d - a.d) / (b.x - a.x);
        }
    }
    return f.front().d;
}

Derivative clip(const Derivative& f, double lo, double hi, std::size_t node) {
    const double a = std::max(lo, f.front().x);
    const double b = std::min(hi, f.back().x);
    if (a > b) {
        throw Error(ErrorKind::Infeasible,
                    "bounded-difference constraints are empty at node " + std::to_string(node));
    }
    if (a == b) return {{a, -kWall}, {a, kWall}};
    Derivative out;
    out.reserve(f.size() + 4);
    out.push_back({a, -kWall});
    out.push_back({a, a > f.front().x ? eval_right(f, a) : f[1].d});
    for (std::size_t j = 1; j + 1 < f.size(); ++j) {
        if (f[j].x > a && f[j].x < b) out.push_back(f[j]);
    }
    out.push_back({b, b < f.back().x ? eval_left(f, b) : f[f.size() - 2].d});
    out.push_back({b, kWall});
    return out;
}

}  // namespace

Vec solve_bounded_difference(const BoundedDifferenceProblem& pr) {
    const std::size_t n = pr.target.size();
    if (n == 0) return {};
    if (pr.weights.size() != n || pr.node_lo.size() != n || pr.node_hi.size() != n ||
        pr.diff_lo.size() + 1 != n || pr.diff_hi.size() + 1 != n) {
        throw Error(ErrorKind::DimensionMismatch, "bounded-difference problem has inconsistent sizes");
    }

    // Every minimizer lies in [-R, R]; this keeps all domains finite.
    double radius = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        radius = std::max(radius, std::abs(pr.target[i]));
        if (std::isfinite(pr.node_lo[i])) radius = std::max(radius, std::abs(pr.node_lo[i]));
        if (std::isfinite(pr.node_hi[i])) radius = std::max(radius, std::abs(pr.node_hi[i]));
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!std::isfinite(pr.diff_lo[i]) || !std::isfinite(pr.diff_hi[i])) {
            throw Error(ErrorKind::InvalidArgument, "difference bounds must be finite");
        }
        if (pr.diff_lo[i] > pr.diff_hi[i]) {
            throw Error(ErrorKind::Infeasible, "difference bounds are crossed at edge " + std::to_string(i));
        }
        radius += std::max(std::abs(pr.diff_lo[i]), std::abs(pr.diff_hi[i]));
    }
    radius += 1.0;

    std::vector<double> argmins(n), dom_lo(n), dom_hi(n);
    Derivative f{{-radius, -kWall}, {-radius, 0.0}, {radius, 0.0}, {radius, kWall}};
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            // window minimum: G(z) = min { F(z') : z - hi <= z' <= z - lo }
            const double lo = pr.diff_lo[i - 1], hi = pr.diff_hi[i - 1];
            const auto [m, j] = crossing(f);
            Derivative g;
            g.reserve(f.size() + 2);
            for (std::size_t k = 0; k < j; ++k) g.push_back({f[k].x + lo, f[k].d});
            g.push_back({m + lo, 0.0});
            g.push_back({m + hi, 0.0});
            for (std::size_t k = j; k < f.size(); ++k) g.push_back({f[k].x + hi, f[k].d});
            f = std::move(g);
        } else {
            f = {{-radius, -kWall}, {-radius, 0.0}, {radius, 0.0}, {radius, kWall}};
        }
        const double w = pr.weights[i], y = pr.target[i];
        if (!(w > 0.0)) throw Error(ErrorKind::InvalidArgument, "weights must be positive");
        for (Knot& k : f) k.d = add_finite(k.d, 2.0 * w * (k.x - y));
        f = clip(f, std::max(pr.node_lo[i], -radius), std::min(pr.node_hi[i], radius), i);
        dom_lo[i] = f.front().x;
        dom_hi[i] = f.back().x;
        argmins[i] = crossing(f).first;
    }

    Vec z(n);
    z[n - 1] = argmins[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        const double lo = std::max(dom_lo[i], z[i + 1] - pr.diff_hi[i]);
        const double hi = std::min(dom_hi[i], z[i + 1] - pr.diff_lo[i]);
        z[i] = std::clamp(argmins[i], lo, std::max(lo, hi));
    }
    return z;
}

}  // namespace pqvi
