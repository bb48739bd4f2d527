#include "pqvi/table.hpp"

#include <algorithm>
#include <cmath>

#include "pqvi/error.hpp"

namespace pqvi {

PiecewiseLinear::PiecewiseLinear(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.empty() || knots_.size() != values_.size()) {
        throw Error(ErrorKind::InvalidArgument,
                    "piecewise-linear table needs matching, non-empty knots and values");
    }
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i])) {
            throw Error(ErrorKind::InvalidArgument, "piecewise-linear table has a non-finite entry");
        }
        if (i > 0 && !(knots_[i] > knots_[i - 1])) {
            throw Error(ErrorKind::InvalidArgument,
                        "piecewise-linear knots must be strictly increasing");
        }
    }
}

PiecewiseLinear PiecewiseLinear::constant(double value) { return PiecewiseLinear({0.0}, {value}); }

double PiecewiseLinear::operator()(double x) const {
    if (x <= knots_.front()) return values_.front();
    if (x >= knots_.back()) return values_.back();
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    const auto j = static_cast<std::size_t>(it - knots_.begin());
    const double x0 = knots_[j - 1], x1 = knots_[j];
    const double s = (x - x0) / (x1 - x0);
    return values_[j - 1] + s * (values_[j] - values_[j - 1]);
}

double PiecewiseLinear::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

double PiecewiseLinear::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

double PiecewiseLinear::lipschitz() const {
    double lip = 0.0;
    for (std::size_t j = 1; j < knots_.size(); ++j) {
        lip = std::max(lip, std::abs(values_[j] - values_[j - 1]) / (knots_[j] - knots_[j - 1]));
    }
    return lip;
}

double PiecewiseLinear::sup_distance(const PiecewiseLinear& f, const PiecewiseLinear& g) {
    std::vector<double> xs = f.knots_;
    xs.insert(xs.end(), g.knots_.begin(), g.knots_.end());
    double sup = 0.0;
    for (double x : xs) sup = std::max(sup, std::abs(f(x) - g(x)));
    return sup;
}

}  // namespace pqvi
