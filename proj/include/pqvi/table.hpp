#pragma once

#include <vector>

namespace pqvi {

/// Piecewise-linear interpolant of sampled values with constant extension
/// past the end knots. Bounded and continuous with limits at +-infinity, so
/// it is a member of C_b(R); sup/inf and Lipschitz constant are exact.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> knots, std::vector<double> values);

    static PiecewiseLinear constant(double value);

    double operator()(double x) const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

    double min_value() const;
    double max_value() const;
    double lipschitz() const;

    /// sup_x |f(x) - g(x)|; exact because both are linear between the union
    /// of their knots and constant outside it.
    static double sup_distance(const PiecewiseLinear& f, const PiecewiseLinear& g);

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

}  // namespace pqvi
