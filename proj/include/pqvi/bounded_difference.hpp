#pragma once

#include "pqvi/spaces.hpp"

namespace pqvi {

/// min sum_i w_i (z_i - y_i)^2
/// s.t. diff_lo[i] <= z[i+1] - z[i] <= diff_hi[i],  node_lo[i] <= z[i] <= node_hi[i].
///
/// Difference bounds must be finite; node bounds may be infinite.
struct BoundedDifferenceProblem {
    Vec target;
    Vec weights;
    Vec diff_lo;
    Vec diff_hi;
    Vec node_lo;
    Vec node_hi;
};

/// Exact solver: forward dynamic programming over the derivative of the
/// cost-to-come (piecewise linear, nondecreasing), then backtracking.
/// O(n^2) time. Throws Error(Infeasible) when the constraints are empty.
Vec solve_bounded_difference(const BoundedDifferenceProblem& problem);

}  // namespace pqvi
