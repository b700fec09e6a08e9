#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mvpt {

// Cost entries at or above this value (or non-finite) mark forbidden pairs.
inline constexpr double kForbiddenCost = 1e30;

// Minimum-cost one-to-one assignment (Hungarian algorithm, shortest
// augmenting paths with potentials, O(n^2 m)). The matrix may be
// rectangular. Returns, per row, the assigned column or -1 when the row is
// unassigned (more rows than columns, or only forbidden pairs left).
// Deterministic: ties are broken by index order.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace mvpt
