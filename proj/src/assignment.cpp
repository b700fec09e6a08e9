#include "mvpt/assignment.hpp"

#include <cmath>
#include <limits>

namespace mvpt {

namespace {

// Classic potential-based Hungarian over a dense matrix with rows <= cols.
// Returns col_owner[j] = row assigned to column j (-1 if none).
std::vector<int> solve_rows_le_cols(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> col_owner(m, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) col_owner[j - 1] = p[j] - 1;
  return col_owner;
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  std::vector<int> row_to_col(n, -1);
  if (n == 0 || m == 0) return row_to_col;

  // The solver needs finite costs; forbidden pairs get a large sentinel and
  // are stripped from the result afterwards.
  auto clamp = [](double c) {
    return (std::isfinite(c) && c < kForbiddenCost) ? c : kForbiddenCost;
  };
  Eigen::MatrixXd a(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = clamp(cost(i, j));

  if (n <= m) {
    const std::vector<int> col_owner = solve_rows_le_cols(a);
    for (int j = 0; j < m; ++j)
      if (col_owner[j] >= 0) row_to_col[col_owner[j]] = j;
  } else {
    // Transposed: columns of the transposed problem are our rows, so the
    // returned owner array is indexed by row and holds column indices.
    const std::vector<int> col_of_row =
        solve_rows_le_cols(Eigen::MatrixXd(a.transpose()));
    for (int i = 0; i < n; ++i)
      if (col_of_row[i] >= 0) row_to_col[i] = col_of_row[i];
  }

  for (int i = 0; i < n; ++i) {
    const int j = row_to_col[i];
    if (j >= 0 && a(i, j) >= kForbiddenCost) row_to_col[i] = -1;
  }
  return row_to_col;
}

}  // namespace mvpt
