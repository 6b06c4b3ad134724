#include "nnls.hpp"

#include <algorithm>
#include <vector>

namespace graphwhittle::detail {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = A.col(cols[c]);
  const Eigen::VectorXd s_sub = sub.colPivHouseholderQr().solve(b);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(A.cols());
  for (std::size_t c = 0; c < cols.size(); ++c) s[cols[c]] = s_sub[static_cast<Eigen::Index>(c)];
  return s;
}

}  // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iterations, double tol) {
  const Eigen::Index n = A.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n);
  const double scale = A.norm() * std::max(1.0, b.norm());
  const double wtol = tol * scale;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);
  Eigen::VectorXd w = A.transpose() * (b - A * x);

  for (int outer = 0; outer < max_iterations; ++outer) {
    Eigen::Index t = -1;
    double best = wtol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && !blocked[static_cast<std::size_t>(j)] && w[j] > best) {
        best = w[j];
        t = j;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;

    for (int inner = 0; inner < max_iterations; ++inner) {
      Eigen::VectorXd s = solve_passive(A, b, passive);
      if (inner == 0 && s[t] <= 0.0) {
        // column t cannot enter with a positive coefficient (degenerate direction)
        passive[static_cast<std::size_t>(t)] = false;
        blocked[static_cast<std::size_t>(t)] = true;
        break;
      }
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) feasible = false;
      }
      if (feasible) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          alpha = std::min(alpha, x[j] / (x[j] - s[j]));
        }
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x[j] <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
      }
    }
    if (blocked[static_cast<std::size_t>(t)]) continue;
    std::fill(blocked.begin(), blocked.end(), false);
    w = A.transpose() * (b - A * x);
  }
  return x;
}

}  // namespace graphwhittle::detail
