#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace eulerlim::detail {

/// Phase-one simplex (Bland's rule): is {x >= 0 : A x = b} nonempty?
inline bool nonnegative_feasible(Eigen::MatrixXd A, Eigen::VectorXd b,
                                 double tol = 1e-12) {
  const Eigen::Index m = A.rows();
  const Eigen::Index k = A.cols();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0) {
      A.row(i) *= -1.0;
      b(i) = -b(i);
    }
  }
  // Columns: k structural, m artificial, one right-hand side.
  const Eigen::Index cols = k + m;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  t.topLeftCorner(m, k) = A;
  t.block(0, k, m, m).setIdentity();
  t.block(0, cols, m, 1) = b;
  for (Eigen::Index i = 0; i < m; ++i) t.row(m) -= t.row(i);
  for (Eigen::Index i = 0; i < m; ++i) t(m, k + i) = 0.0;

  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = k + i;

  const double scale = 1.0 + b.cwiseAbs().maxCoeff() + A.cwiseAbs().maxCoeff();
  const double pivot_tol = 1e-12 * scale;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (t(m, j) < -pivot_tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (t(i, enter) > pivot_tol) {
        const double ratio = t(i, cols) / t(i, enter);
        if (ratio < best - 1e-15 ||
            (ratio <= best + 1e-15 && leave >= 0 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase one
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && t(i, enter) != 0.0) {
        t.row(i) -= t(i, enter) * t.row(leave);
      }
    }
    basis[leave] = enter;
  }
  // Remaining artificial mass equals -objective.
  return -t(m, cols) <= tol * scale;
}

}  // namespace eulerlim::detail
