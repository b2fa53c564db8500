#pragma once
// Cholesky-only linear algebra; explicit matrix inversion is forbidden
// throughout (stability at large p), so everything routes through these.
#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace rsbfm {

struct numerical_error : std::runtime_error {
  int pivot_index;  // 0-based pivot at which the factorization failed
  numerical_error(const std::string& what, int pivot)
      : std::runtime_error(what + " (pivot " + std::to_string(pivot) + ")"),
        pivot_index(pivot) {}
};

// in-place lower Cholesky; throws numerical_error naming the failing pivot
inline Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd l = a;
  for (int j = 0; j < n; ++j) {
    double d = l(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d))
      throw numerical_error("matrix not positive definite", j);
    d = std::sqrt(d);
    l(j, j) = d;
    if (j + 1 < n) {
      auto tail = l.block(j + 1, 0, n - j - 1, j);
      l.col(j).tail(n - j - 1) =
          (l.col(j).tail(n - j - 1) - tail * l.row(j).head(j).transpose()) / d;
    }
  }
  l.triangularView<Eigen::StrictlyUpper>().setZero();
  return l;
}

inline double chol_log_det(const Eigen::MatrixXd& l) {
  // log det A = 2 sum log L_jj, safe against overflow at large p
  return 2.0 * l.diagonal().array().log().sum();
}

// solve L L^T x = b
inline Eigen::VectorXd chol_solve(const Eigen::MatrixXd& l, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(x);
}

// quadratic form b^T A^{-1} b through the factor only
inline double chol_quad_form(const Eigen::MatrixXd& l, const Eigen::VectorXd& b) {
  return l.triangularView<Eigen::Lower>().solve(b).squaredNorm();
}

// A^{-1} computed column-wise from the factor (used only where a contract
// requires the materialized inverse, e.g. returning a t scale matrix)
inline Eigen::MatrixXd chol_inverse(const Eigen::MatrixXd& l) {
  const int n = static_cast<int>(l.rows());
  Eigen::MatrixXd inv =
      l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  inv = l.transpose().triangularView<Eigen::Upper>().solve(inv);
  return 0.5 * (inv + inv.transpose());  // exact symmetry by construction
}

}  // namespace rsbfm
