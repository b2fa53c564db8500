#include "rsbfm/tdist.hpp"

#include <cmath>

#include "rsbfm/linalg.hpp"

namespace rsbfm {

MatrixXd reconstruct_covariance(const MatrixXd& lambda, const VectorXd& sigma_inv) {
  const int p = static_cast<int>(lambda.rows());
  if (sigma_inv.size() != p) throw std::invalid_argument("loadings/precisions dimension mismatch");
  if ((sigma_inv.array() <= 0).any()) throw std::invalid_argument("error precisions must be positive");
  MatrixXd omega = MatrixXd::Zero(p, p);
  omega.selfadjointView<Eigen::Lower>().rankUpdate(lambda);
  omega = omega.selfadjointView<Eigen::Lower>();  // mirror, exact symmetry
  omega.diagonal() += sigma_inv.cwiseInverse();
  return omega;
}

double t_log_density(const VectorXd& y, double nu, const VectorXd& mu,
                     const MatrixXd& omega) {
  const int p = static_cast<int>(y.size());
  MatrixXd l = cholesky_lower(omega);
  double q = chol_quad_form(l, y - mu);
  return std::lgamma(0.5 * (nu + p)) - std::lgamma(0.5 * nu) -
         0.5 * p * std::log(nu * M_PI) - 0.5 * chol_log_det(l) -
         0.5 * (nu + p) * std::log1p(q / nu);
}

VectorXd t_log_density_grad(const VectorXd& x, double nu, const VectorXd& mu,
                            const MatrixXd& scale) {
  const int k = static_cast<int>(x.size());
  MatrixXd l = cholesky_lower(scale);
  VectorXd sinv_d = chol_solve(l, x - mu);
  double q = (x - mu).dot(sinv_d);
  return -((nu + k) / (nu + q)) * sinv_d;
}

EtaConditionalParams eta_conditional_params(const VectorXd& y, const MatrixXd& lambda,
                                            const VectorXd& sigma_inv, double nu) {
  const int p = static_cast<int>(y.size());
  const int k = static_cast<int>(lambda.cols());
  // A = I + L^T Sigma^-1 L;  q = y^T Omega^-1 y = y^T Sigma^-1 y - u^T A^-1 u
  MatrixXd siglam = sigma_inv.asDiagonal() * lambda;
  MatrixXd a = MatrixXd::Identity(k, k) + lambda.transpose() * siglam;
  a = 0.5 * (a + a.transpose());
  MatrixXd la = cholesky_lower(a);
  VectorXd u = siglam.transpose() * y;
  VectorXd m = chol_solve(la, u);
  double q = y.dot(sigma_inv.asDiagonal() * y) - u.dot(m);
  if (q < 0.0) q = 0.0;  // Schur complement, nonnegative up to rounding
  EtaConditionalParams out;
  out.df = nu + p;
  out.location = m;
  out.scale = ((nu + q) / (nu + p)) * chol_inverse(la);
  return out;
}

}  // namespace rsbfm
