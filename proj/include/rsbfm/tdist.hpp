#pragma once
// Multivariate t density, gradient, and the collapsed factor conditional.
#include <Eigen/Dense>

#include "rsbfm/types.hpp"

namespace rsbfm {

// Omega = Lambda Lambda^T + diag(1/sigma_inv), exactly symmetric by construction
MatrixXd reconstruct_covariance(const MatrixXd& lambda, const VectorXd& sigma_inv);

// log t_p(y | nu, mu, Omega); Cholesky only, no explicit inverse
double t_log_density(const VectorXd& y, double nu, const VectorXd& mu,
                     const MatrixXd& omega);

// grad_x log t_k(x | nu, mu, S) = -((nu+k)/(nu+q)) S^{-1}(x-mu)
VectorXd t_log_density_grad(const VectorXd& x, double nu, const VectorXd& mu,
                            const MatrixXd& scale);

struct EtaConditionalParams {
  double df;         // nu + p
  VectorXd location; // (I + L^T Sigma^-1 L)^-1 L^T Sigma^-1 y
  MatrixXd scale;    // ((nu + y^T Omega^-1 y)/(nu + p)) (I + L^T Sigma^-1 L)^-1
};

// parameters of the t full conditional of eta_i with gamma_i marginalized;
// y^T Omega^-1 y is evaluated through the k x k Woodbury identity, never p x p
EtaConditionalParams eta_conditional_params(const VectorXd& y, const MatrixXd& lambda,
                                            const VectorXd& sigma_inv, double nu);

}  // namespace rsbfm
