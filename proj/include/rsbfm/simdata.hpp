#pragma once
// Synthetic heavy-tailed data with known sparse covariance, plus the five
// evaluation metrics computed against the implied true data covariance.
#include <utility>

#include "rsbfm/rng.hpp"
#include "rsbfm/types.hpp"

namespace rsbfm {

struct SyntheticTruth {
  MatrixXd lambda0;        // p x k0
  VectorXd sigma0_diag;    // error variances
  double nu0 = 3.0;
  MatrixXd omega0;         // lambda0 lambda0^T + diag(sigma0)
  MatrixXd true_covariance;  // (nu0/(nu0-2)) omega0
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> zero_mask;  // exact zeros off-diagonal
  double achieved_zero_fraction = 0.0;
  int support_min = 1, support_max = 1;  // row-support size range actually used
};

struct GeneratorConfig {
  int support_min = 0;   // 0 = choose the range automatically from the target
  int support_max = 0;
  int max_retries = 64;
};

// rows of lambda0 get disjoint-or-overlapping supports of random size; disjoint
// row pairs give exact zeros in omega0, tuned to the target zero fraction
SyntheticTruth generate_truth(int p, int k0, double nu0, double target_zero_fraction,
                              rng_stream& rng, const GeneratorConfig& gen = {});

// y_i = (lambda0 eta_i + e_i)/sqrt(gamma_i), i.e. y_i ~ t_p(nu0, 0, omega0)
Dataset sample_dataset(const SyntheticTruth& truth, int n, rng_stream& rng);

struct MetricReport {
  double one_norm = 0.0;  // max absolute column sum of the error matrix
  double two_norm = 0.0;  // largest singular value
  double mse = 0.0;       // sum of squared entries / p^2
  double aab = 0.0;       // sum of absolute entries / p^2
  double mab = 0.0;       // max absolute entry
};

MetricReport evaluate_estimate(const MatrixXd& estimate, const SyntheticTruth& truth);
MetricReport evaluate_estimate(const MatrixXd& estimate, const MatrixXd& true_covariance);

// largest singular value: dense SVD below p = 64, else power iteration (tol 1e-8)
double spectral_norm(const MatrixXd& m);

// type-7 linear interpolation between order statistics
double percentile(std::vector<double> values, double q);

// 10th/90th percentiles of estimate entries at the true-zero positions
std::pair<double, double> zero_entry_percentiles(
    const MatrixXd& estimate,
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& zero_mask);

}  // namespace rsbfm
