#pragma once
// Two-class discriminant analysis: per-class factor-model covariance fits,
// t log-likelihood-ratio scoring with threshold xi, and rate reporting.
#include <utility>

#include "rsbfm/types.hpp"

namespace rsbfm {

struct ClassifierModel {
  VectorXd mu0, mu1;      // class training means
  MatrixXd omega0, omega1;  // posterior-mean covariances, SPD
  double nu = 5.0;        // shared t degrees of freedom
  double xi = 0.0;        // decision threshold on the log likelihood ratio
};

// per-class centering, then an independent chain per class on the centered data
ClassifierModel fit_classifier(const Dataset& class0, const Dataset& class1,
                               const SamplerConfig& config, double xi = 0.0);

// t_log_density(y; nu, mu1, omega1) - t_log_density(y; nu, mu0, omega0)
double log_likelihood_ratio(const VectorXd& y, const ClassifierModel& model);

// label 1 iff the ratio strictly exceeds xi
int classify(const VectorXd& y, const ClassifierModel& model);

struct ClassificationRates {
  double accuracy = 0.0;
  double sensitivity = 0.0;  // TP / (TP + FN)
  double specificity = 0.0;  // TN / (TN + FP)
};

ClassificationRates evaluate_predictions(const std::vector<int>& predicted,
                                         const std::vector<int>& truth);

}  // namespace rsbfm
