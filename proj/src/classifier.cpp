#include "rsbfm/classifier.hpp"

#include <stdexcept>

#include "rsbfm/engine.hpp"
#include "rsbfm/rng.hpp"
#include "rsbfm/tdist.hpp"

namespace rsbfm {

namespace {

MatrixXd fit_class_covariance(const Dataset& data, SamplerConfig cfg, int class_tag,
                              const std::string& label) {
  // each class gets its own derived seed so the two chains are distinct streams
  cfg.seed = mix64(cfg.seed ^ static_cast<std::uint64_t>(0xC0 + class_tag));
  try {
    return run_chain(data, cfg).mean_covariance;
  } catch (const std::exception& e) {
    throw std::runtime_error("class " + label + " chain failed: " + e.what());
  }
}

}  // namespace

ClassifierModel fit_classifier(const Dataset& class0, const Dataset& class1,
                               const SamplerConfig& config, double xi) {
  if (class0.p() != class1.p())
    throw std::invalid_argument("class datasets disagree on dimension");
  if (class0.n() < 2 || class1.n() < 2)
    throw std::invalid_argument("each class needs at least two observations to center and fit");
  ClassifierModel m;
  m.nu = config.nu;
  m.xi = xi;
  m.mu0 = class0.y.colwise().mean().transpose();
  m.mu1 = class1.y.colwise().mean().transpose();
  Dataset c0{class0.y.rowwise() - m.mu0.transpose()};
  Dataset c1{class1.y.rowwise() - m.mu1.transpose()};
  m.omega0 = fit_class_covariance(c0, config, 0, "0");
  m.omega1 = fit_class_covariance(c1, config, 1, "1");
  return m;
}

double log_likelihood_ratio(const VectorXd& y, const ClassifierModel& model) {
  return t_log_density(y, model.nu, model.mu1, model.omega1) -
         t_log_density(y, model.nu, model.mu0, model.omega0);
}

int classify(const VectorXd& y, const ClassifierModel& model) {
  return log_likelihood_ratio(y, model) > model.xi ? 1 : 0;
}

ClassificationRates evaluate_predictions(const std::vector<int>& predicted,
                                         const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("prediction/truth length mismatch");
  long tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1)
      predicted[i] == 1 ? ++tp : ++fn;
    else
      predicted[i] == 0 ? ++tn : ++fp;
  }
  if (tp + fn == 0 || tn + fp == 0)
    throw std::invalid_argument("both classes must appear in the truth labels");
  ClassificationRates r;
  r.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(truth.size());
  return r;
}

}  // namespace rsbfm
