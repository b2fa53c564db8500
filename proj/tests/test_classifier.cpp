// Two-class t discriminant: score algebra, threshold behavior, rate
// accounting, and end-to-end fits on synthetic classes.
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rsbfm/classifier.hpp"
#include "rsbfm/simdata.hpp"
#include "rsbfm/tdist.hpp"

using namespace rsbfm;

namespace {

ClassifierModel toy_model() {
  ClassifierModel m;
  m.mu0 = VectorXd::Zero(2);
  m.mu1 = VectorXd::Ones(2) * 2.0;
  m.omega0 = MatrixXd::Identity(2, 2);
  m.omega1 = MatrixXd::Identity(2, 2) * 1.5;
  m.nu = 5.0;
  m.xi = 0.0;
  return m;
}

Dataset shifted_gaussian(int n, int p, double mu, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Dataset d;
  d.y.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.y(i, j) = mu + nd(gen);
  return d;
}

SamplerConfig fast_config() {
  SamplerConfig cfg;
  cfg.n_iterations = 600;
  cfg.n_burnin = 200;
  cfg.eta_sampler_mode = eta_mode::exact;
  cfg.nu = 5.0;
  cfg.seed = 12;
  return cfg;
}

}  // namespace

TEST_CASE("the score is the difference of the two class log densities") {
  ClassifierModel m = toy_model();
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd y(2);
    y << 3.0 * nd(gen), 3.0 * nd(gen);
    double expect = t_log_density(y, m.nu, m.mu1, m.omega1) -
                    t_log_density(y, m.nu, m.mu0, m.omega0);
    CHECK(log_likelihood_ratio(y, m) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("swapping the classes negates the score") {
  ClassifierModel m = toy_model();
  ClassifierModel swapped = m;
  std::swap(swapped.mu0, swapped.mu1);
  std::swap(swapped.omega0, swapped.omega1);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd y(2);
    y << 2.0 * nd(gen), 2.0 * nd(gen);
    CHECK(log_likelihood_ratio(y, m) ==
          doctest::Approx(-log_likelihood_ratio(y, swapped)).epsilon(1e-12));
  }
}

TEST_CASE("identical classes score zero everywhere") {
  ClassifierModel m = toy_model();
  m.mu1 = m.mu0;
  m.omega1 = m.omega0;
  VectorXd y(2);
  y << 1.3, -0.4;
  CHECK(log_likelihood_ratio(y, m) == doctest::Approx(0.0));
  // zero is not strictly above the zero threshold: label 0
  CHECK(classify(y, m) == 0);
}

TEST_CASE("a point equidistant between symmetric classes scores zero") {
  ClassifierModel m = toy_model();
  m.omega1 = m.omega0;
  VectorXd mid = 0.5 * (m.mu0 + m.mu1);
  CHECK(std::abs(log_likelihood_ratio(mid, m)) < 1e-12);
}

TEST_CASE("raising the threshold only ever moves labels toward class 0") {
  ClassifierModel m = toy_model();
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 100; ++rep) {
    VectorXd y(2);
    y << 1.0 + 2.0 * nd(gen), 1.0 + 2.0 * nd(gen);
    int prev = 1;
    for (double xi : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
      m.xi = xi;
      int lab = classify(y, m);
      CHECK(lab <= prev);  // monotone nonincreasing in xi
      prev = lab;
    }
  }
}

TEST_CASE("an infinite threshold labels everything class 0") {
  ClassifierModel m = toy_model();
  m.xi = std::numeric_limits<double>::infinity();
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd y(2);
    y << 10.0 * nd(gen), 10.0 * nd(gen);
    CHECK(classify(y, m) == 0);
  }
}

TEST_CASE("rate accounting satisfies the prevalence identity") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 40; ++rep) {
    int n = 20 + static_cast<int>(gen() % 100);
    std::vector<int> truth(static_cast<std::size_t>(n)), pred(static_cast<std::size_t>(n));
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      truth[static_cast<std::size_t>(i)] = gen() % 2;
      pred[static_cast<std::size_t>(i)] = gen() % 2;
      pos += truth[static_cast<std::size_t>(i)];
    }
    if (pos == 0 || pos == n) continue;  // both classes must appear
    ClassificationRates r = evaluate_predictions(pred, truth);
    double prevalence = static_cast<double>(pos) / n;
    double expect = prevalence * r.sensitivity + (1.0 - prevalence) * r.specificity;
    CHECK(r.accuracy == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("rate accounting requires both classes and matching lengths") {
  CHECK_THROWS_AS(evaluate_predictions({1, 0}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_predictions({1, 0}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_predictions({1}, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_predictions({}, {}), std::invalid_argument);
}

TEST_CASE("training requires matching dimensions and enough rows") {
  Dataset c0 = shifted_gaussian(10, 3, 0.0, 6);
  Dataset c1 = shifted_gaussian(10, 4, 1.0, 7);
  CHECK_THROWS_AS(fit_classifier(c0, c1, fast_config()), std::invalid_argument);
  Dataset single = shifted_gaussian(1, 3, 1.0, 8);
  CHECK_THROWS_AS(fit_classifier(c0, single, fast_config()), std::invalid_argument);
  CHECK_THROWS_AS(fit_classifier(single, c0, fast_config()), std::invalid_argument);
}

TEST_CASE("fitted classifier separates well-separated classes") {
  const int p = 5;
  Dataset c0 = shifted_gaussian(80, p, -2.0, 9);
  Dataset c1 = shifted_gaussian(80, p, 2.0, 10);
  ClassifierModel m = fit_classifier(c0, c1, fast_config());
  CHECK(m.mu0(0) == doctest::Approx(c0.y.col(0).mean()));
  CHECK(m.mu1(0) == doctest::Approx(c1.y.col(0).mean()));

  Dataset t0 = shifted_gaussian(100, p, -2.0, 11);
  Dataset t1 = shifted_gaussian(100, p, 2.0, 12);
  std::vector<int> pred, truth;
  for (int i = 0; i < 100; ++i) {
    pred.push_back(classify(t0.y.row(i).transpose(), m));
    truth.push_back(0);
  }
  for (int i = 0; i < 100; ++i) {
    pred.push_back(classify(t1.y.row(i).transpose(), m));
    truth.push_back(1);
  }
  ClassificationRates r = evaluate_predictions(pred, truth);
  CHECK(r.accuracy > 0.95);
}

TEST_CASE("classes fitted on the same distribution give close covariances") {
  // same truth, different draws: the two fitted covariances must agree within
  // 20% in Frobenius norm relative to their average scale
  const int p = 10, n = 500;
  rng_stream trng(31, 0, update_id::generator, 0);
  SyntheticTruth truth = generate_truth(p, 2, 5.0, 0.2, trng);
  rng_stream d0(31, 0, update_id::generator, 1);
  rng_stream d1(31, 1, update_id::generator, 1);
  Dataset c0{sample_dataset(truth, n, d0).y};
  Dataset c1{sample_dataset(truth, n, d1).y};
  SamplerConfig cfg = fast_config();
  cfg.n_iterations = 1000;
  cfg.n_burnin = 400;
  ClassifierModel m = fit_classifier(c0, c1, cfg);
  double dist = (m.omega0 - m.omega1).norm();
  double scale = 0.5 * (m.omega0.norm() + m.omega1.norm());
  CHECK(dist / scale < 0.20);
}

TEST_CASE("fitting is deterministic in the seed") {
  Dataset c0 = shifted_gaussian(40, 4, -1.0, 13);
  Dataset c1 = shifted_gaussian(40, 4, 1.0, 14);
  ClassifierModel a = fit_classifier(c0, c1, fast_config());
  ClassifierModel b = fit_classifier(c0, c1, fast_config());
  CHECK(a.omega0 == b.omega0);
  CHECK(a.omega1 == b.omega1);
}
