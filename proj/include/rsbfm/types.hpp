#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsbfm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// observations in rows; all entries finite
struct Dataset {
  MatrixXd y;  // n x p
  int n() const { return static_cast<int>(y.rows()); }
  int p() const { return static_cast<int>(y.cols()); }
};

enum class eta_mode { nuts, exact };
enum class likelihood_mode { student_t, normal };  // normal = gamma frozen at 1

struct SamplerConfig {
  double nu = 3.0;             // t degrees of freedom, fixed (> 2)
  double a_sigma = 1.0;        // error-precision prior Ga(a_sigma, b_sigma)
  double b_sigma = 0.3;
  double kappa = 3.0;          // local shrinkage prior Ga(kappa/2, kappa/2)
  double nuts_step_size = 0.05;
  int nuts_max_depth = 10;
  double adapt_intercept = -1.2;   // p(t) = exp(intercept + slope * t)
  double adapt_slope = -0.0004;
  double trunc_threshold = 0.01;
  double trunc_proportion = 0.70;
  int min_k = 1;
  double mh_sd_a1 = 0.2;
  double mh_sd_a2 = 0.2;
  bool mh_robbins_monro = false;  // burn-in-only proposal scaling to 50-70% acceptance
  int n_iterations = 20000;
  int n_burnin = 5000;
  int thin = 1;
  int initial_k = 0;           // 0 = default min(floor(5 log p), max_k)
  int max_k = 0;               // 0 = default p
  std::uint64_t seed = 1;
  eta_mode eta_sampler_mode = eta_mode::nuts;
  likelihood_mode likelihood = likelihood_mode::student_t;
  int sample_cap = 300;        // keep full covariance samples only when p <= cap
  int checkpoint_every = 1000;
  std::string checkpoint_path;  // empty = no checkpointing
  int n_threads = 1;
  int progress_every = 0;      // sweeps between stderr progress lines; 0 = silent

  void validate() const {
    if (!(nu > 2.0)) throw std::invalid_argument("nu must exceed 2");
    if (a_sigma <= 0 || b_sigma <= 0) throw std::invalid_argument("a_sigma/b_sigma must be positive");
    if (kappa <= 0) throw std::invalid_argument("kappa must be positive");
    if (nuts_step_size <= 0) throw std::invalid_argument("nuts_step_size must be positive");
    if (nuts_max_depth < 1) throw std::invalid_argument("nuts_max_depth must be positive");
    if (trunc_threshold <= 0) throw std::invalid_argument("trunc_threshold must be positive");
    if (trunc_proportion <= 0 || trunc_proportion >= 1)
      throw std::invalid_argument("trunc_proportion must lie in (0,1)");
    if (mh_sd_a1 <= 0 || mh_sd_a2 <= 0) throw std::invalid_argument("mh proposal sd must be positive");
    if (n_iterations < 1 || n_burnin < 0 || thin < 1)
      throw std::invalid_argument("iteration counts must be positive");
    if (n_burnin >= n_iterations) throw std::invalid_argument("n_burnin must be below n_iterations");
    if (initial_k < 0 || max_k < 0) throw std::invalid_argument("negative truncation level");
    if (max_k > 0 && initial_k > max_k) throw std::invalid_argument("initial_k must not exceed max_k");
    if (min_k < 1) throw std::invalid_argument("min_k must be positive");
    if (std::exp(adapt_intercept) >= 1.0)
      throw std::invalid_argument("adapt_intercept must keep p(t) below 1");
    if (adapt_slope > 0) throw std::invalid_argument("adapt_slope must be nonpositive");
  }

  int resolved_initial_k(int p) const {
    int mk = resolved_max_k(p);
    int k0 = initial_k > 0 ? initial_k : static_cast<int>(std::floor(5.0 * std::log(p)));
    if (k0 < 1) k0 = 1;
    return std::min(k0, mk);
  }
  int resolved_max_k(int p) const { return max_k > 0 ? max_k : p; }
};

struct ModelState {
  MatrixXd lambda;    // p x k loadings
  VectorXd sigma_inv; // p error precisions
  MatrixXd eta;       // n x k factors
  VectorXd gamma;     // n mixture scales
  MatrixXd phi;       // p x k local shrinkage
  VectorXd delta;     // k global shrinkage increments
  double a1 = 2.1;    // > 2
  double a2 = 3.1;    // > 3
  int k = 0;

  VectorXd tau() const {  // tau_h = prod_{l<=h} delta_l
    VectorXd t(delta.size());
    double run = 1.0;
    for (int h = 0; h < delta.size(); ++h) {
      run *= delta(h);
      t(h) = run;
    }
    return t;
  }

  void check_invariants() const {
    if (lambda.cols() != k || eta.cols() != k || phi.cols() != k || delta.size() != k)
      throw std::logic_error("state column counts disagree with k");
    if ((sigma_inv.array() <= 0).any() || (gamma.array() <= 0).any() ||
        (phi.array() <= 0).any() || (delta.array() <= 0).any())
      throw std::logic_error("positivity invariant violated");
    if (!(a1 > 2.0) || !(a2 > 3.0)) throw std::logic_error("a1/a2 bound violated");
  }
};

struct SweepDiagnostics {
  int iteration = 0;
  int k = 0;
  bool mh_accept_a1 = false;
  bool mh_accept_a2 = false;
  int nuts_divergences = 0;
  double log_posterior_unnormalized = 0.0;
};

struct PosteriorSummary {
  MatrixXd mean_covariance;               // posterior mean of the implied data covariance
  std::vector<MatrixXd> covariance_samples;  // full list only when p <= sample_cap
  std::vector<int> k_trace;               // per-iteration factor counts
  std::pair<int, int> k_credible_interval{0, 0};  // attained order statistics
  std::map<std::string, double> acceptance_rates;
  double elapsed_seconds = 0.0;
};

// thrown by chain-level failures; carries the recovery context the CLI reports
struct chain_error : std::runtime_error {
  int iteration;
  std::string checkpoint_reference;
  chain_error(const std::string& what, int iter, std::string ckpt)
      : std::runtime_error(what), iteration(iter), checkpoint_reference(std::move(ckpt)) {}
};

}  // namespace rsbfm
