#pragma once
// Seven-step posterior sweep: Gibbs for Lambda, sigma^-2, eta (collapsed), gamma,
// phi, delta; Metropolis-Hastings for a1/a2; then the truncation adaptation hook.
#include <functional>
#include <string>

#include "rsbfm/adaptation.hpp"
#include "rsbfm/rng.hpp"
#include "rsbfm/types.hpp"

namespace rsbfm {

// prior-draw initialization: Lambda, phi, delta from Eq-style prior at
// a1=2.1, a2=3.1; sigma^-2 from its prior; gamma = 1; eta standard normal
ModelState initialize_state(int p, int n, const SamplerConfig& cfg);

// step 1: rows lambda_j ~ N(Psi_j b_j, Psi_j), Psi_j^-1 = s_j G + diag(phi_j tau)
void update_loadings(ModelState& s, const Dataset& d, std::uint64_t seed,
                     std::uint64_t iter, int n_threads = 1);

// step 2: sigma_j^-2 ~ Ga(a_sigma + n/2, b_sigma + 0.5 sum_i gamma_i r_ij^2)
void update_error_precisions(ModelState& s, const Dataset& d, const SamplerConfig& cfg,
                             std::uint64_t seed, std::uint64_t iter, int n_threads = 1);

// step 3: eta_i from its collapsed t conditional (NUTS kernel or exact draw);
// returns the number of divergent NUTS trajectories and mean accept statistic
struct FactorUpdateStats {
  int divergences = 0;
  double mean_accept = 1.0;
};
FactorUpdateStats update_factors(ModelState& s, const Dataset& d, const SamplerConfig& cfg,
                                 std::uint64_t seed, std::uint64_t iter, int n_threads = 1);

// step 4: gamma_i ~ Ga((nu+p+k)/2, (nu + r_i^T Sigma^-1 r_i + eta_i^T eta_i)/2);
// must run immediately after update_factors to realize p(eta|y) p(gamma|eta,y)
void update_gamma(ModelState& s, const Dataset& d, double nu, std::uint64_t seed,
                  std::uint64_t iter, int n_threads = 1);

// step 5: phi_jh ~ Ga((kappa+1)/2, (kappa + tau_h lambda_jh^2)/2)
void update_local_shrinkage(ModelState& s, double kappa, std::uint64_t seed,
                            std::uint64_t iter, int n_threads = 1);

// step 6: delta_h sequentially, rate built from tau with delta_h factored out
void update_delta(ModelState& s, std::uint64_t seed, std::uint64_t iter);

// step 7: truncated-normal random-walk MH on a1 (> 2) and a2 (> 3)
struct MhOutcome {
  bool accept_a1 = false;
  bool accept_a2 = false;
};
MhOutcome update_a1_a2(ModelState& s, double mh_sd_a1, double mh_sd_a2,
                       std::uint64_t seed, std::uint64_t iter);

// unnormalized complete-data log posterior, for the run log
double log_posterior_unnormalized(const ModelState& s, const Dataset& d,
                                  const SamplerConfig& cfg);

using sweep_logger = std::function<void(const SweepDiagnostics&, const AdaptationEvent&)>;

PosteriorSummary run_chain(const Dataset& data, const SamplerConfig& config,
                           const sweep_logger& log = {});

// continue an interrupted run from a checkpoint written by run_chain; the
// counter-based RNG makes the result bitwise-identical to an uninterrupted run
PosteriorSummary resume_chain(const Dataset& data, const SamplerConfig& config,
                              const std::string& checkpoint_file,
                              const sweep_logger& log = {});

}  // namespace rsbfm
