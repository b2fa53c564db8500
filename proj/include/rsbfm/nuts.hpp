#pragma once
// Single-iteration No-U-Turn sampler: doubling trajectory, multinomial weight
// over leaves, original extreme-based U-turn criterion, identity mass matrix.
#include <functional>

#include "rsbfm/rng.hpp"
#include "rsbfm/types.hpp"

namespace rsbfm {

struct NutsOutcome {
  VectorXd new_point;
  int tree_depth_reached = 0;
  bool diverged = false;
  double accept_stat = 1.0;  // mean of min(1, exp(H_leaf - H0)) over leaves
};

// fills grad at x, returns the (unnormalized) log density
using log_density_grad_fn = std::function<double(const VectorXd& x, VectorXd& grad)>;

inline constexpr double nuts_divergence_threshold = 1000.0;  // energy units

struct PhasePoint {
  VectorXd x;
  VectorXd r;
  VectorXd grad;  // gradient of logp at x
  double logp = 0.0;
};

// one velocity-Verlet step of size signed_eps (negative integrates backwards)
PhasePoint leapfrog_step(const PhasePoint& z, double signed_eps,
                         const log_density_grad_fn& target);

NutsOutcome nuts_step(const VectorXd& current, const log_density_grad_fn& target,
                      double step_size, int max_depth, rng_stream& rng);

// exact multivariate-t draw: location + (scale^{1/2} z) sqrt(df/w), w ~ chi^2_df
VectorXd sample_mvt(double df, const VectorXd& location, const MatrixXd& scale,
                    rng_stream& rng);

}  // namespace rsbfm
