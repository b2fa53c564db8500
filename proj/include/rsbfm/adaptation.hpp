#pragma once
// Truncation-level adaptation: with probability p(t), prune loading columns
// that are mostly inside (-threshold, threshold), or append a fresh
// prior-drawn column when nothing is prunable.
#include <vector>

#include "rsbfm/rng.hpp"
#include "rsbfm/types.hpp"

namespace rsbfm {

struct AdaptationPolicy {
  double intercept = -1.2;  // p(t) = exp(intercept + slope * t)
  double slope = -0.0004;
  double threshold = 0.01;
  double proportion = 0.70;
  int min_k = 1;
  int max_k = 0;  // 0 = unbounded up to p

  double trigger_probability(long t) const;
};

struct AdaptationEvent {
  enum class action { none, prune, append };
  long iteration = 0;
  action act = action::none;
  std::vector<int> columns;  // pruned column indices (old indexing) or the appended index
  int k_before = 0;
  int k_after = 0;
};

// kappa and the current a2/delta chain parameterize the appended column's prior
AdaptationEvent adapt(ModelState& s, long t, const AdaptationPolicy& policy,
                      double kappa, rng_stream& rng);

}  // namespace rsbfm
