#include "rsbfm/adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace rsbfm {

double AdaptationPolicy::trigger_probability(long t) const {
  return std::exp(intercept + slope * static_cast<double>(t));
}

namespace {

// drop the listed columns (sorted ascending) from column-indexed state
MatrixXd drop_columns(const MatrixXd& m, const std::vector<int>& cols) {
  MatrixXd out(m.rows(), m.cols() - static_cast<Eigen::Index>(cols.size()));
  int w = 0;
  std::size_t c = 0;
  for (int h = 0; h < m.cols(); ++h) {
    if (c < cols.size() && cols[c] == h) {
      ++c;
      continue;
    }
    out.col(w++) = m.col(h);
  }
  return out;
}

VectorXd drop_entries(const VectorXd& v, const std::vector<int>& idx) {
  VectorXd out(v.size() - static_cast<Eigen::Index>(idx.size()));
  int w = 0;
  std::size_t c = 0;
  for (int h = 0; h < v.size(); ++h) {
    if (c < idx.size() && idx[c] == h) {
      ++c;
      continue;
    }
    out(w++) = v(h);
  }
  return out;
}

}  // namespace

AdaptationEvent adapt(ModelState& s, long t, const AdaptationPolicy& policy,
                      double kappa, rng_stream& rng) {
  AdaptationEvent ev;
  ev.iteration = t;
  ev.k_before = ev.k_after = s.k;
  if (rng.uniform() >= policy.trigger_probability(t)) return ev;  // no-op branch

  const int p = static_cast<int>(s.lambda.rows());
  const int n = static_cast<int>(s.eta.rows());
  std::vector<int> flagged;
  for (int h = 0; h < s.k; ++h) {
    int below = 0;
    for (int j = 0; j < p; ++j)
      if (std::abs(s.lambda(j, h)) < policy.threshold) ++below;
    // fraction >= proportion, guarded against binary rounding of proportion * p
    if (static_cast<double>(below) >= policy.proportion * p - 1e-9) flagged.push_back(h);
  }

  if (!flagged.empty()) {
    // respect min_k: unflag the most energetic flagged columns until enough remain
    while (s.k - static_cast<int>(flagged.size()) < policy.min_k && !flagged.empty()) {
      auto keep = std::max_element(flagged.begin(), flagged.end(), [&](int a, int b) {
        return s.lambda.col(a).squaredNorm() < s.lambda.col(b).squaredNorm();
      });
      flagged.erase(keep);
    }
    if (flagged.empty()) return ev;  // removal blocked by min_k
    ev.act = AdaptationEvent::action::prune;
    ev.columns = flagged;
    s.lambda = drop_columns(s.lambda, flagged);
    s.eta = drop_columns(s.eta, flagged);
    s.phi = drop_columns(s.phi, flagged);
    std::vector<int> didx(flagged.begin(), flagged.end());
    s.delta = drop_entries(s.delta, didx);
    s.k -= static_cast<int>(flagged.size());
    ev.k_after = s.k;
    return ev;
  }

  if (s.k < policy.max_k) {
    // append a fresh column drawn from the prior at current hyperparameters
    ev.act = AdaptationEvent::action::append;
    ev.columns = {s.k};
    double delta_new = rng.gamma(s.a2, 1.0);
    double tau_new = delta_new;
    for (int h = 0; h < s.k; ++h) tau_new *= s.delta(h);
    s.delta.conservativeResize(s.k + 1);
    s.delta(s.k) = delta_new;
    s.phi.conservativeResize(Eigen::NoChange, s.k + 1);
    s.lambda.conservativeResize(Eigen::NoChange, s.k + 1);
    for (int j = 0; j < p; ++j) {
      double phi_new = rng.gamma(0.5 * kappa, 0.5 * kappa);
      s.phi(j, s.k) = phi_new;
      s.lambda(j, s.k) = rng.normal() / std::sqrt(phi_new * tau_new);
    }
    s.eta.conservativeResize(Eigen::NoChange, s.k + 1);
    for (int i = 0; i < n; ++i) s.eta(i, s.k) = rng.normal();
    s.k += 1;
    ev.k_after = s.k;
  }
  return ev;
}

}  // namespace rsbfm
