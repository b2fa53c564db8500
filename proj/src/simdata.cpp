#include "rsbfm/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

namespace rsbfm {

namespace {

double log_choose(int n, int r) {
  if (r < 0 || r > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

// P(two uniform supports of sizes in [a,b] over k0 factors are disjoint)
double expected_disjoint_fraction(int k0, int a, int b) {
  double total = 0.0;
  int count = 0;
  for (int si = a; si <= b; ++si)
    for (int sj = a; sj <= b; ++sj) {
      double pr = si + sj > k0
                      ? 0.0
                      : std::exp(log_choose(k0 - si, sj) - log_choose(k0, sj));
      total += pr;
      ++count;
    }
  return total / count;
}

// pick the support-size range whose expected disjoint fraction is closest to target
std::pair<int, int> choose_support_range(int p, int k0, double target) {
  (void)p;
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> pick{1, 1};
  for (int a = 1; a <= k0; ++a)
    for (int b = a; b <= k0; ++b) {
      double gap = std::abs(expected_disjoint_fraction(k0, a, b) - target);
      if (gap < best - 1e-12) {
        best = gap;
        pick = {a, b};
      }
    }
  return pick;
}

}  // namespace

SyntheticTruth generate_truth(int p, int k0, double nu0, double target_zero_fraction,
                              rng_stream& rng, const GeneratorConfig& gen) {
  if (p < k0 || k0 < 1) throw std::invalid_argument("need p >= k0 >= 1");
  if (!(nu0 > 2.0)) throw std::invalid_argument("nu0 must exceed 2");
  if (target_zero_fraction < 0.0 || target_zero_fraction > 1.0)
    throw std::invalid_argument("target_zero_fraction must lie in [0,1]");
  int smin = gen.support_min, smax = gen.support_max;
  if (smin <= 0 || smax <= 0) {
    if (target_zero_fraction == 0.0) {
      smin = smax = k0;  // dense rows: no disjoint pairs
    } else {
      auto pick = choose_support_range(p, k0, target_zero_fraction);
      smin = pick.first;
      smax = pick.second;
    }
  }
  if (smin > smax || smax > k0) throw std::invalid_argument("invalid support-size range");

  SyntheticTruth t;
  t.nu0 = nu0;
  t.support_min = smin;
  t.support_max = smax;
  std::vector<std::vector<bool>> support(p, std::vector<bool>(k0, false));
  for (int attempt = 0; attempt < gen.max_retries; ++attempt) {
    t.lambda0 = MatrixXd::Zero(p, k0);
    for (int j = 0; j < p; ++j) {
      std::fill(support[j].begin(), support[j].end(), false);
      int size = smin + static_cast<int>(rng.uniform() * (smax - smin + 1));
      if (size > smax) size = smax;
      // partial Fisher-Yates: `size` distinct factor indices
      std::vector<int> pool(k0);
      std::iota(pool.begin(), pool.end(), 0);
      for (int s = 0; s < size; ++s) {
        int pos = s + static_cast<int>(rng.uniform() * (k0 - s));
        if (pos >= k0) pos = k0 - 1;
        std::swap(pool[s], pool[pos]);
        support[j][pool[s]] = true;
        t.lambda0(j, pool[s]) = rng.normal();
      }
    }
    // zero mask from disjoint supports; achieved fraction over off-diagonal pairs
    t.zero_mask.setConstant(p, p, false);
    long zero_pairs = 0;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) {
        bool overlap = false;
        for (int h = 0; h < k0; ++h)
          if (support[i][h] && support[j][h]) {
            overlap = true;
            break;
          }
        if (!overlap) {
          t.zero_mask(i, j) = t.zero_mask(j, i) = true;
          ++zero_pairs;
        }
      }
    t.achieved_zero_fraction =
        static_cast<double>(zero_pairs) / (0.5 * p * (p - 1));
    if (std::abs(t.achieved_zero_fraction - target_zero_fraction) <= 0.05) break;
    if (attempt + 1 == gen.max_retries)
      throw std::invalid_argument(
          "generator could not hit the target zero fraction: wanted " +
          std::to_string(target_zero_fraction) + ", last achieved " +
          std::to_string(t.achieved_zero_fraction));
  }

  t.sigma0_diag.resize(p);
  for (int j = 0; j < p; ++j) t.sigma0_diag(j) = 1.0 / rng.gamma(1.0, 0.25);
  t.omega0 = MatrixXd::Zero(p, p);
  t.omega0.selfadjointView<Eigen::Lower>().rankUpdate(t.lambda0);
  t.omega0 = t.omega0.selfadjointView<Eigen::Lower>();
  t.omega0.diagonal() += t.sigma0_diag;
  t.true_covariance = (nu0 / (nu0 - 2.0)) * t.omega0;
  return t;
}

Dataset sample_dataset(const SyntheticTruth& truth, int n, rng_stream& rng) {
  if (n < 1) throw std::invalid_argument("need n >= 1");
  const int p = static_cast<int>(truth.lambda0.rows());
  const int k0 = static_cast<int>(truth.lambda0.cols());
  Dataset d;
  d.y.resize(n, p);
  VectorXd eta(k0), e(p);
  for (int i = 0; i < n; ++i) {
    double g = rng.gamma(0.5 * truth.nu0, 0.5 * truth.nu0);
    for (int h = 0; h < k0; ++h) eta(h) = rng.normal();
    for (int j = 0; j < p; ++j) e(j) = rng.normal() * std::sqrt(truth.sigma0_diag(j));
    d.y.row(i) = ((truth.lambda0 * eta + e) / std::sqrt(g)).transpose();
  }
  return d;
}

double spectral_norm(const MatrixXd& m) {
  const int p = static_cast<int>(m.rows());
  if (p < 64) {
    Eigen::JacobiSVD<MatrixXd> svd(m);
    return svd.singularValues()(0);
  }
  // power iteration on m^T m; deterministic start, tolerance 1e-8
  VectorXd v = VectorXd::Ones(m.cols()).normalized();
  double sigma = 0.0;
  for (int it = 0; it < 10000; ++it) {
    VectorXd w = m.transpose() * (m * v);
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    double next = std::sqrt(norm);
    if (it > 0 && std::abs(next - sigma) <= 1e-8 * std::max(1.0, next)) return next;
    sigma = next;
  }
  return sigma;
}

MetricReport evaluate_estimate(const MatrixXd& estimate, const MatrixXd& true_covariance) {
  const int p = static_cast<int>(true_covariance.rows());
  if (estimate.rows() != p || estimate.cols() != p)
    throw std::invalid_argument("estimate dimension disagrees with the truth");
  double asym = (estimate - estimate.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8)
    throw std::invalid_argument("estimate is asymmetric beyond 1e-8");
  MatrixXd err = estimate - true_covariance;
  MetricReport r;
  r.one_norm = err.cwiseAbs().colwise().sum().maxCoeff();
  r.two_norm = spectral_norm(err);
  r.mse = err.squaredNorm() / (static_cast<double>(p) * p);
  r.aab = err.cwiseAbs().sum() / (static_cast<double>(p) * p);
  r.mab = err.cwiseAbs().maxCoeff();
  return r;
}

MetricReport evaluate_estimate(const MatrixXd& estimate, const SyntheticTruth& truth) {
  return evaluate_estimate(estimate, truth.true_covariance);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  double h = q * (static_cast<double>(values.size()) - 1.0);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::pair<double, double> zero_entry_percentiles(
    const MatrixXd& estimate,
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& zero_mask) {
  std::vector<double> entries;
  for (int i = 0; i < estimate.rows(); ++i)
    for (int j = 0; j < estimate.cols(); ++j)
      if (zero_mask(i, j)) entries.push_back(estimate(i, j));
  if (entries.empty()) throw std::invalid_argument("zero mask selects no entries");
  return {percentile(entries, 0.10), percentile(entries, 0.90)};
}

}  // namespace rsbfm
