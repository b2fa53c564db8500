#include "rsbfm/engine.hpp"

#include <chrono>
#include <cmath>

#include "rsbfm/checkpoint.hpp"
#include "rsbfm/linalg.hpp"
#include "rsbfm/nuts.hpp"
#include "rsbfm/parallel.hpp"
#include "rsbfm/tdist.hpp"

namespace rsbfm {

ModelState initialize_state(int p, int n, const SamplerConfig& cfg) {
  ModelState s;
  s.k = cfg.resolved_initial_k(p);
  s.a1 = 2.1;
  s.a2 = 3.1;
  rng_stream rng(cfg.seed, 0, update_id::init, 0);
  s.delta.resize(s.k);
  for (int h = 0; h < s.k; ++h)
    s.delta(h) = rng.gamma(h == 0 ? s.a1 : s.a2, 1.0);
  s.phi.resize(p, s.k);
  for (int j = 0; j < p; ++j)
    for (int h = 0; h < s.k; ++h) s.phi(j, h) = rng.gamma(0.5 * cfg.kappa, 0.5 * cfg.kappa);
  VectorXd tau = s.tau();
  s.lambda.resize(p, s.k);
  for (int j = 0; j < p; ++j)
    for (int h = 0; h < s.k; ++h)
      s.lambda(j, h) = rng.normal() / std::sqrt(s.phi(j, h) * tau(h));
  s.sigma_inv.resize(p);
  for (int j = 0; j < p; ++j) s.sigma_inv(j) = rng.gamma(cfg.a_sigma, cfg.b_sigma);
  s.gamma = VectorXd::Ones(n);
  s.eta.resize(n, s.k);
  for (int i = 0; i < n; ++i)
    for (int h = 0; h < s.k; ++h) s.eta(i, h) = rng.normal();
  return s;
}

void update_loadings(ModelState& s, const Dataset& d, std::uint64_t seed,
                     std::uint64_t iter, int n_threads) {
  const int p = static_cast<int>(s.lambda.rows());
  const int k = s.k;
  // shared sufficient statistics: G = sum_i gamma_i eta_i eta_i^T, W = eta^T (gamma . y)
  MatrixXd ge = s.gamma.asDiagonal() * s.eta;            // n x k
  MatrixXd g = s.eta.transpose() * ge;                   // k x k
  g = 0.5 * (g + g.transpose());
  MatrixXd w = ge.transpose() * d.y;                     // k x p
  VectorXd tau = s.tau();
  parallel_for(p, n_threads, [&](int j) {
    MatrixXd prec = s.sigma_inv(j) * g;
    prec.diagonal() += (s.phi.row(j).transpose().array() * tau.array()).matrix();
    MatrixXd l;
    try {
      l = cholesky_lower(prec);
    } catch (const numerical_error& e) {
      throw numerical_error("loading row " + std::to_string(j) + " precision not positive definite",
                            e.pivot_index);
    }
    VectorXd mean = chol_solve(l, s.sigma_inv(j) * w.col(j));
    rng_stream rng(seed, iter, update_id::loadings, static_cast<std::uint64_t>(j));
    VectorXd z(k);
    for (int h = 0; h < k; ++h) z(h) = rng.normal();
    s.lambda.row(j) =
        (mean + l.transpose().triangularView<Eigen::Upper>().solve(z)).transpose();
  });
}

void update_error_precisions(ModelState& s, const Dataset& d, const SamplerConfig& cfg,
                             std::uint64_t seed, std::uint64_t iter, int n_threads) {
  const int p = static_cast<int>(s.lambda.rows());
  const int n = d.n();
  MatrixXd resid = d.y - s.eta * s.lambda.transpose();  // n x p
  parallel_for(p, n_threads, [&](int j) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += s.gamma(i) * resid(i, j) * resid(i, j);
    rng_stream rng(seed, iter, update_id::error_precisions, static_cast<std::uint64_t>(j));
    s.sigma_inv(j) = rng.gamma(cfg.a_sigma + 0.5 * n, cfg.b_sigma + 0.5 * ss);
  });
}

FactorUpdateStats update_factors(ModelState& s, const Dataset& d, const SamplerConfig& cfg,
                                 std::uint64_t seed, std::uint64_t iter, int n_threads) {
  const int n = d.n();
  const int k = s.k;
  const double nu = cfg.nu;
  const double df = nu + d.p();
  // shared Woodbury pieces: A = I + L^T Sigma^-1 L factored once per sweep
  MatrixXd siglam = s.sigma_inv.asDiagonal() * s.lambda;  // p x k
  MatrixXd a = MatrixXd::Identity(k, k) + s.lambda.transpose() * siglam;
  a = 0.5 * (a + a.transpose());
  MatrixXd la = cholesky_lower(a);
  FactorUpdateStats stats;
  std::vector<int> div(n, 0);
  std::vector<double> acc(n, 1.0);
  parallel_for(n, n_threads, [&](int i) {
    rng_stream rng(seed, iter, update_id::factors, static_cast<std::uint64_t>(i));
    VectorXd y = d.y.row(i).transpose();
    VectorXd u = siglam.transpose() * y;
    VectorXd m = chol_solve(la, u);
    const bool gaussian = cfg.likelihood == likelihood_mode::normal;
    double c = 1.0;
    if (!gaussian) {
      double q = y.dot(s.sigma_inv.asDiagonal() * y) - u.dot(m);
      if (q < 0.0) q = 0.0;
      c = (nu + q) / df;  // t scale = c * A^-1
    }
    if (cfg.eta_sampler_mode == eta_mode::exact) {
      VectorXd z(k);
      for (int h = 0; h < k; ++h) z(h) = rng.normal();
      // gamma frozen at 1 makes the conditional exactly N(m, A^-1)
      double mult = gaussian ? 1.0 : std::sqrt(c * df / rng.chi_squared(df));
      s.eta.row(i) =
          (m + mult * la.transpose().triangularView<Eigen::Upper>().solve(z)).transpose();
    } else if (gaussian) {
      auto target = [&](const VectorXd& x, VectorXd& grad) -> double {
        VectorXd diff = x - m;
        VectorXd a_d = a.selfadjointView<Eigen::Lower>() * diff;
        grad = -a_d;
        return -0.5 * diff.dot(a_d);
      };
      NutsOutcome o = nuts_step(s.eta.row(i).transpose(), target, cfg.nuts_step_size,
                                cfg.nuts_max_depth, rng);
      s.eta.row(i) = o.new_point.transpose();
      div[i] = o.diverged ? 1 : 0;
      acc[i] = o.accept_stat;
    } else {
      // t_k(df, m, c A^-1): log density and gradient through A directly
      auto target = [&](const VectorXd& x, VectorXd& grad) -> double {
        VectorXd diff = x - m;
        VectorXd sinv_d = (a.selfadjointView<Eigen::Lower>() * diff) / c;
        double qx = diff.dot(sinv_d);
        grad = -((df + k) / (df + qx)) * sinv_d;
        return -0.5 * (df + k) * std::log1p(qx / df);
      };
      NutsOutcome o = nuts_step(s.eta.row(i).transpose(), target, cfg.nuts_step_size,
                                cfg.nuts_max_depth, rng);
      s.eta.row(i) = o.new_point.transpose();
      div[i] = o.diverged ? 1 : 0;
      acc[i] = o.accept_stat;
    }
  });
  for (int i = 0; i < n; ++i) stats.divergences += div[i];
  if (n > 0 && cfg.eta_sampler_mode == eta_mode::nuts) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += acc[i];
    stats.mean_accept = sum / n;
  }
  return stats;
}

void update_gamma(ModelState& s, const Dataset& d, double nu, std::uint64_t seed,
                  std::uint64_t iter, int n_threads) {
  const int n = d.n();
  const int p = d.p();
  const int k = s.k;
  MatrixXd resid = d.y - s.eta * s.lambda.transpose();
  parallel_for(n, n_threads, [&](int i) {
    double quad = 0.0;
    for (int j = 0; j < p; ++j) quad += s.sigma_inv(j) * resid(i, j) * resid(i, j);
    quad += s.eta.row(i).squaredNorm();
    rng_stream rng(seed, iter, update_id::mixture_scales, static_cast<std::uint64_t>(i));
    s.gamma(i) = rng.gamma(0.5 * (nu + p + k), 0.5 * (nu + quad));
  });
}

void update_local_shrinkage(ModelState& s, double kappa, std::uint64_t seed,
                            std::uint64_t iter, int n_threads) {
  const int p = static_cast<int>(s.phi.rows());
  VectorXd tau = s.tau();
  parallel_for(p, n_threads, [&](int j) {
    rng_stream rng(seed, iter, update_id::local_shrinkage, static_cast<std::uint64_t>(j));
    for (int h = 0; h < s.k; ++h) {
      double lam2 = s.lambda(j, h) * s.lambda(j, h);
      s.phi(j, h) = rng.gamma(0.5 * (kappa + 1.0), 0.5 * (kappa + tau(h) * lam2));
    }
  });
}

void update_delta(ModelState& s, std::uint64_t seed, std::uint64_t iter) {
  const int p = static_cast<int>(s.lambda.rows());
  const int k = s.k;
  rng_stream rng(seed, iter, update_id::delta, 0);
  // column weights w_l = sum_j phi_jl lambda_jl^2, fixed during the delta scan
  VectorXd w(k);
  for (int h = 0; h < k; ++h)
    w(h) = (s.phi.col(h).array() * s.lambda.col(h).array().square()).sum();
  for (int h = 0; h < k; ++h) {
    // tau_l^(h): running product of the other deltas, current values
    double rate = 1.0;
    double run = 1.0;
    for (int l = 0; l < k; ++l) {
      if (l != h) run *= s.delta(l);
      if (l >= h) rate += 0.5 * run * w(l);
    }
    double shape = h == 0 ? s.a1 + 0.5 * p * k : s.a2 + 0.5 * p * (k - h);
    s.delta(h) = rng.gamma(shape, rate);
  }
}

namespace {

// log pi(a1) = log Ga(a1; 2, 1) + log Ga(delta_1; a1, 1), support a1 > 2
double log_target_a1(double x, double delta1) {
  return std::log(x) - x + (x - 1.0) * std::log(delta1) - std::lgamma(x);
}

// log pi(a2) = log Ga(a2; 2, 1) + sum_{l>=2} log Ga(delta_l; a2, 1), support a2 > 3
double log_target_a2(double x, const VectorXd& delta) {
  double out = std::log(x) - x;
  for (int l = 1; l < delta.size(); ++l) out += (x - 1.0) * std::log(delta(l));
  out -= (delta.size() - 1) * std::lgamma(x);
  return out;
}

// normalizer of N(c, sd^2) truncated to (bound, inf)
double trunc_mass(double c, double sd, double bound) {
  return 0.5 * std::erfc((bound - c) / (sd * std::sqrt(2.0)));
}

bool mh_truncated(double& value, double sd, double bound,
                  const std::function<double(double)>& log_target, rng_stream& rng) {
  double prop = rng.truncated_normal_above(value, sd, bound);
  // Hastings ratio carries Z(current)/Z(proposal) from the truncated proposal
  double log_ratio = log_target(prop) - log_target(value) +
                     std::log(trunc_mass(value, sd, bound)) -
                     std::log(trunc_mass(prop, sd, bound));
  if (std::log(rng.uniform()) < log_ratio) {
    value = prop;
    return true;
  }
  return false;
}

}  // namespace

MhOutcome update_a1_a2(ModelState& s, double mh_sd_a1, double mh_sd_a2,
                       std::uint64_t seed, std::uint64_t iter) {
  rng_stream rng(seed, iter, update_id::a1_a2, 0);
  MhOutcome out;
  double d1 = s.delta(0);
  out.accept_a1 = mh_truncated(
      s.a1, mh_sd_a1, 2.0, [&](double x) { return log_target_a1(x, d1); }, rng);
  out.accept_a2 = mh_truncated(
      s.a2, mh_sd_a2, 3.0, [&](double x) { return log_target_a2(x, s.delta); }, rng);
  return out;
}

double log_posterior_unnormalized(const ModelState& s, const Dataset& d,
                                  const SamplerConfig& cfg) {
  const int n = d.n();
  const int p = d.p();
  const int k = s.k;
  MatrixXd resid = d.y - s.eta * s.lambda.transpose();
  double lp = 0.0;
  // complete-data likelihood: y_i | eta_i, gamma_i ~ N(Lambda eta_i, Sigma / gamma_i)
  double log_det_sig_inv = s.sigma_inv.array().log().sum();
  for (int i = 0; i < n; ++i) {
    double quad = 0.0;
    for (int j = 0; j < p; ++j) quad += s.sigma_inv(j) * resid(i, j) * resid(i, j);
    lp += 0.5 * p * std::log(s.gamma(i)) + 0.5 * log_det_sig_inv - 0.5 * s.gamma(i) * quad;
    lp += -0.5 * s.gamma(i) * s.eta.row(i).squaredNorm() + 0.5 * k * std::log(s.gamma(i));
    if (cfg.likelihood == likelihood_mode::student_t) {
      double half_nu = 0.5 * cfg.nu;
      lp += half_nu * std::log(half_nu) - std::lgamma(half_nu) +
            (half_nu - 1.0) * std::log(s.gamma(i)) - half_nu * s.gamma(i);
    }
  }
  VectorXd tau = s.tau();
  for (int j = 0; j < p; ++j) {
    lp += (cfg.a_sigma - 1.0) * std::log(s.sigma_inv(j)) - cfg.b_sigma * s.sigma_inv(j);
    for (int h = 0; h < k; ++h) {
      double pt = s.phi(j, h) * tau(h);
      lp += 0.5 * std::log(pt) - 0.5 * pt * s.lambda(j, h) * s.lambda(j, h);
      lp += (0.5 * cfg.kappa - 1.0) * std::log(s.phi(j, h)) - 0.5 * cfg.kappa * s.phi(j, h);
    }
  }
  for (int h = 0; h < k; ++h) {
    double shape = h == 0 ? s.a1 : s.a2;
    lp += (shape - 1.0) * std::log(s.delta(h)) - s.delta(h) - std::lgamma(shape);
  }
  lp += std::log(s.a1) - s.a1 + std::log(s.a2) - s.a2;
  return lp;
}

namespace {

struct ChainAccumulator {
  MatrixXd mean;          // running mean of implied-covariance samples
  std::uint64_t n_samples = 0;
  std::vector<MatrixXd> samples;
  std::vector<int> k_trace;
  std::uint64_t accept_a1 = 0, accept_a2 = 0, mh_total = 0;
  double accept_nuts_sum = 0.0;
  std::uint64_t nuts_sweeps = 0, divergences = 0;
};

std::pair<int, int> k_interval(const std::vector<int>& trace, int burnin) {
  // central 95% by nearest order statistic, so both ends are attained values
  std::vector<int> post(trace.begin() + std::min<std::size_t>(burnin, trace.size()),
                        trace.end());
  if (post.empty()) post = trace;
  std::sort(post.begin(), post.end());
  auto at = [&](double q) {
    auto idx = static_cast<std::size_t>(std::llround(q * (post.size() - 1.0)));
    return post[idx];
  };
  return {at(0.025), at(0.975)};
}

PosteriorSummary drive_chain(const Dataset& data, const SamplerConfig& cfg,
                             ModelState s, long start_iteration, ChainAccumulator acc,
                             double sd_a1, double sd_a2, const sweep_logger& log) {
  const int p = data.p();
  auto t_start = std::chrono::steady_clock::now();
  // the estimand is the implied data covariance: nu/(nu-2) (LL^T + Sigma) under
  // the t likelihood, LL^T + Sigma under the normal one
  const double cov_factor =
      cfg.likelihood == likelihood_mode::student_t ? cfg.nu / (cfg.nu - 2.0) : 1.0;
  AdaptationPolicy policy{cfg.adapt_intercept, cfg.adapt_slope, cfg.trunc_threshold,
                          cfg.trunc_proportion, cfg.min_k, cfg.resolved_max_k(p)};
  if (acc.mean.size() == 0) acc.mean = MatrixXd::Zero(p, p);

  for (long t = start_iteration; t <= cfg.n_iterations; ++t) {
    try {
      update_loadings(s, data, cfg.seed, t, cfg.n_threads);
      update_error_precisions(s, data, cfg, cfg.seed, t, cfg.n_threads);
      FactorUpdateStats fs = update_factors(s, data, cfg, cfg.seed, t, cfg.n_threads);
      if (cfg.likelihood == likelihood_mode::student_t)
        update_gamma(s, data, cfg.nu, cfg.seed, t, cfg.n_threads);
      update_local_shrinkage(s, cfg.kappa, cfg.seed, t, cfg.n_threads);
      update_delta(s, cfg.seed, t);
      MhOutcome mh = update_a1_a2(s, sd_a1, sd_a2, cfg.seed, t);
      rng_stream adapt_rng(cfg.seed, t, update_id::adapt, 0);
      AdaptationEvent ev = adapt(s, t, policy, cfg.kappa, adapt_rng);

      acc.mh_total += 1;
      acc.accept_a1 += mh.accept_a1 ? 1 : 0;
      acc.accept_a2 += mh.accept_a2 ? 1 : 0;
      if (cfg.eta_sampler_mode == eta_mode::nuts) {
        acc.accept_nuts_sum += fs.mean_accept;
        acc.nuts_sweeps += 1;
        acc.divergences += fs.divergences;
      }
      if (cfg.mh_robbins_monro && t <= cfg.n_burnin) {
        // stochastic-approximation step toward the 50-70% acceptance band
        double step = 1.0 / std::pow(static_cast<double>(t), 0.6);
        sd_a1 *= std::exp(step * ((mh.accept_a1 ? 1.0 : 0.0) - 0.6));
        sd_a2 *= std::exp(step * ((mh.accept_a2 ? 1.0 : 0.0) - 0.6));
      }
      acc.k_trace.push_back(s.k);
      if (t > cfg.n_burnin && (t - cfg.n_burnin) % cfg.thin == 0) {
        MatrixXd omega = cov_factor * reconstruct_covariance(s.lambda, s.sigma_inv);
        acc.n_samples += 1;
        acc.mean += (omega - acc.mean) / static_cast<double>(acc.n_samples);
        if (p <= cfg.sample_cap) acc.samples.push_back(std::move(omega));
      }
      if (log) {
        SweepDiagnostics diag;
        diag.iteration = static_cast<int>(t);
        diag.k = s.k;
        diag.mh_accept_a1 = mh.accept_a1;
        diag.mh_accept_a2 = mh.accept_a2;
        diag.nuts_divergences = fs.divergences;
        diag.log_posterior_unnormalized = log_posterior_unnormalized(s, data, cfg);
        log(diag, ev);
      }
      if (!cfg.checkpoint_path.empty() &&
          (t % cfg.checkpoint_every == 0 || t == cfg.n_iterations)) {
        ChainCheckpoint ck;
        ck.state = s;
        ck.seed = cfg.seed;
        ck.next_iteration = t + 1;
        ck.mean_covariance = acc.mean;
        ck.n_samples = acc.n_samples;
        ck.k_trace = acc.k_trace;
        ck.accept_a1 = acc.accept_a1;
        ck.accept_a2 = acc.accept_a2;
        ck.mh_total = acc.mh_total;
        ck.accept_nuts_sum = acc.accept_nuts_sum;
        ck.nuts_sweeps = acc.nuts_sweeps;
        ck.divergences = acc.divergences;
        ck.sd_a1 = sd_a1;
        ck.sd_a2 = sd_a2;
        save_chain_checkpoint(cfg.checkpoint_path, ck);
      }
    } catch (const numerical_error& e) {
      // the in-sweep state is lost; the last written checkpoint is the recovery point
      std::string ref = cfg.checkpoint_path.empty() ? "none" : cfg.checkpoint_path;
      throw chain_error("numerical failure at iteration " + std::to_string(t) + ": " +
                            e.what(),
                        static_cast<int>(t), ref);
    }
  }

  PosteriorSummary out;
  out.mean_covariance = acc.n_samples > 0 ? acc.mean : MatrixXd::Zero(p, p);
  out.covariance_samples = std::move(acc.samples);
  out.k_trace = std::move(acc.k_trace);
  out.k_credible_interval = k_interval(out.k_trace, cfg.n_burnin);
  out.acceptance_rates["mh_a1"] =
      acc.mh_total ? static_cast<double>(acc.accept_a1) / acc.mh_total : 0.0;
  out.acceptance_rates["mh_a2"] =
      acc.mh_total ? static_cast<double>(acc.accept_a2) / acc.mh_total : 0.0;
  if (cfg.eta_sampler_mode == eta_mode::nuts && acc.nuts_sweeps > 0) {
    out.acceptance_rates["nuts_accept_stat"] = acc.accept_nuts_sum / acc.nuts_sweeps;
    out.acceptance_rates["nuts_divergence_rate"] =
        static_cast<double>(acc.divergences) / acc.nuts_sweeps;
  }
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

}  // namespace

PosteriorSummary run_chain(const Dataset& data, const SamplerConfig& config,
                           const sweep_logger& log) {
  config.validate();
  if (!data.y.allFinite()) throw std::invalid_argument("dataset contains non-finite entries");
  ModelState s = initialize_state(data.p(), data.n(), config);
  return drive_chain(data, config, std::move(s), 1, ChainAccumulator{}, config.mh_sd_a1,
                     config.mh_sd_a2, log);
}

PosteriorSummary resume_chain(const Dataset& data, const SamplerConfig& config,
                              const std::string& checkpoint_file, const sweep_logger& log) {
  config.validate();
  ChainCheckpoint ck = load_chain_checkpoint(checkpoint_file);
  if (ck.seed != config.seed)
    throw std::invalid_argument("checkpoint seed disagrees with config seed");
  ChainAccumulator acc;
  acc.mean = std::move(ck.mean_covariance);
  acc.n_samples = ck.n_samples;
  acc.k_trace = std::move(ck.k_trace);
  acc.accept_a1 = ck.accept_a1;
  acc.accept_a2 = ck.accept_a2;
  acc.mh_total = ck.mh_total;
  acc.accept_nuts_sum = ck.accept_nuts_sum;
  acc.nuts_sweeps = ck.nuts_sweeps;
  acc.divergences = ck.divergences;
  // note: the retained-sample list is not checkpointed; a resumed run carries the
  // exact running mean and k trace but only post-resume entries of the sample list
  return drive_chain(data, config, std::move(ck.state), ck.next_iteration, std::move(acc),
                     ck.sd_a1, ck.sd_a2, log);
}

}  // namespace rsbfm
