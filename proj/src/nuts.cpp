#include "rsbfm/nuts.hpp"

#include <cmath>
#include <limits>

#include "rsbfm/linalg.hpp"

namespace rsbfm {

namespace {

// log(exp(a) + exp(b)) without overflow
double log_add_exp(double a, double b) {
  double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

using Phase = PhasePoint;

struct Tree {
  Phase minus, plus;   // trajectory extremes
  VectorXd proposal;   // multinomial draw from the subtree
  double log_w;        // log total leaf weight, relative to H0
  double sum_accept;   // sum of min(1, exp(H - H0)) over leaves
  int n_leaves;
  bool valid;          // false on divergence or internal U-turn
  bool diverged;
};

// (x+ - x-).r- >= 0 and (x+ - x-).r+ >= 0, the original termination criterion
bool no_u_turn(const Phase& minus, const Phase& plus) {
  VectorXd d = plus.x - minus.x;
  return d.dot(minus.r) >= 0.0 && d.dot(plus.r) >= 0.0;
}

class TreeBuilder {
 public:
  TreeBuilder(const log_density_grad_fn& target, double eps, rng_stream& rng, double h0)
      : target_(target), eps_(eps), rng_(rng), h0_(h0) {}

  Phase leapfrog(const Phase& z, int dir) { return leapfrog_step(z, dir * eps_, target_); }

  Tree build(const Phase& from, int dir, int depth) {
    if (depth == 0) {
      Phase z = leapfrog(from, dir);
      double h = z.logp - 0.5 * z.r.squaredNorm();
      Tree t;
      t.minus = z;
      t.plus = z;
      t.proposal = z.x;
      t.log_w = h - h0_;
      t.diverged = !(h0_ - h < nuts_divergence_threshold) || !std::isfinite(h);
      t.valid = !t.diverged;
      t.sum_accept = t.diverged ? 0.0 : std::min(1.0, std::exp(h - h0_));
      t.n_leaves = 1;
      return t;
    }
    Tree first = build(from, dir, depth - 1);
    if (!first.valid) return first;
    Tree second = build(dir == 1 ? first.plus : first.minus, dir, depth - 1);
    Tree t;
    t.minus = dir == 1 ? first.minus : second.minus;
    t.plus = dir == 1 ? second.plus : first.plus;
    t.log_w = log_add_exp(first.log_w, second.log_w);
    // within-subtree multinomial: pick the second half's draw with its weight share
    t.proposal = (std::log(rng_.uniform()) < second.log_w - t.log_w) ? second.proposal
                                                                     : first.proposal;
    t.sum_accept = first.sum_accept + second.sum_accept;
    t.n_leaves = first.n_leaves + second.n_leaves;
    t.diverged = second.diverged;
    t.valid = second.valid && no_u_turn(t.minus, t.plus);
    return t;
  }

 private:
  const log_density_grad_fn& target_;
  double eps_;
  rng_stream& rng_;
  double h0_;
};

}  // namespace

PhasePoint leapfrog_step(const PhasePoint& z, double signed_eps,
                         const log_density_grad_fn& target) {
  PhasePoint out;
  out.r = z.r + 0.5 * signed_eps * z.grad;
  out.x = z.x + signed_eps * out.r;
  out.grad.resize(z.x.size());
  out.logp = target(out.x, out.grad);
  out.r += 0.5 * signed_eps * out.grad;
  return out;
}

NutsOutcome nuts_step(const VectorXd& current, const log_density_grad_fn& target,
                      double step_size, int max_depth, rng_stream& rng) {
  const int k = static_cast<int>(current.size());
  Phase z0;
  z0.x = current;
  z0.grad.resize(k);
  z0.logp = target(current, z0.grad);
  if (!z0.grad.allFinite() || !std::isfinite(z0.logp))
    throw std::runtime_error("non-finite gradient at the current point");
  z0.r.resize(k);
  for (int i = 0; i < k; ++i) z0.r(i) = rng.normal();
  double h0 = z0.logp - 0.5 * z0.r.squaredNorm();

  TreeBuilder builder(target, step_size, rng, h0);
  Tree main;
  main.minus = z0;
  main.plus = z0;
  main.proposal = current;
  main.log_w = 0.0;  // the start point carries weight exp(H0 - H0) = 1
  main.sum_accept = 0.0;
  main.n_leaves = 0;
  main.valid = true;
  main.diverged = false;

  NutsOutcome out;
  out.new_point = current;
  for (int depth = 0; depth < max_depth; ++depth) {
    int dir = rng.uniform() < 0.5 ? -1 : 1;
    Tree sub = builder.build(dir == 1 ? main.plus : main.minus, dir, depth);
    main.sum_accept += sub.sum_accept;
    main.n_leaves += sub.n_leaves;
    if (!sub.valid) {
      out.diverged = sub.diverged;
      break;
    }
    // biased progressive sampling favors the fresh half of the trajectory
    if (std::log(rng.uniform()) < sub.log_w - main.log_w) main.proposal = sub.proposal;
    main.log_w = log_add_exp(main.log_w, sub.log_w);
    if (dir == 1)
      main.plus = sub.plus;
    else
      main.minus = sub.minus;
    out.tree_depth_reached = depth + 1;
    if (!no_u_turn(main.minus, main.plus)) break;
  }
  out.new_point = main.proposal;
  out.accept_stat = main.n_leaves > 0 ? main.sum_accept / main.n_leaves : 1.0;
  return out;
}

VectorXd sample_mvt(double df, const VectorXd& location, const MatrixXd& scale,
                    rng_stream& rng) {
  const int k = static_cast<int>(location.size());
  MatrixXd l = cholesky_lower(scale);
  VectorXd z(k);
  for (int i = 0; i < k; ++i) z(i) = rng.normal();
  double w = rng.chi_squared(df);
  return location + std::sqrt(df / w) * (l * z);
}

}  // namespace rsbfm
