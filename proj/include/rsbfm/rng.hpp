#pragma once
// Counter-based RNG (Philox2x64-10). Every update site opens a fresh stream
// keyed by (seed, iteration, update id, index), so serial and parallel
// execution produce bitwise-identical chains.
#include <cstdint>
#include <cmath>
#include <array>

namespace rsbfm {

// splitmix64 finalizer; used to derive stream keys with good avalanche
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// one Philox2x64 block: 10 rounds over the 128-bit counter (c0,c1)
inline std::array<std::uint64_t, 2> philox2x64(std::uint64_t c0, std::uint64_t c1,
                                               std::uint64_t key) {
  constexpr std::uint64_t M = 0xD2B74407B1CE6E93ULL;
  constexpr std::uint64_t W = 0x9E3779B97F4A7C15ULL;
  for (int r = 0; r < 10; ++r) {
    unsigned __int128 prod = static_cast<unsigned __int128>(M) * c0;
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
    std::uint64_t lo = static_cast<std::uint64_t>(prod);
    c0 = hi ^ key ^ c1;
    c1 = lo;
    key += W;
  }
  return {c0, c1};
}

// update-site identifiers; part of the stream key, keep values stable
enum class update_id : std::uint32_t {
  loadings = 1,
  error_precisions = 2,
  factors = 3,
  mixture_scales = 4,
  local_shrinkage = 5,
  delta = 6,
  a1_a2 = 7,
  adapt = 8,
  init = 9,
  generator = 10,
  misc = 11,
};

class rng_stream {
 public:
  rng_stream(std::uint64_t seed, std::uint64_t iteration, update_id id,
             std::uint64_t index)
      : key_(mix64(mix64(mix64(mix64(seed) ^ iteration) ^
                         static_cast<std::uint64_t>(id)) ^
                   index)) {}

  std::uint64_t next_u64() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    auto b = philox2x64(ctr_++, 0, key_);
    spare_ = b[1];
    have_ = true;
    return b[0];
  }

  // uniform on the open interval (0,1); safe under log()
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Marsaglia polar method, pair cached within the stream
  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return spare_normal_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * f;
    have_normal_ = true;
    return u * f;
  }

  // Marsaglia-Tsang; shape/rate parameterization throughout
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      // boost: G(a) = G(a+1) * U^(1/a)
      double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  double chi_squared(double df) { return 2.0 * gamma(0.5 * df, 1.0); }

  // N(mean, sd^2) truncated to (lower, inf); rejection is fine here because
  // callers keep mean >= lower - few sd (MH proposals around the current value)
  double truncated_normal_above(double mean, double sd, double lower) {
    for (;;) {
      double x = mean + sd * normal();
      if (x > lower) return x;
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  std::uint64_t spare_ = 0;
  bool have_ = false;
  double spare_normal_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace rsbfm
