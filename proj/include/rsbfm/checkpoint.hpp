#pragma once
// Versioned binary checkpoints. Framing: magic "RSBF", u32 format version,
// u32 record type (1 = chain, 2 = classifier), u64 payload length, payload.
// All integers and IEEE doubles are little-endian; matrices column-major.
#include <cstdint>
#include <string>
#include <vector>

#include "rsbfm/types.hpp"

namespace rsbfm {

inline constexpr std::uint32_t checkpoint_format_version = 1;
inline constexpr std::uint32_t record_type_chain = 1;
inline constexpr std::uint32_t record_type_classifier = 2;

struct ChainCheckpoint {
  ModelState state;
  std::uint64_t seed = 0;
  std::uint64_t next_iteration = 1;
  MatrixXd mean_covariance;  // running mean over retained samples
  std::uint64_t n_samples = 0;
  std::vector<int> k_trace;
  std::uint64_t accept_a1 = 0, accept_a2 = 0, mh_total = 0;
  double accept_nuts_sum = 0.0;
  std::uint64_t nuts_sweeps = 0, divergences = 0;
  double sd_a1 = 0.2, sd_a2 = 0.2;  // live proposal scales (Robbins-Monro)
};

void save_chain_checkpoint(const std::string& path, const ChainCheckpoint& ck);
ChainCheckpoint load_chain_checkpoint(const std::string& path);

struct ClassifierCheckpoint {
  VectorXd mu0, mu1;
  MatrixXd omega0, omega1;
  double nu = 5.0;
  double xi = 0.0;
};

void save_classifier_checkpoint(const std::string& path, const ClassifierCheckpoint& ck);
ClassifierCheckpoint load_classifier_checkpoint(const std::string& path);

}  // namespace rsbfm
