#include "rsbfm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rsbfm {

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void mat(const MatrixXd& m) {  // column-major, dimensions written by the caller
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
  }
  void vec(const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  MatrixXd mat(int rows, int cols) {
    MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = f64();
    return m;
  }
  VectorXd vec(int n) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = f64();
    return v;
  }
  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw std::runtime_error("checkpoint payload truncated");
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

void write_record(const std::string& path, std::uint32_t record_type,
                  const std::string& payload) {
  // write to a sibling temp file, then rename: no torn checkpoints on interrupt
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint file " + tmp.string());
    out.write("RSBF", 4);
    Writer head;
    head.u32(checkpoint_format_version);
    head.u32(record_type);
    head.u64(payload.size());
    out.write(head.bytes().data(), static_cast<std::streamsize>(head.bytes().size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

std::string read_record(const std::string& path, std::uint32_t expected_type) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint file " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RSBF", 4) != 0)
    throw std::runtime_error("bad checkpoint magic in " + path);
  std::string head(16, '\0');
  in.read(head.data(), 16);
  if (!in) throw std::runtime_error("truncated checkpoint header in " + path);
  Reader hr(head);
  std::uint32_t version = hr.u32();
  std::uint32_t rtype = hr.u32();
  std::uint64_t len = hr.u64();
  if (version != checkpoint_format_version)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  if (rtype != expected_type)
    throw std::runtime_error("checkpoint record type " + std::to_string(rtype) +
                             " does not match the expected type " +
                             std::to_string(expected_type));
  std::string payload(len, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint payload in " + path);
  return payload;
}

}  // namespace

void save_chain_checkpoint(const std::string& path, const ChainCheckpoint& ck) {
  const int p = static_cast<int>(ck.state.lambda.rows());
  const int n = static_cast<int>(ck.state.eta.rows());
  Writer w;
  w.u64(ck.seed);
  w.u64(ck.next_iteration);
  w.u32(static_cast<std::uint32_t>(p));
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(ck.state.k));
  w.f64(ck.state.a1);
  w.f64(ck.state.a2);
  w.f64(ck.sd_a1);
  w.f64(ck.sd_a2);
  w.mat(ck.state.lambda);
  w.vec(ck.state.sigma_inv);
  w.mat(ck.state.eta);
  w.vec(ck.state.gamma);
  w.mat(ck.state.phi);
  w.vec(ck.state.delta);
  w.u64(ck.n_samples);
  w.mat(ck.mean_covariance.size() ? ck.mean_covariance : MatrixXd::Zero(p, p));
  w.u64(ck.k_trace.size());
  for (int v : ck.k_trace) w.u32(static_cast<std::uint32_t>(v));
  w.u64(ck.accept_a1);
  w.u64(ck.accept_a2);
  w.u64(ck.mh_total);
  w.f64(ck.accept_nuts_sum);
  w.u64(ck.nuts_sweeps);
  w.u64(ck.divergences);
  write_record(path, record_type_chain, w.bytes());
}

ChainCheckpoint load_chain_checkpoint(const std::string& path) {
  Reader r(read_record(path, record_type_chain));
  ChainCheckpoint ck;
  ck.seed = r.u64();
  ck.next_iteration = r.u64();
  int p = static_cast<int>(r.u32());
  int n = static_cast<int>(r.u32());
  int k = static_cast<int>(r.u32());
  ck.state.k = k;
  ck.state.a1 = r.f64();
  ck.state.a2 = r.f64();
  ck.sd_a1 = r.f64();
  ck.sd_a2 = r.f64();
  ck.state.lambda = r.mat(p, k);
  ck.state.sigma_inv = r.vec(p);
  ck.state.eta = r.mat(n, k);
  ck.state.gamma = r.vec(n);
  ck.state.phi = r.mat(p, k);
  ck.state.delta = r.vec(k);
  ck.n_samples = r.u64();
  ck.mean_covariance = r.mat(p, p);
  std::uint64_t klen = r.u64();
  ck.k_trace.resize(klen);
  for (std::uint64_t i = 0; i < klen; ++i) ck.k_trace[i] = static_cast<int>(r.u32());
  ck.accept_a1 = r.u64();
  ck.accept_a2 = r.u64();
  ck.mh_total = r.u64();
  ck.accept_nuts_sum = r.f64();
  ck.nuts_sweeps = r.u64();
  ck.divergences = r.u64();
  if (!r.exhausted()) throw std::runtime_error("trailing bytes in checkpoint " + path);
  ck.state.check_invariants();
  return ck;
}

void save_classifier_checkpoint(const std::string& path, const ClassifierCheckpoint& ck) {
  const int p = static_cast<int>(ck.mu0.size());
  Writer w;
  w.u32(static_cast<std::uint32_t>(p));
  w.f64(ck.nu);
  w.f64(ck.xi);
  w.vec(ck.mu0);
  w.vec(ck.mu1);
  w.mat(ck.omega0);
  w.mat(ck.omega1);
  write_record(path, record_type_classifier, w.bytes());
}

ClassifierCheckpoint load_classifier_checkpoint(const std::string& path) {
  Reader r(read_record(path, record_type_classifier));
  ClassifierCheckpoint ck;
  int p = static_cast<int>(r.u32());
  ck.nu = r.f64();
  ck.xi = r.f64();
  ck.mu0 = r.vec(p);
  ck.mu1 = r.vec(p);
  ck.omega0 = r.mat(p, p);
  ck.omega1 = r.mat(p, p);
  if (!r.exhausted()) throw std::runtime_error("trailing bytes in checkpoint " + path);
  return ck;
}

}  // namespace rsbfm
