#pragma once

#include <cstdint>
#include <random>

#include "zdjscc/matlib/matrix.hpp"

namespace zdjscc {

/// Seeded generator for one simulation stream.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the standard).
/// Stream seeds are splitmix64(seed ^ splitmix64(stream + 1)). Uniforms use
/// the top 53 bits; normals use the Box-Muller transform with both outputs
/// consumed. Distribution objects from <random> are avoided because their
/// algorithms are implementation-defined.
class RngState {
 public:
  explicit RngState(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Draws from N(0, Sigma) using a pivoted PSD-tolerant Cholesky factor.
/// Throws NotPSD if Sigma is indefinite beyond tolerance.
Matrix sample_mvn(RngState& rng, const Matrix& sigma);

/// Factor-once sampler for repeated draws in the simulation loop.
class MvnSampler {
 public:
  explicit MvnSampler(const Matrix& sigma);

  std::size_t dim() const noexcept { return factor_.rows(); }
  /// Writes L g into out[0..dim).
  void draw(RngState& rng, double* out) const;

 private:
  Matrix factor_;
};

}  // namespace zdjscc
