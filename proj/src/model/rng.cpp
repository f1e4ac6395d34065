#include "zdjscc/model/rng.hpp"

#include <cmath>
#include <numbers>

#include "zdjscc/matlib/linalg.hpp"

namespace zdjscc {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngState::RngState(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream + 1))) {}

double RngState::uniform() {
  // (k + 0.5) / 2^53 lies strictly inside (0, 1).
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double RngState::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

MvnSampler::MvnSampler(const Matrix& sigma) : factor_(cholesky_psd(sigma)) {}

void MvnSampler::draw(RngState& rng, double* out) const {
  const std::size_t n = factor_.rows();
  // L is lower triangular only up to a row permutation, so use the full row.
  double g[64];
  std::vector<double> heap;
  double* z = g;
  if (n > 64) {
    heap.resize(n);
    z = heap.data();
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const auto row = factor_.row_span(i);
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * z[j];
    out[i] = acc;
  }
}

Matrix sample_mvn(RngState& rng, const Matrix& sigma) {
  const MvnSampler sampler(sigma);
  const std::size_t n = sampler.dim();
  std::vector<double> v(n);
  sampler.draw(rng, v.data());
  return Matrix(n, 1, std::move(v));
}

}  // namespace zdjscc
