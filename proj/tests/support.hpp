#pragma once

// Shared test helpers: seeded generators for random matrices and models,
// and scratch directories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "zdjscc/matlib/matrix.hpp"
#include "zdjscc/model/model.hpp"

namespace testing {

using zdjscc::Matrix;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  bool coin() { return integer(0, 1) == 1; }
  double sign() { return coin() ? 1.0 : -1.0; }

  Matrix gaussian(std::size_t r, std::size_t c) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = normal();
    return Matrix(r, c, std::move(v));
  }

  /// Random square matrix rescaled to spectral norm bound `rho` (Frobenius
  /// bound, so the spectral radius is below rho).
  Matrix contraction(std::size_t n, double rho) {
    const Matrix g = gaussian(n, n);
    const double f = g.frobenius_norm();
    return f > 0.0 ? g * (rho / f) : g;
  }

  /// SPD matrix G G^T + eps I.
  Matrix spd(std::size_t n, double eps = 0.1) {
    const Matrix g = gaussian(n, n);
    return (g * g.transpose() + eps * Matrix::identity(n)).symmetrized();
  }

  /// n values with distinct magnitudes in (lo, hi), random signs, magnitude gap >= gap.
  std::vector<double> distinct_magnitudes(std::size_t n, double lo, double hi, double gap = 0.05) {
    for (;;) {
      std::vector<double> v(n);
      for (auto& x : v) x = uniform(lo, hi);
      std::vector<double> s = v;
      std::sort(s.begin(), s.end());
      bool ok = true;
      for (std::size_t i = 1; i < n; ++i) ok = ok && s[i] - s[i - 1] > gap;
      if (!ok) continue;
      for (auto& x : v) x *= sign();
      return v;
    }
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

/// Unit-norm random row of length n.
inline Matrix unit_row(Gen& g, std::size_t n) {
  Matrix h = g.gaussian(1, n);
  return h / h.frobenius_norm();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / ("zdjscc_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace testing
