#pragma once

// Runtime-dispatched inner loops for the dense linear algebra.
//
// Every kernel has a scalar reference implementation; vector variants
// (AVX2 on x86-64, NEON on AArch64) are selected once at startup when the
// CPU supports them. Elementwise kernels (axpy, scale) are bit-identical to
// the scalar reference. Reductions (dot, sum_squares) reassociate and agree
// to a few ulps of sum(|x_i*y_i|).
//
// Set ZDJSCC_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <string_view>

namespace zdjscc::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x *= a
  void (*scale)(double a, double* x, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// Nullptr when the variant is not compiled in or not supported by this CPU.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

/// Table chosen at startup (or by set_backend).
const KernelTable& active() noexcept;
Backend active_backend() noexcept;
std::string_view backend_name(Backend b) noexcept;

/// Returns false (and leaves the active table untouched) if unavailable.
bool set_backend(Backend b) noexcept;

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline double sum_squares(const double* x, std::size_t n) { return active().sum_squares(x, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline void scale(double a, double* x, std::size_t n) { active().scale(a, x, n); }

}  // namespace zdjscc::kernels
