#include "zdjscc/matlib/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace zdjscc::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

constexpr KernelTable kScalar{dot_scalar, sum_squares_scalar, axpy_scalar, scale_scalar};

const KernelTable* pick_default() noexcept {
  if (const char* env = std::getenv("ZDJSCC_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return &kScalar;
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

Backend active_backend() noexcept {
  const KernelTable* t = slot().load(std::memory_order_relaxed);
  if (t == avx2_table()) return Backend::Avx2;
  if (t == neon_table()) return Backend::Neon;
  return Backend::Scalar;
}

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
    case Backend::Scalar: break;
  }
  return "scalar";
}

bool set_backend(Backend b) noexcept {
  const KernelTable* t = nullptr;
  switch (b) {
    case Backend::Scalar: t = &kScalar; break;
    case Backend::Avx2: t = avx2_table(); break;
    case Backend::Neon: t = neon_table(); break;
  }
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace zdjscc::kernels
