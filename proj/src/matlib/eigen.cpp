#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "zdjscc/error.hpp"
#include "zdjscc/matlib/linalg.hpp"

namespace zdjscc {
namespace {

using cplx = std::complex<double>;

// Householder reduction to upper Hessenberg form, in place (row-major n x n).
void to_hessenberg(std::vector<double>& h, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm += h[i * n + k] * h[i * n + k];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double x0 = h[(k + 1) * n + k];
    const double alpha = x0 > 0.0 ? -norm : norm;
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = h[i * n + k];
      if (i == k + 1) v[i] -= alpha;
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    // H <- (I - 2vv^T/v^Tv) H
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h[i * n + j];
      s *= 2.0 / vnorm2;
      for (std::size_t i = k + 1; i < n; ++i) h[i * n + j] -= s * v[i];
    }
    // H <- H (I - 2vv^T/v^Tv)
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += h[i * n + j] * v[j];
      s *= 2.0 / vnorm2;
      for (std::size_t j = k + 1; j < n; ++j) h[i * n + j] -= s * v[j];
    }
    for (std::size_t i = k + 2; i < n; ++i) h[i * n + k] = 0.0;
  }
}

cplx wilkinson_shift(cplx a, cplx b, cplx c, cplx d) {
  const cplx half_tr = 0.5 * (a + d);
  const cplx disc = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
  const cplx l1 = half_tr + disc;
  const cplx l2 = half_tr - disc;
  return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Matrix& a, const Tolerances& tol) {
  if (!a.is_square()) throw Error(ErrorCode::DimensionMismatch, "eigenvalues: matrix not square");
  const std::size_t n = a.rows();
  std::vector<cplx> out(n);
  if (n == 0) return out;
  if (n == 1) {
    out[0] = a(0, 0);
    return out;
  }

  std::vector<double> hr = a.to_vector();
  to_hessenberg(hr, n);
  std::vector<cplx> h(hr.begin(), hr.end());
  auto H = [&](std::size_t i, std::size_t j) -> cplx& { return h[i * n + j]; };

  const double eps = std::numeric_limits<double>::epsilon();
  double hnorm = 0.0;
  for (const auto& z : h) hnorm = std::max(hnorm, std::abs(z));

  std::vector<double> cs(n);
  std::vector<cplx> sn(n);
  std::size_t hi = n - 1;
  int iter = 0;
  int total = 0;
  const int max_total = tol.eigen_max_iter_per_value * static_cast<int>(n);

  while (true) {
    // Find the start of the active unreduced block ending at hi.
    std::size_t l = hi;
    while (l > 0) {
      double s = std::abs(H(l, l)) + std::abs(H(l - 1, l - 1));
      if (s == 0.0) s = hnorm;
      if (std::abs(H(l, l - 1)) <= eps * s) {
        H(l, l - 1) = 0.0;
        break;
      }
      --l;
    }
    if (l == hi) {
      out[hi] = H(hi, hi);
      if (hi == 0) break;
      --hi;
      iter = 0;
      continue;
    }
    if (++total > max_total) {
      throw Error(ErrorCode::NoConvergence, fmt::format("eigenvalues: QR did not converge in {} sweeps", total));
    }
    ++iter;

    cplx mu;
    if (iter % 11 == 0) {
      mu = H(hi, hi) + 0.75 * std::abs(H(hi, hi - 1));  // exceptional shift
    } else {
      mu = wilkinson_shift(H(hi - 1, hi - 1), H(hi - 1, hi), H(hi, hi - 1), H(hi, hi));
    }

    for (std::size_t j = l; j <= hi; ++j) H(j, j) -= mu;
    for (std::size_t j = l; j < hi; ++j) {
      const cplx x = H(j, j);
      const cplx y = H(j + 1, j);
      const double r = std::hypot(std::abs(x), std::abs(y));
      double c;
      cplx s;
      if (r == 0.0) {
        c = 1.0;
        s = 0.0;
      } else if (std::abs(x) == 0.0) {
        c = 0.0;
        s = std::conj(y) / r;
      } else {
        c = std::abs(x) / r;
        s = (x / std::abs(x)) * std::conj(y) / r;
      }
      cs[j] = c;
      sn[j] = s;
      for (std::size_t col = j; col <= hi; ++col) {
        const cplx u = H(j, col);
        const cplx v = H(j + 1, col);
        H(j, col) = c * u + s * v;
        H(j + 1, col) = -std::conj(s) * u + c * v;
      }
    }
    for (std::size_t j = l; j < hi; ++j) {
      const double c = cs[j];
      const cplx s = sn[j];
      const std::size_t last = std::min(j + 2, hi);
      for (std::size_t row = l; row <= last; ++row) {
        const cplx u = H(row, j);
        const cplx v = H(row, j + 1);
        H(row, j) = u * c + v * std::conj(s);
        H(row, j + 1) = -u * s + v * c;
      }
    }
    for (std::size_t j = l; j <= hi; ++j) H(j, j) += mu;
  }
  return out;
}

}  // namespace zdjscc
