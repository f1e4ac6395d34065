#include "zdjscc/matlib/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "zdjscc/error.hpp"
#include "zdjscc/matlib/kernels.hpp"

namespace zdjscc {
namespace {

void require_square(const Matrix& a, const char* op) {
  if (!a.is_square()) {
    throw Error(ErrorCode::DimensionMismatch, fmt::format("{}: {}x{} is not square", op, a.rows(), a.cols()));
  }
}

// In-place LU with partial pivoting on a row-major n x n buffer.
struct LuFactors {
  std::size_t n = 0;
  std::vector<double> lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

LuFactors lu_factor(const Matrix& a, const Tolerances& tol) {
  LuFactors f;
  f.n = a.rows();
  f.lu = a.to_vector();
  f.perm.resize(f.n);
  std::iota(f.perm.begin(), f.perm.end(), 0);
  const std::size_t n = f.n;
  const double pivot_tol = tol.pivot_rel * a.max_abs();
  double* m = f.lu.data();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(m[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(m[i * n + k]) > best) {
        best = std::abs(m[i * n + k]);
        p = i;
      }
    }
    if (best <= pivot_tol || best == 0.0) {
      f.singular = true;
      return f;
    }
    if (p != k) {
      std::swap_ranges(m + k * n, m + (k + 1) * n, m + p * n);
      std::swap(f.perm[k], f.perm[p]);
      f.sign = -f.sign;
    }
    const double pivot = m[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = m[i * n + k] / pivot;
      m[i * n + k] = factor;
      if (factor != 0.0) kernels::axpy(-factor, m + k * n + k + 1, m + i * n + k + 1, n - k - 1);
    }
  }
  return f;
}

// Solves for every column of b (row-major n x c) in place.
void lu_substitute(const LuFactors& f, std::vector<double>& b, std::size_t c) {
  const std::size_t n = f.n;
  std::vector<double> x(n * c);
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(b.data() + f.perm[i] * c, c, x.data() + i * c);
  const double* m = f.lu.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < i; ++k) {
      const double l = m[i * n + k];
      if (l != 0.0) kernels::axpy(-l, x.data() + k * c, x.data() + i * c, c);
    }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double u = m[ii * n + k];
      if (u != 0.0) kernels::axpy(-u, x.data() + k * c, x.data() + ii * c, c);
    }
    kernels::scale(1.0 / m[ii * n + ii], x.data() + ii * c, c);
  }
  b = std::move(x);
}

struct CholeskyResult {
  Definiteness kind = Definiteness::PD;
  std::vector<double> l;  // n x n lower factor in pivoted order
  std::vector<std::size_t> perm;
};

Matrix checked_symmetrize(const Matrix& s, const Tolerances& tol) {
  require_square(s, "psd_check");
  const double scale = std::max(1.0, s.max_abs());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > tol.symmetry * scale) {
        throw Error(ErrorCode::NotSymmetric,
                    fmt::format("asymmetry {:.3g} at ({}, {})", std::abs(s(i, j) - s(j, i)), i, j));
      }
  return s.symmetrized();
}

CholeskyResult pivoted_cholesky(const Matrix& sym, double shift, std::optional<double> abs_tol,
                                const Tolerances& tol) {
  const std::size_t n = sym.rows();
  std::vector<double> m = sym.to_vector();
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] -= shift;
  double norm = 0.0;
  for (double v : m) norm = std::max(norm, std::abs(v));
  const double t = abs_tol.value_or(tol.pivot_rel * norm);

  CholeskyResult r;
  r.l.assign(n * n, 0.0);
  r.perm.resize(n);
  std::iota(r.perm.begin(), r.perm.end(), 0);

  auto swap_sym = [&](std::size_t a, std::size_t b) {
    for (std::size_t j = 0; j < n; ++j) std::swap(m[a * n + j], m[b * n + j]);
    for (std::size_t i = 0; i < n; ++i) std::swap(m[i * n + a], m[i * n + b]);
    for (std::size_t j = 0; j < n; ++j) std::swap(r.l[a * n + j], r.l[b * n + j]);
    std::swap(r.perm[a], r.perm[b]);
  };

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double dmin = m[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      if (m[i * n + i] > m[p * n + p]) p = i;
      dmin = std::min(dmin, m[i * n + i]);
    }
    if (dmin < -t) {
      r.kind = Definiteness::Indefinite;
      return r;
    }
    if (m[p * n + p] <= t) {
      // Remaining block must vanish: a PSD matrix with (near) zero diagonal
      // has (near) zero off-diagonals.
      for (std::size_t i = k; i < n; ++i)
        for (std::size_t j = k; j < i; ++j) {
          const double bound = std::sqrt((std::abs(m[i * n + i]) + t) * (std::abs(m[j * n + j]) + t));
          if (std::abs(m[i * n + j]) > bound) {
            r.kind = Definiteness::Indefinite;
            return r;
          }
        }
      r.kind = Definiteness::PSD;
      return r;
    }
    if (p != k) swap_sym(k, p);
    const double lkk = std::sqrt(m[k * n + k]);
    r.l[k * n + k] = lkk;
    for (std::size_t i = k + 1; i < n; ++i) r.l[i * n + k] = m[i * n + k] / lkk;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double lik = r.l[i * n + k];
      for (std::size_t j = k + 1; j <= i; ++j) {
        m[i * n + j] -= lik * r.l[j * n + k];
        m[j * n + i] = m[i * n + j];
      }
    }
  }
  r.kind = Definiteness::PD;
  return r;
}

}  // namespace

Matrix lu_solve(const Matrix& a, const Matrix& b, const Tolerances& tol) {
  require_square(a, "lu_solve");
  if (b.rows() != a.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("lu_solve: A is {}x{}, B has {} rows", a.rows(), a.cols(), b.rows()));
  }
  const LuFactors f = lu_factor(a, tol);
  if (f.singular) throw Error(ErrorCode::SingularMatrix, "lu_solve: pivot below tolerance");
  std::vector<double> x = b.to_vector();
  lu_substitute(f, x, b.cols());
  return Matrix(b.rows(), b.cols(), std::move(x));
}

Matrix inverse(const Matrix& a, const Tolerances& tol) { return lu_solve(a, Matrix::identity(a.rows()), tol); }

double determinant(const Matrix& a, const Tolerances& tol) {
  require_square(a, "determinant");
  const LuFactors f = lu_factor(a, tol);
  if (f.singular) return 0.0;
  double det = f.sign;
  for (std::size_t i = 0; i < f.n; ++i) det *= f.lu[i * f.n + i];
  return det;
}

const char* to_string(Definiteness d) noexcept {
  switch (d) {
    case Definiteness::PD: return "PD";
    case Definiteness::PSD: return "PSD";
    case Definiteness::Indefinite: return "Indefinite";
  }
  return "?";
}

Definiteness psd_check(const Matrix& s, double shift, std::optional<double> abs_tol, const Tolerances& tol) {
  const Matrix sym = checked_symmetrize(s, tol);
  return pivoted_cholesky(sym, shift, abs_tol, tol).kind;
}

Matrix cholesky_psd(const Matrix& s, const Tolerances& tol) {
  const Matrix sym = checked_symmetrize(s, tol);
  const std::size_t n = sym.rows();
  // Pivots below a relative 1e-12 are null directions, not failures.
  const CholeskyResult r = pivoted_cholesky(sym, 0.0, std::nullopt, tol);
  if (r.kind == Definiteness::Indefinite) throw Error(ErrorCode::NotPSD, "cholesky_psd: matrix is indefinite");
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(r.l.data() + i * n, n, out.data() + r.perm[i] * n);
  return Matrix(n, n, std::move(out));
}

double min_symmetric_eigenvalue(const Matrix& s, const Tolerances& tol) {
  const auto ev = eigenvalues(s.symmetrized(), tol);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& z : ev) m = std::min(m, z.real());
  return m;
}

double spectral_radius(const Matrix& a, const Tolerances& tol) {
  double r = 0.0;
  for (const auto& z : eigenvalues(a, tol)) r = std::max(r, std::abs(z));
  return r;
}

Matrix stein_solve(const Matrix& a, const Matrix& b, const Matrix& w, const Tolerances& tol) {
  require_square(a, "stein_solve");
  require_square(b, "stein_solve");
  const std::size_t na = a.rows();
  const std::size_t nb = b.rows();
  if (w.rows() != na || w.cols() != nb) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("stein_solve: W is {}x{}, expected {}x{}", w.rows(), w.cols(), na, nb));
  }
  if (na == 0 || nb == 0) return Matrix(na, nb);

  const auto ea = eigenvalues(a, tol);
  const auto eb = eigenvalues(b, tol);
  for (const auto& la : ea)
    for (const auto& lb : eb)
      if (std::abs(1.0 - la * lb) <= tol.resonance) {
        throw Error(ErrorCode::ResonantSpectrum,
                    fmt::format("eigenvalue product ({:.6g}{:+.6g}i) is within {:.1e} of 1", (la * lb).real(),
                                (la * lb).imag(), tol.resonance));
      }

  // Unknown (i, j) -> i * nb + j; row (i, j), column (p, q): delta - A_ip B_jq.
  const std::size_t n = na * nb;
  std::vector<double> k(n * n, 0.0);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      double* row = k.data() + (i * nb + j) * n;
      for (std::size_t p = 0; p < na; ++p) {
        const double aip = a(i, p);
        if (aip == 0.0) continue;
        kernels::axpy(-aip, b.row_span(j).data(), row + p * nb, nb);
      }
      row[i * nb + j] += 1.0;
    }
  const Matrix system(n, n, std::move(k));
  const LuFactors f = lu_factor(system, tol);
  if (f.singular) throw Error(ErrorCode::ResonantSpectrum, "stein_solve: vectorized system is singular");

  std::vector<double> x = w.to_vector();
  lu_substitute(f, x, 1);
  // One step of iterative refinement on the residual.
  std::vector<double> res = w.to_vector();
  for (std::size_t r = 0; r < n; ++r) res[r] -= kernels::dot(system.row_span(r).data(), x.data(), n);
  lu_substitute(f, res, 1);
  kernels::axpy(1.0, res.data(), x.data(), n);
  return Matrix(na, nb, std::move(x));
}

double stein_residual(const Matrix& a, const Matrix& b, const Matrix& w, const Matrix& x) {
  return (x - a * x * b.transpose() - w).max_abs();
}

}  // namespace zdjscc
