#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "zdjscc/matlib/matrix.hpp"

namespace zdjscc {

/// Numerical tolerances shared by the solvers. Relative tolerances scale with
/// the max-abs norm of the operand.
struct Tolerances {
  double pivot_rel = 1e-12;
  double symmetry = 1e-9;
  double eigen = 1e-8;
  double resonance = 1e-9;
  int eigen_max_iter_per_value = 60;
};

/// Solves A X = B by LU with partial pivoting.
/// Throws SingularMatrix when a pivot falls below pivot_rel * ||A||_max.
Matrix lu_solve(const Matrix& a, const Matrix& b, const Tolerances& tol = {});

Matrix inverse(const Matrix& a, const Tolerances& tol = {});

/// Product of LU pivots with permutation sign; 0 when a pivot is below tolerance.
double determinant(const Matrix& a, const Tolerances& tol = {});

enum class Definiteness { PD, PSD, Indefinite };

const char* to_string(Definiteness d) noexcept;

/// Classifies S - shift*I with a diagonally pivoted Cholesky factorization.
/// S is symmetrized first; asymmetry beyond tol.symmetry * max(1, ||S||_max)
/// throws NotSymmetric. Pivots within [-t, t] are treated as zero, where t is
/// abs_tol if given, else pivot_rel * ||S - shift*I||_max.
Definiteness psd_check(const Matrix& s, double shift = 0.0, std::optional<double> abs_tol = std::nullopt,
                       const Tolerances& tol = {});

/// Lower factor L with L L^T = S for symmetric PSD S (columns belonging to a
/// numerically null direction are zero). Throws NotPSD if S is indefinite.
Matrix cholesky_psd(const Matrix& s, const Tolerances& tol = {});

/// All eigenvalues with multiplicity, in no particular order.
/// Hessenberg reduction followed by shifted complex QR.
std::vector<std::complex<double>> eigenvalues(const Matrix& a, const Tolerances& tol = {});

/// Minimum eigenvalue of a symmetric matrix (real part of the spectrum).
double min_symmetric_eigenvalue(const Matrix& s, const Tolerances& tol = {});

double spectral_radius(const Matrix& a, const Tolerances& tol = {});

/// Unique X with X = A X B^T + W (Stein equation; Lyapunov when B = A).
/// Solved on the vectorized system (I - B (x) A) vec(X) = vec(W).
/// Throws ResonantSpectrum when some lambda_i(A) * mu_j(B) is within
/// tol.resonance of 1.
Matrix stein_solve(const Matrix& a, const Matrix& b, const Matrix& w, const Tolerances& tol = {});

/// max |X - A X B^T - W|
double stein_residual(const Matrix& a, const Matrix& b, const Matrix& w, const Matrix& x);

}  // namespace zdjscc
