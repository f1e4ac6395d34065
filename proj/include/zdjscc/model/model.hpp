#pragma once

#include <string>
#include <vector>

#include "zdjscc/matlib/linalg.hpp"
#include "zdjscc/matlib/matrix.hpp"

namespace zdjscc {

/// Gauss-Markov source S_{t+1} = A S_t + W_t, W_t ~ N(0, Q), S_0 ~ N(0, Q),
/// with A = blockdiag(A_s, diag(A_u_diag)) supplied in canonical form.
struct SourceModel {
  Matrix a_s;                     // stable block, possibly 0 x 0
  std::vector<double> a_u_diag;   // unstable diagonal entries, possibly empty
  Matrix q;                       // k x k process noise covariance

  std::size_t stable_dim() const noexcept { return a_s.rows(); }
  std::size_t unstable_dim() const noexcept { return a_u_diag.size(); }
  std::size_t dim() const noexcept { return stable_dim() + unstable_dim(); }

  /// Assembled k x k state matrix.
  Matrix a() const;
  Matrix a_u() const { return Matrix::diagonal(a_u_diag); }
  /// Product of the unstable eigenvalues (1 when there are none).
  double det_a_u() const noexcept;
};

/// Splits a block-diagonal canonical-form A back into (A_s, A_u_diag) by
/// eigenvalue classification. Throws InvalidArgument if A is not of the form
/// blockdiag(stable, diagonal unstable) or has eigenvalues within class_tol of
/// the unit circle.
SourceModel split_canonical(const Matrix& a, const Matrix& q, double class_tol = 1e-6);

enum class ChannelKind { MISO, SIMO };

const char* to_string(ChannelKind k) noexcept;

/// AWGN channel Y_t = H X_t + Z_t. MISO: H is 1 x n, noise is scalar r.
/// SIMO: H is m x 1, noise covariance R is m x m.
struct ChannelModel {
  ChannelKind kind = ChannelKind::MISO;
  Matrix h;
  Matrix r;               // 1 x 1 for MISO
  double power = 0.0;     // average transmit power budget p

  static ChannelModel miso(Matrix h_row, double noise_var, double power);
  static ChannelModel simo(Matrix h_col, Matrix noise_cov, double power);

  std::size_t outputs() const noexcept { return h.rows(); }
  std::size_t inputs() const noexcept { return h.cols(); }
  double noise_var() const { return r(0, 0); }

  /// Observation map seen by the decoder when the encoder emits a scalar u:
  /// MISO transmits X = H^T u, so Y = (H H^T) u + Z; SIMO gives Y = H u + Z.
  Matrix effective_h() const;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double margin = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool valid() const noexcept;
  const CheckResult* find(const std::string& name) const noexcept;
  std::string summary() const;
};

struct ModelTolerances {
  double class_tol = 1e-6;
  double gain_norm_tol = 1e-10;
  double gramian_rel = 1e-10;
  Tolerances linalg{};
};

/// Checks the modelling assumptions; failures are reported, never thrown.
ValidationReport validate_model(const SourceModel& source, const ChannelModel& channel,
                                const ModelTolerances& tol = {});

/// G = sum_{i<steps} A^i Q (A^i)^T.
Matrix controllability_gramian(const Matrix& a, const Matrix& q, std::size_t steps);

}  // namespace zdjscc
