#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "zdjscc/coder/coder.hpp"
#include "zdjscc/matlib/matrix.hpp"
#include "zdjscc/model/model.hpp"

namespace zdjscc {

// ---------------------------------------------------------------------------
// Capacity and thresholds

struct CapacityInfo {
  double snr = 0.0;           // effective SNR s
  double nats = 0.0;          // 0.5 ln(1 + s)
  double bits = 0.0;
  double nats_logdet = 0.0;   // SIMO: 0.5 ln det(R + p H H^T) / det R; MISO: same as nats
  double noise_equivalent = 0.0;  // r for MISO, 1 / (H^T R^{-1} H) for SIMO
};

/// MISO: s = p / r. SIMO: s = p H^T R^{-1} H, with the log-det capacity
/// computed independently.
CapacityInfo effective_snr_capacity(const ChannelModel& channel);

/// sum_i ln max(1, |lambda_i(A)|), natural log.
double log_instability(const SourceModel& source);

struct Feasibility {
  bool feasible = false;
  double margin = 0.0;  // (1 + s) - (det A_u)^2
};

/// Finite error is achievable iff the source has no unstable mode, or
/// 1 + s > (det A_u)^2 strictly.
Feasibility feasibility_check(const SourceModel& source, const ChannelModel& channel);

// ---------------------------------------------------------------------------
// Riccati fixed point

enum class DareStatus { Converged, Diverged, Oscillating };

const char* to_string(DareStatus s) noexcept;

struct DareOptions {
  std::optional<Matrix> p0;        // default: Q, or Q + 1e-9 I when Q is singular
  std::size_t max_iter = 100000;
  double tol = 1e-9;               // ||P' - P||_max <= tol (1 + ||P||_max)
  double divergence_threshold = 1e9;  // trace(P) > threshold * trace(Q)
};

struct DareResult {
  DareStatus status = DareStatus::Oscillating;
  Matrix p;                     // last iterate
  std::size_t iterations = 0;
  double achieved_power = 0.0;  // Gamma P^{-1} Gamma^T (strict) or p (normalized), at convergence
  std::optional<std::size_t> blowup_at;
};

DareResult dare_fixed_point(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                            const DareOptions& options = {});

/// Positive fixed points, ascending, of the scalar strict recursion
/// p' = a^2 p + q - a^2 g / (r + g / p) with g = gamma^2, i.e. the positive
/// roots of (1 - a^2) r p^2 + (g - q r) p - q g = 0.
std::vector<double> scalar_strict_fixed_points(double a, double q, double r, double gamma_sq);

// ---------------------------------------------------------------------------
// Certificate machinery for Gamma = [0 | alpha 1^T]

/// M = A_u^{-1} M A_u^{-T} + 1 1^T.
Matrix solve_m(const std::vector<double>& a_u_diag);

/// 1^T M^{-1} 1, with M built and eliminated in quad precision. M is a
/// Cauchy-like matrix whose condition number reaches 1e15 for clustered
/// eigenvalues, beyond what a double solve resolves to 1e-8.
double m_quadratic_form(const std::vector<double>& a_u_diag);

/// Entries of M in quad precision, rounded to double.
Matrix m_reference(const std::vector<double>& a_u_diag);

/// J = A J A^T + Q - Gamma^T Gamma / p + A Gamma^T Gamma A^T / (p (1 + s)).
Matrix reduced_j_solve(const SourceModel& source, const ChannelModel& channel, const Matrix& gamma);

/// Closed form D_u (M / (r + p) - 1 1^T / p) D_u, r the noise-equivalent variance.
Matrix tilde_j_closed_form(const std::vector<double>& a_u_diag, const std::vector<double>& d_u, double p, double r);

/// Direct solve of J~ = A_u^{-1} J~ A_u^{-T} + D_u (a a^T / p - 1 1^T / (p (1 + p / r))) D_u.
Matrix tilde_j_direct(const std::vector<double>& a_u_diag, const std::vector<double>& d_u, double p, double r);

/// J^ = A_u^{-1} J^ A_u^{-T} - A_u^{-1} Q_uu A_u^{-T}.
Matrix hat_j_solve(const std::vector<double>& a_u_diag, const Matrix& q_uu);

struct DesignCertificate {
  // Context needed to re-verify independently.
  Matrix a;
  Matrix q;
  Matrix gamma;
  std::vector<double> a_u_diag;
  std::size_t stable_dim = 0;
  double power = 0.0;
  double snr = 0.0;
  double noise_equivalent = 0.0;

  Matrix j;           // assembled from the blocks
  Matrix j_ss, j_su, j_uu;
  Matrix j_hat_uu, j_tilde_uu;
  Matrix m;
  Matrix n;           // M / (r + p) - 1 1^T / p
  double schur_margin = 0.0;     // min eigenvalue of J_uu - J_us J_ss^{-1} J_su
  double capacity_margin = 0.0;  // (1 + s) - (det A_u)^2
  double alpha = 0.0;
  bool feasible = false;
  std::string violated;          // empty when feasible
};

struct DesignOptions {
  EncoderMode mode = EncoderMode::PowerNormalized;
  /// Relative inflation of the certified alpha for the emitted design.
  double alpha_margin = 0.0;
  int max_doublings = 60;
  double bisection_rel = 0.01;
};

struct DesignResult {
  EncoderDesign design;
  DesignCertificate certificate;
};

/// Builds Gamma = [0 | alpha 1^T] with the smallest alpha (to within the
/// bisection tolerance) whose Schur complement passes psd_check, and the
/// certificate blocks. Infeasible models get a populated certificate with
/// the violated condition named. Throws CertificateFailure if alpha exceeds
/// 2^max_doublings.
DesignResult design_gamma(const SourceModel& source, const ChannelModel& channel, const DesignOptions& options = {});

/// Re-verifies a certificate: reduced-equation residual, J_ss PD, Schur
/// complement PSD, the M determinant identity, and the J~ closed form.
ValidationReport certificate_check(const DesignCertificate& cert);

}  // namespace zdjscc
