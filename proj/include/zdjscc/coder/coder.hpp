#pragma once

#include <cstddef>

#include "zdjscc/matlib/matrix.hpp"
#include "zdjscc/model/model.hpp"

namespace zdjscc {

/// Strict: X_t = Gamma P_t^{-1} e_t with a constant Gamma.
/// PowerNormalized: the row applied to the innovation is fixed and rescaled
/// every step, u_t = beta_t Gamma e_t with beta_t^2 = p / (Gamma P_t Gamma^T),
/// i.e. the per-step encoding matrix is Gamma_t = beta_t Gamma P_t and the
/// instantaneous power Gamma_t P_t^{-1} Gamma_t^T equals p.
enum class EncoderMode { Strict, PowerNormalized };

const char* to_string(EncoderMode m) noexcept;

struct EncoderDesign {
  Matrix gamma;  // 1 x k
  EncoderMode mode = EncoderMode::PowerNormalized;
  double power_budget = 0.0;
};

struct FilterState {
  std::size_t t = 0;
  Matrix s_hat;  // k x 1 prediction of S_t
  Matrix p;      // k x k predicted error covariance
  double accumulated_power = 0.0;
};

/// Gamma_t used at covariance P. An all-zero Gamma is a silent encoder in
/// both modes. Throws DegenerateDirection in PowerNormalized mode when a
/// nonzero Gamma has Gamma P Gamma^T <= 0.
Matrix effective_gamma(const EncoderDesign& design, const Matrix& p);

/// Row g with u = g e (1 x k): Gamma_t P^{-1}.
Matrix encoder_row(const EncoderDesign& design, const Matrix& p);

/// Gamma_t P^{-1} Gamma_t^T.
double instantaneous_power(const Matrix& gamma_t, const Matrix& p);

/// Channel input for the innovation `error` (k x 1): MISO returns H^T u
/// (n x 1), SIMO returns the scalar u as a 1 x 1 matrix.
Matrix encode(const EncoderDesign& design, const ChannelModel& channel, const Matrix& p, const Matrix& error);

/// K = A Gamma^T H^T (H Gamma P^{-1} Gamma^T H^T + R)^{-1}, with H the
/// effective observation map and Gamma the per-step encoding matrix.
Matrix kalman_gain(const Matrix& a, const Matrix& gamma_t, const Matrix& h, const Matrix& r, const Matrix& p);

/// S_hat' = A S_hat + K (y_observed - y_predicted).
Matrix decoder_update(const FilterState& state, const Matrix& a, const Matrix& k, const Matrix& y_observed,
                      const Matrix& y_predicted);

/// P' = A P A^T + Q - A Gamma^T H^T (R + H Gamma P^{-1} Gamma^T H^T)^{-1} H Gamma A^T
/// for a given per-step Gamma. Result symmetrized. Throws NotPD if P is not PD.
Matrix riccati_update(const Matrix& a, const Matrix& q, const Matrix& gamma_t, const Matrix& h, const Matrix& r,
                      const Matrix& p);

/// One Riccati step with Gamma_t chosen by the design's mode.
Matrix riccati_step(const Matrix& a, const Matrix& q, const EncoderDesign& design, const Matrix& h, const Matrix& r,
                    const Matrix& p);

Matrix riccati_step(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                    const Matrix& p);

/// Default starting covariance: Q, or Q + 1e-9 I when Q is not PD.
Matrix default_initial_covariance(const Matrix& q);

}  // namespace zdjscc
