#include "zdjscc/coder/coder.hpp"

#include <cmath>

#include <fmt/format.h>

#include "zdjscc/error.hpp"
#include "zdjscc/matlib/linalg.hpp"

namespace zdjscc {
namespace {

bool is_zero(const Matrix& m) noexcept { return m.max_abs() == 0.0; }

void require_pd(const Matrix& p, const char* op) {
  if (psd_check(p) != Definiteness::PD) throw Error(ErrorCode::NotPD, fmt::format("{}: P is not positive definite", op));
}

void require_gamma_shape(const Matrix& gamma, const Matrix& p) {
  if (gamma.rows() != 1 || gamma.cols() != p.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("Gamma is {}x{}, expected 1x{}", gamma.rows(), gamma.cols(), p.rows()));
  }
}

// Gamma P^{-1} as a row (P symmetric).
Matrix solve_row(const Matrix& gamma, const Matrix& p) { return lu_solve(p, gamma.transpose()).transpose(); }

}  // namespace

const char* to_string(EncoderMode m) noexcept { return m == EncoderMode::Strict ? "strict" : "normalized"; }

Matrix effective_gamma(const EncoderDesign& design, const Matrix& p) {
  require_gamma_shape(design.gamma, p);
  if (design.mode == EncoderMode::Strict || is_zero(design.gamma)) return design.gamma;
  const Matrix gp = design.gamma * p;
  const double quad = (gp * design.gamma.transpose())(0, 0);
  if (!(quad > 0.0)) {
    throw Error(ErrorCode::DegenerateDirection, fmt::format("Gamma P Gamma^T = {:.3g} is not positive", quad));
  }
  return std::sqrt(design.power_budget / quad) * gp;
}

Matrix encoder_row(const EncoderDesign& design, const Matrix& p) {
  require_gamma_shape(design.gamma, p);
  if (is_zero(design.gamma)) return design.gamma;
  if (design.mode == EncoderMode::Strict) return solve_row(design.gamma, p);
  const double quad = (design.gamma * p * design.gamma.transpose())(0, 0);
  if (!(quad > 0.0)) {
    throw Error(ErrorCode::DegenerateDirection, fmt::format("Gamma P Gamma^T = {:.3g} is not positive", quad));
  }
  return std::sqrt(design.power_budget / quad) * design.gamma;
}

double instantaneous_power(const Matrix& gamma_t, const Matrix& p) {
  require_gamma_shape(gamma_t, p);
  if (is_zero(gamma_t)) return 0.0;
  return (solve_row(gamma_t, p) * gamma_t.transpose())(0, 0);
}

Matrix encode(const EncoderDesign& design, const ChannelModel& channel, const Matrix& p, const Matrix& error) {
  if (error.cols() != 1 || error.rows() != p.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "encode: error must be a k x 1 column");
  }
  const double u = (encoder_row(design, p) * error)(0, 0);
  if (channel.kind == ChannelKind::MISO) return u * channel.h.transpose();
  return Matrix{{u}};
}

Matrix kalman_gain(const Matrix& a, const Matrix& gamma_t, const Matrix& h, const Matrix& r, const Matrix& p) {
  require_gamma_shape(gamma_t, p);
  if (h.cols() != 1 || r.rows() != h.rows() || r.cols() != h.rows() || a.rows() != p.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "kalman_gain: shapes of A, H, R, P do not conform");
  }
  if (is_zero(gamma_t)) return Matrix(a.rows(), h.rows());
  const Matrix h_gamma = h * gamma_t;                                    // m x k
  const Matrix innov = h_gamma * solve_row(gamma_t, p).transpose() * h.transpose() + r;  // m x m
  try {
    // K^T = S^{-1} H Gamma A^T, S symmetric.
    return lu_solve(innov, h_gamma * a.transpose()).transpose();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularMatrix) throw;
    throw Error(ErrorCode::SingularInnovationCovariance, "kalman_gain: innovation covariance is singular");
  }
}

Matrix decoder_update(const FilterState& state, const Matrix& a, const Matrix& k, const Matrix& y_observed,
                      const Matrix& y_predicted) {
  if (state.s_hat.cols() != 1 || a.cols() != state.s_hat.rows() || k.rows() != a.rows() ||
      y_observed.rows() != k.cols() || y_observed.cols() != 1 || y_predicted.rows() != y_observed.rows() ||
      y_predicted.cols() != 1) {
    throw Error(ErrorCode::DimensionMismatch, "decoder_update: shapes do not conform");
  }
  return a * state.s_hat + k * (y_observed - y_predicted);
}

Matrix riccati_update(const Matrix& a, const Matrix& q, const Matrix& gamma_t, const Matrix& h, const Matrix& r,
                      const Matrix& p) {
  require_pd(p, "riccati_step");
  const Matrix open_loop = a * p * a.transpose() + q;
  if (is_zero(gamma_t)) return open_loop.symmetrized();
  const Matrix k = kalman_gain(a, gamma_t, h, r, p);
  return (open_loop - k * h * gamma_t * a.transpose()).symmetrized();
}

Matrix riccati_step(const Matrix& a, const Matrix& q, const EncoderDesign& design, const Matrix& h, const Matrix& r,
                    const Matrix& p) {
  return riccati_update(a, q, effective_gamma(design, p), h, r, p);
}

Matrix riccati_step(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                    const Matrix& p) {
  return riccati_step(source.a(), source.q, design, channel.effective_h(), channel.r, p);
}

Matrix default_initial_covariance(const Matrix& q) {
  if (psd_check(q) == Definiteness::PD) return q;
  return q + 1e-9 * Matrix::identity(q.rows());
}

}  // namespace zdjscc
