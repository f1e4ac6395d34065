#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "zdjscc/coder/coder.hpp"
#include "zdjscc/model/model.hpp"
#include "zdjscc/model/rng.hpp"

namespace zdjscc {

struct SimulationOptions {
  /// P_0 and the law of S_0; defaults to default_initial_covariance(Q).
  std::optional<Matrix> initial_covariance;
  /// Elementwise multiplier applied to every K_t (k x m), for testing
  /// suboptimal decoders.
  std::optional<Matrix> gain_perturbation;
  /// A run is marked diverged once trace(P_t) > threshold * trace(Q).
  double divergence_threshold = 1e9;
  /// Worker threads for monte_carlo; 0 = hardware concurrency.
  unsigned threads = 0;
};

/// Per-step quantities shared by all replicas: they depend on the model and
/// design, never on realizations.
struct CodeStep {
  Matrix p;            // P_t
  Matrix gamma_t;      // 1 x k
  Matrix encoder_row;  // Gamma_t P_t^{-1}
  Matrix gain;         // K_t, k x m
  double power = 0.0;  // Gamma_t P_t^{-1} Gamma_t^T
};

struct CodeSchedule {
  std::vector<CodeStep> steps;  // may be shorter than the horizon if P_t overflowed
  std::size_t horizon = 0;
  bool diverged = false;
  std::optional<std::size_t> diverged_at;
};

CodeSchedule build_schedule(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                            std::size_t horizon, const SimulationOptions& options = {});

/// One closed-loop realization. Steps past the end of a truncated schedule
/// are recorded as NaN.
struct TrajectoryRecord {
  std::vector<double> squared_error;  // ||S_t - S_hat_t||^2
  std::vector<double> input_power;    // ||X_t||^2
  std::vector<double> trace_p;        // trace(P_t)
  std::vector<double> error;          // horizon x k, row t = S_t - S_hat_t
  std::vector<double> state;          // horizon x k, row t = S_t
  bool diverged = false;
  std::optional<std::size_t> diverged_at;
};

TrajectoryRecord simulate_trajectory(const SourceModel& source, const ChannelModel& channel,
                                     const EncoderDesign& design, RngState& rng, std::size_t horizon,
                                     const SimulationOptions& options = {});

struct SimulationReport {
  std::size_t horizon = 0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::vector<double> trace_p;          // analytic
  std::vector<double> analytic_power;   // Gamma_t P_t^{-1} Gamma_t^T
  std::vector<double> empirical_mse;    // mean ||S_t - S_hat_t||^2
  std::vector<double> empirical_power;  // mean ||X_t||^2
  std::vector<double> mean_error;       // horizon x k
  std::size_t tail_start = 0;           // first index of the last 20% window
  double d_estimate = 0.0;              // tail mean of empirical_mse
  double analytic_tail = 0.0;           // tail mean of trace_p
  bool diverged = false;
  std::optional<std::size_t> diverged_at;

  /// trace of the empirical error covariance at step t (MSE minus squared mean).
  double empirical_covariance_trace(std::size_t t) const;
};

/// Averages `replicas` independent trajectories; replica i uses
/// RngState(seed, i). Replicas are reduced in fixed chunks in index order, so
/// the result does not depend on the thread count.
SimulationReport monte_carlo(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                             std::uint64_t seed, std::size_t horizon, std::size_t replicas,
                             const SimulationOptions& options = {});

}  // namespace zdjscc
