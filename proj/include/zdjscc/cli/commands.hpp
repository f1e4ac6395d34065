#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "zdjscc/coder/coder.hpp"
#include "zdjscc/model/model.hpp"

namespace zdjscc::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitInfeasible = 2;

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> horizon;
  std::optional<EncoderMode> mode;
  double lambda_min = 0.05;
  double lambda_max = 4.0;
  std::size_t steps = 200;
  std::vector<double> snr{0.0, 9.0, 99.0};
  bool verify = false;
  unsigned threads = 0;
};

/// Prints the validation report and the feasibility verdict.
/// 0 feasible, 2 infeasible, 1 invalid model or config.
int cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Writes certificate.json. Exit codes as cmd_check; 1 also when a
/// feasible certificate fails re-verification.
int cmd_design(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Writes trace.csv and summary.json. Divergence is reported, not an error.
int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Writes sweep.csv. 1 on a malformed range; with --verify, 2 when a
/// Riccati run disagrees with the analytic verdict.
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Evenly spaced grid including both end points (a single point when steps == 1).
std::vector<double> sweep_axis(double lo, double hi, std::size_t steps);

/// True when both |lambda_i| < 1, else prod_i max(1, |lambda_i|)^2 < 1 + snr.
bool sweep_achievable(double lambda1, double lambda2, double snr);

/// Canonical model for a grid cell: stable entries go to a diagonal A_s,
/// unstable ones to A_u, Q = I.
SourceModel sweep_source(double lambda1, double lambda2);

/// MISO with H = [1], r = 1 and p = snr.
ChannelModel sweep_channel(double snr);

}  // namespace zdjscc::cli
