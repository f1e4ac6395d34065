#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "zdjscc/coder/coder.hpp"
#include "zdjscc/model/model.hpp"

namespace zdjscc::cli {

struct SimSection {
  std::uint64_t seed = 1;
  std::size_t horizon = 500;
  std::size_t replicas = 1000;
};

struct DesignSection {
  EncoderMode mode = EncoderMode::PowerNormalized;
  double margin = 0.0;               // relative alpha inflation
  double tol = 1e-9;                 // Riccati convergence tolerance
  std::size_t max_iter = 100000;
  double divergence_threshold = 1e9;
  std::optional<Matrix> gamma;       // explicit 1 x k override
};

struct OutputSection {
  std::string directory = ".";
  std::string format = "csv";
};

/// Parsed run configuration. The JSON object has the keys
///   source  {A_s, A_u_diag, Q}
///   channel {kind: "MISO"|"SIMO", H, r (MISO) or R (SIMO), power}
///   sim     {seed, horizon, replicas}
///   design  {mode: "strict"|"normalized", margin, tol, max_iter, divergence_threshold, gamma}
///   output  {directory, format: "csv"}
/// Matrices are nested arrays, row-major; H and gamma may also be flat
/// arrays. Unknown keys are rejected.
struct RunConfig {
  SourceModel source;
  ChannelModel channel;
  SimSection sim;
  DesignSection design;
  OutputSection output;
};

/// Throws Error(Config) with a path-qualified message on any schema problem.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

EncoderMode parse_mode(std::string_view text);

}  // namespace zdjscc::cli
