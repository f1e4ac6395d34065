#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "zdjscc/cli/commands.hpp"
#include "zdjscc/cli/config.hpp"
#include "zdjscc/error.hpp"

namespace {

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace zdjscc::cli;
  CLI::App app{"Zero-delay joint source-channel coding toolkit for Gauss-Markov sources over MISO/SIMO channels"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  std::size_t horizon = 0;
  std::string mode;
  std::string snr_list;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--mode", mode, "Encoder mode: strict|normalized");
  };

  CLI::App* check = app.add_subcommand("check", "Validate a model and report the feasibility verdict");
  add_config(check);
  CLI::App* design = app.add_subcommand("design", "Design Gamma and write certificate.json");
  add_config(design);
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo simulation; writes trace.csv and summary.json");
  add_config(simulate);
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--replicas", replicas, "Number of replicas");
  simulate->add_option("--horizon", horizon, "Number of channel uses");
  simulate->add_option("--threads", opts.threads, "Worker threads (0 = hardware concurrency)");

  CLI::App* sweep = app.add_subcommand("sweep", "Achievable-region sweep over a 2-D eigenvalue grid");
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--lambda-min", opts.lambda_min, "Smallest eigenvalue on the grid");
  sweep->add_option("--lambda-max", opts.lambda_max, "Largest eigenvalue on the grid");
  sweep->add_option("--steps", opts.steps, "Grid points per axis");
  sweep->add_option("--snr", snr_list, "Comma-separated SNR values (default 0,9,99)");
  sweep->add_flag("--verify", opts.verify, "Cross-check a subsample with the Riccati recursion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (!config.empty()) opts.config = config;
    if (!out_dir.empty()) opts.out = out_dir;
    if (!mode.empty()) opts.mode = parse_mode(mode);
    if (simulate->count("--seed")) opts.seed = seed;
    if (simulate->count("--replicas")) opts.replicas = replicas;
    if (simulate->count("--horizon")) opts.horizon = horizon;
    if (!snr_list.empty()) opts.snr = parse_snr_list(snr_list);
  } catch (const zdjscc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception&) {
    std::cerr << "error: --snr must be a comma-separated list of numbers\n";
    return kExitInvalid;
  }

  if (*check) return cmd_check(opts, std::cout, std::cerr);
  if (*design) return cmd_design(opts, std::cout, std::cerr);
  if (*simulate) return cmd_simulate(opts, std::cout, std::cerr);
  return cmd_sweep(opts, std::cout, std::cerr);
}
