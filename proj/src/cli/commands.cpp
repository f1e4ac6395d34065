#include "zdjscc/cli/commands.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "zdjscc/cli/config.hpp"
#include "zdjscc/cli/output.hpp"
#include "zdjscc/coder/simulation.hpp"
#include "zdjscc/design/design.hpp"
#include "zdjscc/error.hpp"

namespace zdjscc::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const ValidationReport& rep) {
  json arr = json::array();
  for (const auto& c : rep.checks) {
    arr.push_back({{"name", c.name}, {"status", c.passed ? "pass" : "fail"}, {"margin", c.margin}, {"detail", c.detail}});
  }
  return arr;
}

std::optional<RunConfig> load(const CommandOptions& opts, std::ostream& err) {
  if (!opts.config) {
    err << "error: --config is required\n";
    return std::nullopt;
  }
  try {
    return load_config(*opts.config);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

bool validate(const RunConfig& cfg, std::ostream& out, std::ostream& err, ValidationReport* keep = nullptr) {
  const ValidationReport rep = validate_model(cfg.source, cfg.channel);
  out << "validation:\n" << rep.summary();
  if (keep) *keep = rep;
  if (!rep.valid()) {
    for (const auto& c : rep.checks) {
      if (!c.passed) err << fmt::format("error: model check '{}' failed: {}\n", c.name, c.detail);
    }
    return false;
  }
  return true;
}

fs::path out_dir(const CommandOptions& opts, const RunConfig* cfg) {
  if (opts.out) return *opts.out;
  if (cfg) return cfg->output.directory;
  return ".";
}

DesignOptions design_options(const RunConfig& cfg, EncoderMode mode) {
  DesignOptions o;
  o.mode = mode;
  o.alpha_margin = cfg.design.margin;
  return o;
}

DareOptions dare_options(const RunConfig& cfg) {
  DareOptions o;
  o.max_iter = cfg.design.max_iter;
  o.tol = cfg.design.tol;
  o.divergence_threshold = cfg.design.divergence_threshold;
  return o;
}

}  // namespace

int cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto cfg = load(opts, err);
  if (!cfg) return kExitInvalid;
  try {
    if (!validate(*cfg, out, err)) return kExitInvalid;
    const CapacityInfo cap = effective_snr_capacity(cfg->channel);
    const double h = log_instability(cfg->source);
    const Feasibility f = feasibility_check(cfg->source, cfg->channel);
    out << fmt::format("channel: {}, effective SNR s = {}\n", to_string(cfg->channel.kind), format_short(cap.snr));
    out << fmt::format("capacity C = {:.12g} nats = {:.12g} bits\n", cap.nats, cap.bits);
    out << fmt::format("sum ln max(1, |lambda_i|) = {:.12g} nats = {:.12g} bits\n", h, h / std::log(2.0));
    out << fmt::format("margin (1 + s) - (det A_u)^2 = {}\n", format_short(f.margin));
    out << fmt::format("{}, margin {}\n", f.feasible ? "Feasible" : "Infeasible", format_short(f.margin));
    return f.feasible ? kExitOk : kExitInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

int cmd_design(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto cfg = load(opts, err);
  if (!cfg) return kExitInvalid;
  try {
    if (!validate(*cfg, out, err)) return kExitInvalid;
    const EncoderMode mode = opts.mode.value_or(cfg->design.mode);
    const Feasibility f = feasibility_check(cfg->source, cfg->channel);
    const CapacityInfo cap = effective_snr_capacity(cfg->channel);
    const DesignResult res = design_gamma(cfg->source, cfg->channel, design_options(*cfg, mode));
    const DesignCertificate& c = res.certificate;
    const ValidationReport checks = certificate_check(c);

    const DareResult dare = dare_fixed_point(cfg->source, cfg->channel, res.design, dare_options(*cfg));

    json doc;
    doc["mode"] = to_string(mode);
    doc["feasible"] = c.feasible;
    doc["violated"] = c.violated;
    doc["gamma"] = c.gamma.to_vector();
    doc["alpha"] = c.alpha;
    doc["power"] = c.power;
    doc["snr"] = c.snr;
    doc["noise_equivalent"] = c.noise_equivalent;
    doc["capacity"] = {{"nats", cap.nats}, {"bits", cap.bits}};
    doc["margins"] = {{"capacity", c.capacity_margin}, {"schur", c.schur_margin}};
    doc["blocks"] = {{"J", to_json(c.j)},           {"J_ss", to_json(c.j_ss)},
                     {"J_su", to_json(c.j_su)},     {"J_uu", to_json(c.j_uu)},
                     {"J_hat_uu", to_json(c.j_hat_uu)}, {"J_tilde_uu", to_json(c.j_tilde_uu)},
                     {"M", to_json(c.m)},           {"N", to_json(c.n)}};
    doc["checks"] = to_json(checks);
    doc["riccati"] = {{"status", to_string(dare.status)},
                      {"iterations", dare.iterations},
                      {"trace_P", dare.p.trace()},
                      {"P", to_json(dare.p)},
                      {"achieved_power", dare.achieved_power}};
    if (dare.blowup_at) doc["riccati"]["blowup_at"] = *dare.blowup_at;

    const fs::path path = out_dir(opts, &*cfg) / "certificate.json";
    write_file_atomic(path, doc.dump(2) + "\n");

    out << fmt::format("alpha = {:.12g}\n", c.alpha);
    out << "certificate checks:\n" << checks.summary();
    out << fmt::format("riccati: {} after {} iterations, trace(P) = {:.12g}\n", to_string(dare.status),
                       dare.iterations, dare.p.trace());
    out << fmt::format("wrote {}\n", path.string());
    if (!f.feasible) {
      out << fmt::format("Infeasible: {}\n", c.violated);
      return kExitInfeasible;
    }
    if (!c.feasible || !checks.valid()) {
      err << "error: certificate for a feasible model failed verification\n";
      return kExitInvalid;
    }
    out << fmt::format("Feasible, margin {}\n", format_short(f.margin));
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto cfg = load(opts, err);
  if (!cfg) return kExitInvalid;
  try {
    if (!validate(*cfg, out, err)) return kExitInvalid;
    const EncoderMode mode = opts.mode.value_or(cfg->design.mode);
    const std::uint64_t seed = opts.seed.value_or(cfg->sim.seed);
    const std::size_t horizon = opts.horizon.value_or(cfg->sim.horizon);
    const std::size_t replicas = opts.replicas.value_or(cfg->sim.replicas);
    if (horizon == 0 || replicas == 0) {
      err << "error: horizon and replicas must be positive\n";
      return kExitInvalid;
    }

    EncoderDesign design;
    if (cfg->design.gamma) {
      const Matrix& g = *cfg->design.gamma;
      if (g.rows() != 1 || g.cols() != cfg->source.dim()) {
        err << fmt::format("error: design.gamma must have {} entries\n", cfg->source.dim());
        return kExitInvalid;
      }
      design = EncoderDesign{g, mode, cfg->channel.power};
    } else {
      design = design_gamma(cfg->source, cfg->channel, design_options(*cfg, mode)).design;
    }

    SimulationOptions so;
    so.divergence_threshold = cfg->design.divergence_threshold;
    so.threads = opts.threads;
    const SimulationReport rep = monte_carlo(cfg->source, cfg->channel, design, seed, horizon, replicas, so);

    std::string csv = "t,trace_P_t,empirical_mse,empirical_power\n";
    csv.reserve(horizon * 80);
    for (std::size_t t = 0; t < horizon; ++t) {
      csv += fmt::format("{},{},{},{}\n", t, format_double(rep.trace_p[t]), format_double(rep.empirical_mse[t]),
                         format_double(rep.empirical_power[t]));
    }

    json summary;
    summary["seed"] = seed;
    summary["replicas"] = replicas;
    summary["horizon"] = horizon;
    summary["mode"] = to_string(mode);
    summary["gamma"] = design.gamma.to_vector();
    summary["power"] = cfg->channel.power;
    summary["tail_start"] = rep.tail_start;
    summary["d_estimate"] = rep.d_estimate;
    summary["analytic_tail_trace_P"] = rep.analytic_tail;
    summary["diverged"] = rep.diverged;
    summary["diverged_at"] = rep.diverged_at ? json(*rep.diverged_at) : json(nullptr);

    const fs::path dir = out_dir(opts, &*cfg);
    write_file_atomic(dir / "trace.csv", csv);
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

    out << fmt::format("mode {}, seed {}, {} replicas, horizon {}\n", to_string(mode), seed, replicas, horizon);
    out << fmt::format("D estimate (mean over t >= {}) = {:.12g}, analytic trace(P) = {:.12g}\n", rep.tail_start,
                       rep.d_estimate, rep.analytic_tail);
    if (rep.diverged) out << fmt::format("Diverged at t = {}\n", rep.diverged_at.value_or(horizon));
    out << fmt::format("wrote {}\n", (dir / "trace.csv").string());
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

std::vector<double> sweep_axis(double lo, double hi, std::size_t steps) {
  std::vector<double> axis(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    axis[i] = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  return axis;
}

bool sweep_achievable(double lambda1, double lambda2, double snr) {
  if (std::abs(lambda1) < 1.0 && std::abs(lambda2) < 1.0) return true;  // estimate S_hat = 0
  const double g = std::max(1.0, std::abs(lambda1)) * std::max(1.0, std::abs(lambda2));
  return g * g < 1.0 + snr;
}

SourceModel sweep_source(double lambda1, double lambda2) {
  std::vector<double> stable;
  std::vector<double> unstable;
  for (double l : {lambda1, lambda2}) (std::abs(l) < 1.0 ? stable : unstable).push_back(l);
  SourceModel s;
  s.a_s = Matrix::diagonal(stable);
  s.a_u_diag = unstable;
  s.q = Matrix::identity(2);
  return s;
}

ChannelModel sweep_channel(double snr) { return ChannelModel::miso(Matrix{{1.0}}, 1.0, snr); }

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const bool range_ok = std::isfinite(opts.lambda_min) && std::isfinite(opts.lambda_max) && opts.lambda_min > 0.0 &&
                        opts.lambda_max >= opts.lambda_min && opts.steps >= 1;
  if (!range_ok) {
    err << fmt::format("error: need 0 < lambda-min <= lambda-max and steps >= 1 (got {}, {}, {})\n", opts.lambda_min,
                       opts.lambda_max, opts.steps);
    return kExitInvalid;
  }
  if (opts.snr.empty()) {
    err << "error: --snr needs at least one value\n";
    return kExitInvalid;
  }
  for (double s : opts.snr) {
    if (!std::isfinite(s) || s < 0.0) {
      err << fmt::format("error: SNR values must be finite and non-negative (got {})\n", s);
      return kExitInvalid;
    }
  }

  const auto axis = sweep_axis(opts.lambda_min, opts.lambda_max, opts.steps);
  std::string csv = "lambda1,lambda2,snr,achievable\n";
  csv.reserve(opts.snr.size() * axis.size() * axis.size() * 64);
  std::size_t achievable = 0;
  for (double snr : opts.snr) {
    const std::string snr_text = format_double(snr);
    for (double l1 : axis) {
      const std::string l1_text = format_double(l1);
      for (double l2 : axis) {
        const bool ok = sweep_achievable(l1, l2, snr);
        achievable += ok;
        csv += l1_text;
        csv += ',';
        csv += format_double(l2);
        csv += ',';
        csv += snr_text;
        csv += ok ? ",1\n" : ",0\n";
      }
    }
  }

  int code = kExitOk;
  if (opts.verify) {
    // About 64 cells per SNR, away from the threshold where the Riccati
    // iteration converges too slowly to classify.
    const std::size_t cells = axis.size() * axis.size();
    const std::size_t stride = std::max<std::size_t>(1, cells / 64) | 1;
    std::size_t checked = 0;
    std::size_t mismatches = 0;
    for (double snr : opts.snr) {
      for (std::size_t idx = 0; idx < cells; idx += stride) {
        const double l1 = axis[idx / axis.size()];
        const double l2 = axis[idx % axis.size()];
        const SourceModel src = sweep_source(l1, l2);
        const ChannelModel ch = sweep_channel(snr);
        if (!validate_model(src, ch).valid()) continue;
        const Feasibility f = feasibility_check(src, ch);
        if (src.unstable_dim() > 0 && std::abs(f.margin) < 0.05 * (1.0 + snr)) continue;
        std::vector<double> g(2, 0.0);
        for (std::size_t i = src.stable_dim(); i < 2; ++i) g[i] = 1.0;
        const EncoderDesign design{Matrix::row(g), EncoderMode::PowerNormalized, snr};
        const DareResult d = dare_fixed_point(src, ch, design);
        const bool converged = d.status == DareStatus::Converged;
        ++checked;
        if (converged != sweep_achievable(l1, l2, snr)) {
          ++mismatches;
          err << fmt::format("verify mismatch at lambda = ({}, {}), snr = {}: riccati {}\n", l1, l2, snr,
                             to_string(d.status));
        }
      }
    }
    out << fmt::format("verify: {} cells checked, {} disagreements\n", checked, mismatches);
    if (mismatches > 0) code = kExitInfeasible;
  }

  try {
    const fs::path path = (opts.out ? *opts.out : fs::path(".")) / "sweep.csv";
    write_file_atomic(path, csv);
    out << fmt::format("{} cells, {} achievable; wrote {}\n", opts.snr.size() * axis.size() * axis.size(), achievable,
                       path.string());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return code;
}

}  // namespace zdjscc::cli
