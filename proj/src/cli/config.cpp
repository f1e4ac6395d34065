#include "zdjscc/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "zdjscc/error.hpp"

namespace zdjscc::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Config, fmt::format("{}: {}", where, what));
}

void require_object(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(where, fmt::format("unknown key '{}'", key));
    }
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::uint64_t unsigned_integer(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) fail(where, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::vector<double> vector_of(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], fmt::format("{}[{}]", where, i)));
  return out;
}

Matrix matrix_of(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a nested array");
  if (j.empty()) return Matrix(0, 0);
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> entries;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string row_where = fmt::format("{}[{}]", where, i);
    if (!j[i].is_array()) fail(row_where, "expected a row array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) fail(row_where, fmt::format("row has {} entries, expected {}", j[i].size(), cols));
    const auto row = vector_of(j[i], row_where);
    entries.insert(entries.end(), row.begin(), row.end());
  }
  if (cols == 0) return Matrix(0, 0);
  return Matrix(rows, cols, std::move(entries));
}

// Flat arrays become a row (as_row) or a column.
Matrix vector_or_matrix(const json& j, const std::string& where, bool as_row) {
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    const auto v = vector_of(j, where);
    return as_row ? Matrix::row(v) : Matrix::column(v);
  }
  return matrix_of(j, where);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

SourceModel parse_source(const json& j) {
  require_object(j, "source", {"A_s", "A_u_diag", "Q"});
  SourceModel s;
  s.a_s = j.contains("A_s") ? matrix_of(j["A_s"], "source.A_s") : Matrix(0, 0);
  if (j.contains("A_u_diag")) s.a_u_diag = vector_of(j["A_u_diag"], "source.A_u_diag");
  if (!j.contains("Q")) fail("source", "missing 'Q'");
  s.q = matrix_of(j["Q"], "source.Q");
  return s;
}

ChannelModel parse_channel(const json& j) {
  require_object(j, "channel", {"kind", "H", "R", "r", "power"});
  if (!j.contains("kind") || !j["kind"].is_string()) fail("channel.kind", "expected \"MISO\" or \"SIMO\"");
  const std::string kind = lower(j["kind"].get<std::string>());
  if (!j.contains("H")) fail("channel", "missing 'H'");
  if (!j.contains("power")) fail("channel", "missing 'power'");
  const double power = number(j["power"], "channel.power");
  if (kind == "miso") {
    const Matrix h = vector_or_matrix(j["H"], "channel.H", true);
    double r = 0.0;
    if (j.contains("r") && j.contains("R")) fail("channel", "give only one of 'r' and 'R'");
    if (j.contains("r")) {
      r = number(j["r"], "channel.r");
    } else if (j.contains("R")) {
      const json& rj = j["R"];
      if (rj.is_number()) {
        r = number(rj, "channel.R");
      } else {
        const Matrix rm = matrix_of(rj, "channel.R");
        if (rm.rows() != 1 || rm.cols() != 1) fail("channel.R", "MISO noise must be a scalar");
        r = rm(0, 0);
      }
    } else {
      fail("channel", "missing noise variance 'r'");
    }
    ChannelModel c;
    c.kind = ChannelKind::MISO;
    c.h = h;
    c.r = Matrix{{r}};
    c.power = power;
    return c;
  }
  if (kind == "simo") {
    const Matrix h = vector_or_matrix(j["H"], "channel.H", false);
    if (j.contains("r")) fail("channel.r", "SIMO noise is a covariance matrix 'R'");
    if (!j.contains("R")) fail("channel", "missing noise covariance 'R'");
    ChannelModel c;
    c.kind = ChannelKind::SIMO;
    c.h = h;
    c.r = j["R"].is_number() ? Matrix{{number(j["R"], "channel.R")}} : matrix_of(j["R"], "channel.R");
    c.power = power;
    return c;
  }
  fail("channel.kind", fmt::format("unknown kind '{}'", j["kind"].get<std::string>()));
}

}  // namespace

EncoderMode parse_mode(std::string_view text) {
  const std::string m = lower(text);
  if (m == "strict") return EncoderMode::Strict;
  if (m == "normalized") return EncoderMode::PowerNormalized;
  throw Error(ErrorCode::Config, fmt::format("mode must be 'strict' or 'normalized', got '{}'", text));
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, fmt::format("malformed JSON: {}", e.what()));
  }
  try {
    require_object(root, "config", {"source", "channel", "sim", "design", "output"});
    if (!root.contains("source")) fail("config", "missing 'source'");
    if (!root.contains("channel")) fail("config", "missing 'channel'");

    RunConfig cfg;
    cfg.source = parse_source(root["source"]);
    cfg.channel = parse_channel(root["channel"]);

    if (root.contains("sim")) {
      const json& s = root["sim"];
      require_object(s, "sim", {"seed", "horizon", "replicas"});
      if (s.contains("seed")) cfg.sim.seed = unsigned_integer(s["seed"], "sim.seed");
      if (s.contains("horizon")) cfg.sim.horizon = unsigned_integer(s["horizon"], "sim.horizon");
      if (s.contains("replicas")) cfg.sim.replicas = unsigned_integer(s["replicas"], "sim.replicas");
    }
    if (root.contains("design")) {
      const json& d = root["design"];
      require_object(d, "design", {"mode", "margin", "tol", "max_iter", "divergence_threshold", "gamma"});
      if (d.contains("mode")) {
        if (!d["mode"].is_string()) fail("design.mode", "expected a string");
        cfg.design.mode = parse_mode(d["mode"].get<std::string>());
      }
      if (d.contains("margin")) cfg.design.margin = number(d["margin"], "design.margin");
      if (d.contains("tol")) cfg.design.tol = number(d["tol"], "design.tol");
      if (d.contains("max_iter")) cfg.design.max_iter = unsigned_integer(d["max_iter"], "design.max_iter");
      if (d.contains("divergence_threshold")) {
        cfg.design.divergence_threshold = number(d["divergence_threshold"], "design.divergence_threshold");
      }
      if (d.contains("gamma")) cfg.design.gamma = vector_or_matrix(d["gamma"], "design.gamma", true);
      if (cfg.design.margin < 0.0) fail("design.margin", "must be non-negative");
      if (!(cfg.design.tol > 0.0)) fail("design.tol", "must be positive");
      if (!(cfg.design.divergence_threshold > 0.0)) fail("design.divergence_threshold", "must be positive");
    }
    if (root.contains("output")) {
      const json& o = root["output"];
      require_object(o, "output", {"directory", "format"});
      if (o.contains("directory")) {
        if (!o["directory"].is_string()) fail("output.directory", "expected a string");
        cfg.output.directory = o["directory"].get<std::string>();
      }
      if (o.contains("format")) {
        if (!o["format"].is_string() || lower(o["format"].get<std::string>()) != "csv") {
          fail("output.format", "only \"csv\" is supported");
        }
      }
    }
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Config, fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace zdjscc::cli
