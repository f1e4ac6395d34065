#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support.hpp"
#include "zdjscc/cli/commands.hpp"
#include "zdjscc/cli/config.hpp"
#include "zdjscc/cli/output.hpp"
#include "zdjscc/design/design.hpp"
#include "zdjscc/error.hpp"

using namespace zdjscc;
using namespace zdjscc::cli;
namespace fs = std::filesystem;

namespace {

fs::path config_path(const std::string& name) { return fs::path(ZDJSCC_CONFIG_DIR) / name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

template <class F>
Run run(F f, const CommandOptions& opts) {
  std::ostringstream o, e;
  Run r;
  r.code = f(opts, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

bool config_error(const std::string& text, const std::string& needle) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code() == ErrorCode::Config && std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

const char* kScalar = R"({"source": {"A_u_diag": [2.0], "Q": [[1.0]]},
  "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 5.0}})";

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(kScalar);
  CHECK(c.source.a_u_diag == std::vector<double>{2.0});
  CHECK(c.source.stable_dim() == 0);
  CHECK(c.channel.kind == ChannelKind::MISO);
  CHECK(c.channel.h == Matrix{{1.0}});
  CHECK(c.channel.power == 5.0);
  CHECK(c.sim.seed == 1);
  CHECK(c.design.mode == EncoderMode::PowerNormalized);
  CHECK(c.output.format == "csv");

  const RunConfig simo = load_config(config_path("simo_scalar.json"));
  CHECK(simo.channel.kind == ChannelKind::SIMO);
  CHECK(simo.channel.h == Matrix{{1.0}, {1.0}});

  const RunConfig mixed = load_config(config_path("mixed_3d.json"));
  CHECK(mixed.source.dim() == 3);
  CHECK(mixed.sim.replicas == 2000);

  CHECK(parse_mode("strict") == EncoderMode::Strict);
  CHECK(parse_mode("Normalized") == EncoderMode::PowerNormalized);
  CHECK_THROWS_AS(parse_mode("loose"), Error);

  SUBCASE("rejections") {
    CHECK(config_error(R"({"source": {"A_u_diag": [2.0], "Q": [[1.0]], "B": 1},
      "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 5.0}})", "B"));
    CHECK(config_error(R"({"source": {"A_s": [[0.1, 0.2], [0.3]], "Q": [[1.0]]},
      "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 5.0}})", "expected 2"));
    CHECK(config_error(R"({"source": {"A_u_diag": [2.0], "Q": [[1.0]]},
      "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 5.0},
      "design": {"mode": "fast"}})", "mode"));
    CHECK(config_error(R"({"source": {"A_u_diag": [2.0], "Q": [[1.0]]},
      "channel": {"kind": "MIMO", "H": [1.0], "r": 1.0, "power": 5.0}})", "kind"));
    CHECK(config_error(R"({"source": {"A_u_diag": [2.0], "Q": [[1.0]]},
      "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 5.0},
      "output": {"format": "parquet"}})", "format"));
    CHECK(config_error("{not json", ""));
    CHECK_THROWS_AS(load_config("/nonexistent/zdjscc.json"), Error);
  }
}

TEST_CASE("output formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(format_short(2.0) == "2.0");
  CHECK(format_short(0.5) == "0.5");
  CHECK(format_short(-3.25) == "-3.25");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("atomic writes leave no partial file") {
  const fs::path dir = testing::scratch_dir("atomic");
  write_file_atomic(dir / "sub" / "a.txt", "hello\n");
  CHECK(slurp(dir / "sub" / "a.txt") == "hello\n");
  write_file_atomic(dir / "sub" / "a.txt", "second\n");
  CHECK(slurp(dir / "sub" / "a.txt") == "second\n");

  // Parent is a regular file: the write must fail without leaving debris.
  std::ofstream(dir / "blocker") << "x";
  CHECK_THROWS(write_file_atomic(dir / "blocker" / "b.txt", "data"));
  std::size_t entries = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) entries += e.is_regular_file();
  CHECK(entries == 2);
  fs::remove_all(dir);
}

TEST_CASE("check command") {
  CommandOptions o;
  o.config = config_path("scalar_feasible.json");
  Run r = run(cmd_check, o);
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("Feasible, margin 2.0") != std::string::npos);

  o.config = config_path("scalar_boundary.json");
  r = run(cmd_check, o);
  CHECK(r.code == kExitInfeasible);
  CHECK(r.out.find("Infeasible, margin 0.0") != std::string::npos);

  const fs::path dir = testing::scratch_dir("check");
  o.config = write_config(dir, "marginal.json", R"({"source": {"A_u_diag": [1.0], "Q": [[1.0]]},
    "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 5.0}})");
  r = run(cmd_check, o);
  CHECK(r.code == kExitInvalid);
  CHECK(!r.err.empty());

  o.config = dir / "missing.json";
  CHECK(run(cmd_check, o).code == kExitInvalid);
  o.config.reset();
  CHECK(run(cmd_check, o).code == kExitInvalid);

  o.config = config_path("stable_silent.json");
  r = run(cmd_check, o);
  CHECK(r.code == kExitOk);
  fs::remove_all(dir);
}

TEST_CASE("design command") {
  const fs::path dir = testing::scratch_dir("design");
  CommandOptions o;
  o.out = dir;

  SUBCASE("scalar feasible") {
    o.config = config_path("scalar_feasible.json");
    const Run r = run(cmd_design, o);
    REQUIRE(r.code == kExitOk);
    const auto doc = nlohmann::json::parse(slurp(dir / "certificate.json"));
    CHECK(doc["feasible"] == true);
    CHECK(doc["violated"] == "");
    for (const auto& c : doc["checks"]) CHECK_MESSAGE(c["status"] == "pass", c.dump());
    CHECK(doc["riccati"]["status"] == "Converged");
    CHECK(doc["riccati"]["trace_P"].get<double>() == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(doc["alpha"].get<double>() >= std::sqrt(15.0));
  }

  SUBCASE("miso and mixed") {
    for (const char* name : {"miso_2d.json", "mixed_3d.json", "simo_scalar.json"}) {
      o.config = config_path(name);
      const Run r = run(cmd_design, o);
      CHECK_MESSAGE(r.code == kExitOk, name, r.err);
      const auto doc = nlohmann::json::parse(slurp(dir / "certificate.json"));
      CHECK(doc["riccati"]["status"] == "Converged");
    }
  }

  SUBCASE("infeasible names the violated condition") {
    o.config = config_path("scalar_boundary.json");
    const Run r = run(cmd_design, o);
    CHECK(r.code == kExitInfeasible);
    CHECK(r.out.find("capacity condition") != std::string::npos);
    const auto doc = nlohmann::json::parse(slurp(dir / "certificate.json"));
    CHECK(doc["feasible"] == false);
    CHECK(doc["violated"].get<std::string>().find("capacity condition") != std::string::npos);
  }

  SUBCASE("all stable") {
    o.config = config_path("stable_silent.json");
    const Run r = run(cmd_design, o);
    CHECK(r.code == kExitOk);
    const auto doc = nlohmann::json::parse(slurp(dir / "certificate.json"));
    CHECK(doc["gamma"] == nlohmann::json::array({0.0, 0.0}));
  }

  SUBCASE("invalid model writes nothing") {
    o.config = write_config(dir, "bad.json", R"({"source": {"A_u_diag": [1.0], "Q": [[1.0]]},
      "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 5.0}})");
    CHECK(run(cmd_design, o).code == kExitInvalid);
    CHECK(!fs::exists(dir / "certificate.json"));
  }
  fs::remove_all(dir);
}

TEST_CASE("simulate command") {
  const fs::path dir = testing::scratch_dir("simulate");
  CommandOptions o;
  o.config = config_path("scalar_feasible.json");
  o.replicas = 2000;
  o.horizon = 300;

  o.out = dir / "a";
  Run r = run(cmd_simulate, o);
  REQUIRE(r.code == kExitOk);
  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["d_estimate"].get<double>() == doctest::Approx(3.0).epsilon(0.05));
  CHECK(summary["analytic_tail_trace_P"].get<double>() == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(summary["diverged"] == false);

  const std::string trace = slurp(dir / "a" / "trace.csv");
  CHECK(trace.rfind("t,trace_P_t,empirical_mse,empirical_power\n", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 301);

  SUBCASE("byte-identical across runs and thread counts") {
    o.out = dir / "b";
    o.threads = 1;
    REQUIRE(run(cmd_simulate, o).code == kExitOk);
    CHECK(slurp(dir / "b" / "trace.csv") == trace);
    CHECK(slurp(dir / "b" / "summary.json") == slurp(dir / "a" / "summary.json"));
  }

  SUBCASE("seed changes the trace") {
    o.out = dir / "c";
    o.seed = 8;
    REQUIRE(run(cmd_simulate, o).code == kExitOk);
    CHECK(slurp(dir / "c" / "trace.csv") != trace);
  }

  SUBCASE("silent encoder tracks the Lyapunov covariance") {
    o.config = config_path("stable_silent.json");
    o.out = dir / "d";
    o.replicas = 4000;
    o.horizon = 100;
    REQUIRE(run(cmd_simulate, o).code == kExitOk);
    const auto s = nlohmann::json::parse(slurp(dir / "d" / "summary.json"));
    const double lyap = 1.0 / (1.0 - 0.25) + 1.0 / (1.0 - 0.09);
    CHECK(s["analytic_tail_trace_P"].get<double>() == doctest::Approx(lyap).epsilon(1e-6));
    CHECK(s["d_estimate"].get<double>() == doctest::Approx(lyap).epsilon(0.05));
  }

  SUBCASE("gamma override and strict divergence are reported") {
    o.config = write_config(dir, "weak.json", R"({"source": {"A_u_diag": [2.0], "Q": [[1.0]]},
      "channel": {"kind": "MISO", "H": [1.0], "r": 1.0, "power": 1.0},
      "design": {"mode": "normalized", "gamma": [1.0]}})");
    o.out = dir / "e";
    o.replicas = 50;
    r = run(cmd_simulate, o);
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("Diverged") != std::string::npos);
  }

  SUBCASE("bad arguments") {
    o.replicas = 0;
    o.out = dir / "f";
    CHECK(run(cmd_simulate, o).code == kExitInvalid);
    CHECK(!fs::exists(dir / "f" / "trace.csv"));
  }
  fs::remove_all(dir);
}

TEST_CASE("sweep command") {
  CHECK(sweep_achievable(3.0, 3.0, 99.0));
  CHECK(sweep_achievable(0.5, 0.9, 0.0));
  CHECK_FALSE(sweep_achievable(4.0, 3.0, 99.0));
  CHECK_FALSE(sweep_achievable(2.0, 0.5, 3.0));
  CHECK(sweep_achievable(2.0, 0.5, 3.0001));

  CHECK(sweep_axis(1.0, 2.0, 3) == std::vector<double>{1.0, 1.5, 2.0});
  CHECK(sweep_axis(1.0, 2.0, 1) == std::vector<double>{1.0});

  const fs::path dir = testing::scratch_dir("sweep");
  CommandOptions o;
  o.out = dir;
  o.steps = 20;
  Run r = run(cmd_sweep, o);
  REQUIRE(r.code == kExitOk);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("lambda1,lambda2,snr,achievable\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 20 * 20);

  SUBCASE("malformed ranges") {
    CommandOptions bad = o;
    bad.lambda_min = 3.0;
    bad.lambda_max = 2.0;
    CHECK(run(cmd_sweep, bad).code == kExitInvalid);
    bad = o;
    bad.steps = 0;
    CHECK(run(cmd_sweep, bad).code == kExitInvalid);
    bad = o;
    bad.snr = {-1.0};
    CHECK(run(cmd_sweep, bad).code == kExitInvalid);
  }

  SUBCASE("verify agrees with the Riccati iteration") {
    o.verify = true;
    r = run(cmd_sweep, o);
    CHECK(r.code == kExitOk);
    CHECK(r.out.find(" 0 disagreements") != std::string::npos);
  }

  SUBCASE("property: random cells match feasibility_check") {
    testing::Gen g(404);
    int compared = 0;
    for (int i = 0; i < 100; ++i) {
      const double l1 = g.uniform(0.05, 4.0);
      const double l2 = g.uniform(0.05, 4.0);
      const double snr = g.uniform(0.0, 100.0);
      const SourceModel src = sweep_source(l1, l2);
      const ChannelModel ch = sweep_channel(snr);
      if (!validate_model(src, ch).valid()) continue;
      ++compared;
      CHECK(sweep_achievable(l1, l2, snr) == feasibility_check(src, ch).feasible);
    }
    CHECK(compared >= 90);
  }
  fs::remove_all(dir);
}
