#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hsflow/config.hpp"
#include "hsflow/io.hpp"

using namespace hsflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(grid:
  n_x: 16
  n_y: 32
  height_cap: 2.0
initial:
  kind: flat
  c: 1.0
)";

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("hsflow_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code;
  std::string out;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const auto log = dir / "stdout.txt";
  const std::string cmd = std::string(HSFLOW_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Config, MinimalConfigTakesDefaults) {
  const auto c = parse_config_string(kMinimal);
  EXPECT_EQ(c.phase, PhaseModel::one_phase);
  EXPECT_DOUBLE_EQ(c.height, 2.0);
  EXPECT_DOUBLE_EQ(c.delta, 0.1);
  EXPECT_DOUBLE_EQ(c.cfl, 0.4);
  EXPECT_EQ(c.order, 2);
  EXPECT_EQ(c.law.id, "identity");
  EXPECT_EQ(c.op_plus, EllipticOperatorSpec::laplace());
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, TwoPhaseNeedsStripHeight) {
  try {
    parse_config_string("phase: two\ngrid:\n  n_x: 16\ninitial:\n  kind: flat\n  c: 1.0\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "grid.L");
    EXPECT_NE(std::string(e.what()).find("grid.L"), std::string::npos);
  }
  EXPECT_THROW(parse_config_string("phase: two\ngrid:\n  height_cap: 2\n  L: 3\ninitial: {kind: flat, c: 1}\n"),
               ConfigError);
}

TEST(Config, UnknownKeyReportsNameAndLine) {
  const std::string text = std::string(kMinimal) + "evolution:\n  T: 1.0\n  dt_maxx: 0.1\n";
  try {
    parse_config_string(text);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "evolution.dt_maxx");
    EXPECT_EQ(e.line(), 10);
    EXPECT_NE(std::string(e.what()).find("line 10"), std::string::npos);
  }
}

TEST(Config, WrongTypesAndRanges) {
  EXPECT_THROW(parse_config_string(std::string(kMinimal) + "evolution: {T: soon}\n"), ConfigError);
  EXPECT_THROW(parse_config_string(std::string(kMinimal) + "evolution: {cfl: 2}\n"), ConfigError);
  EXPECT_THROW(parse_config_string(std::string(kMinimal) + "law: {id: affine}\n"), ConfigError);
  EXPECT_THROW(parse_config_string(std::string(kMinimal) + "operator: {kind: pucci_plus, lambda: 3, Lambda: 1}\n"),
               ConfigError);
  EXPECT_THROW(parse_config_string("grid: [1, 2]\n"), ConfigError);
  EXPECT_THROW(parse_config_string("grid: {height_cap: 2}\n"), ConfigError);  // no initial
  EXPECT_THROW(parse_config_string(": : :\n  - ["), ConfigError);
}

TEST(Config, SerializeRoundTrips) {
  const std::string text = R"(phase: two
grid: {n_x: 24, n_y: 40, L: 3.0, period: 6.0}
delta: 0.15
operator: {kind: pucci_plus, lambda: 0.5, Lambda: 2.5}
operator_minus: {kind: pucci_minus, lambda: 1, Lambda: 3}
law: {id: table, knots: [0, 1, 2], plus: [0, 1, 3], minus: [0, 2, 3], lambda0: 1, Lambda0: 2}
initial: {kind: sine, mean: 1.5, amp: 0.1, mode: 2}
evolution: {T: 0.3, cfl: 0.25, dt_max: 0.001, frame_stride: 4, order: 1, tol: 1e-11, probe_step: 0.01}
linearize: {column: 5, eps: 0.0003, order: 2, tol: 1e-12}
verify: {trials: 3, gcp_trials: 7}
output: {dir: results, frames: f.ndjson, summary: s.csv, kernel: k.json}
seed: 12345678901
)";
  const auto a = parse_config_string(text);
  const auto b = parse_config_string(serialize_config(a));
  EXPECT_EQ(a, b);
  EXPECT_EQ(serialize_config(a), serialize_config(b));
  EXPECT_EQ(b.seed, 12345678901ull);
  EXPECT_DOUBLE_EQ(b.op_plus.lambda, 0.5);
}

TEST(Config, SamplesFiles) {
  const auto dir = scratch_dir("samples");
  write_file(dir / "ok.txt", "1.0 1.1 1.2 1.1\n");
  auto c = parse_config_string("grid: {n_x: 8, height_cap: 2}\ninitial: {kind: samples, file: ok.txt}\n", dir);
  const auto f = make_initial(c);
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_DOUBLE_EQ(f[1], 1.05);  // resampled from 4 to 8 points
  EXPECT_DOUBLE_EQ(f[7], 1.0 * 0.5 + 1.1 * 0.5);
  EXPECT_THROW(parse_config_string("grid: {height_cap: 2}\ninitial: {kind: samples, file: missing.txt}\n", dir),
               ConfigError);
  write_file(dir / "bad.txt", "1.0 oops\n");
  c = parse_config_string("grid: {n_x: 8, height_cap: 2}\ninitial: {kind: samples, file: bad.txt}\n", dir);
  EXPECT_THROW(make_initial(c), ConfigError);
  write_file(dir / "high.txt", "1.0 1.95 1.0 1.0\n");
  c = parse_config_string("grid: {n_x: 8, n_y: 16, height_cap: 2}\ninitial: {kind: samples, file: high.txt}\n", dir);
  EXPECT_THROW(make_initial(c), ConfigError);
}

TEST(FrameWriter, NdjsonParsesBackAndMatchesCsv) {
  auto c = parse_config_string("grid: {n_x: 16, n_y: 32, height_cap: 2}\ninitial: {kind: sine, mean: 1, amp: 0.2}\n"
                               "evolution: {T: 0.05, frame_stride: 2}\n");
  std::ostringstream nd, csv;
  const auto f0 = make_initial(c);
  FrameWriter w(nd, &csv, f0.grid().dx());
  const auto frames = run_collect(f0, make_evolution(c));
  for (const auto& fr : frames) w(fr);
  EXPECT_EQ(w.count(), static_cast<int>(frames.size()));

  std::istringstream lines(nd.str());
  std::string line;
  std::size_t k = 0;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    ASSERT_LT(k, frames.size());
    EXPECT_EQ(j["t"].get<double>(), frames[k].t);
    EXPECT_EQ(j["f"].get<std::vector<double>>(), frames[k].f);
    EXPECT_TRUE(j["i_minus"].is_null());
    const auto f = j["f"].get<std::vector<double>>();
    EXPECT_EQ(j["stats"]["min_f"].get<double>(), *std::min_element(f.begin(), f.end()));
    EXPECT_EQ(j["stats"]["lipschitz"].get<double>(), lipschitz_seminorm(f, f0.grid().dx()));
    ++k;
  }
  EXPECT_EQ(k, frames.size());
  std::istringstream rows(csv.str());
  std::getline(rows, line);
  EXPECT_EQ(line, "t,min_f,max_f,lipschitz,max_rhs");
  int n = 0;
  while (std::getline(rows, line)) ++n;
  EXPECT_EQ(n, static_cast<int>(frames.size()));
}

TEST(FrameWriter, RejectsTamperedStats) {
  PeriodicGrid g(16, 32, 2.0, 2.0);
  auto frames = run_collect(GraphInterface(g, flat_profile(g, 1.0), 0.1), [] {
    EvolutionConfig e;
    e.T = 0.01;
    return e;
  }());
  frames[0].stats.max_f += 1e-9;
  std::ostringstream nd;
  FrameWriter w(nd, nullptr, g.dx());
  EXPECT_THROW(w(frames[0]), Error);
}

TEST(FrameWriter, TwoPhaseFramesCarryBothFluxes) {
  PeriodicGrid g(16, 48, 2.0, 3.0);
  EvolutionConfig e;
  e.T = 0.01;
  e.law = VelocityLaw::affine_difference();
  const auto frames = run_collect(GraphInterface(g, flat_profile(g, 1.0), 0.1, PhaseModel::two_phase), e);
  const auto j = frame_json(frames.front());
  ASSERT_TRUE(j["i_minus"].is_array());
  EXPECT_NEAR(j["i_minus"][0].get<double>(), 0.5, 1e-8);
}

TEST(KernelJson, CarriesWeightsAndTail) {
  PeriodicGrid g(16, 32, 2.0 * std::numbers::pi, 2.0);
  const auto k = linearize_I(GraphInterface(g, flat_profile(g, 1.0), 0.1), EllipticOperatorSpec::laplace(), 2);
  const auto j = kernel_json(k, g);
  EXPECT_EQ(j["weights"].size(), 16u);
  EXPECT_EQ(j["base_point"].get<int>(), 2);
  EXPECT_EQ(j["tail_mass"].size(), 9u);
  EXPECT_DOUBLE_EQ(j["tail_mass"][0]["mass"].get<double>(), k.tail_mass(0.0));
}

TEST(Cli, RunIsDeterministicAndLandsOnTheExactSolution) {
  const auto dir = scratch_dir("cli_run");
  const auto cfg = write_file(dir / "c.yaml", "grid: {n_x: 8, n_y: 64, height_cap: 3}\ninitial: {kind: flat, c: 1}\n"
                                              "evolution: {T: 1.5, dt_max: 0.001, cfl: 1, frame_stride: 100}\n");
  const auto a = cli("run --config " + cfg.string() + " --out " + (dir / "a").string(), dir);
  ASSERT_EQ(a.code, 0) << a.out;
  const auto b = cli("run --config " + cfg.string() + " --out " + (dir / "b").string(), dir);
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(slurp(dir / "a" / "frames.ndjson"), slurp(dir / "b" / "frames.ndjson"));
  EXPECT_EQ(slurp(dir / "a" / "summary.csv"), slurp(dir / "b" / "summary.csv"));

  std::istringstream lines(slurp(dir / "a" / "frames.ndjson"));
  std::string line, last;
  while (std::getline(lines, line)) last = line;
  const auto j = json::parse(last);
  EXPECT_EQ(j["t"].get<double>(), 1.5);
  for (double v : j["f"].get<std::vector<double>>()) EXPECT_NEAR(v, 2.0, 2e-3);
}

TEST(Cli, ProbeWritesProfile) {
  const auto dir = scratch_dir("cli_probe");
  const auto cfg = write_file(dir / "c.yaml", "grid: {n_x: 8, n_y: 40, height_cap: 2}\ninitial: {kind: flat, c: 0.5}\n");
  const auto r = cli("probe --config " + cfg.string() + " --out " + dir.string(), dir);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = json::parse(slurp(dir / "probe_I.json"));
  for (double v : j["values"].get<std::vector<double>>()) EXPECT_NEAR(v, 2.0, 1e-9);
  EXPECT_EQ(cli("probe --subject H --config " + cfg.string() + " --out " + dir.string(), dir).code, 2);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli_codes");
  const auto bad = write_file(dir / "bad.yaml", "grid: {height_cap: 2}\ninitial: {kind: flat, c: 1}\nbogus: 1\n");
  const auto r = cli("run --config " + bad.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bogus"), std::string::npos);
  EXPECT_NE(r.out.find("line 3"), std::string::npos);
  EXPECT_EQ(cli("run --config " + (dir / "nope.yaml").string(), dir).code, 2);

  const auto grow = write_file(dir / "grow.yaml", "grid: {n_x: 8, n_y: 32, height_cap: 1.6}\ndelta: 0.2\n"
                                                  "initial: {kind: flat, c: 1}\nevolution: {T: 5, dt_max: 0.05}\n");
  const auto g = cli("run --config " + grow.string() + " --out " + (dir / "o").string(), dir);
  EXPECT_EQ(g.code, 4) << g.out;
  EXPECT_FALSE(slurp(dir / "o" / "frames.ndjson").empty());  // frames up to the violation survive

  const auto ok = write_file(dir / "ok.yaml", "grid: {n_x: 16, n_y: 16, height_cap: 2}\ninitial: {kind: flat, c: 1}\n"
                                              "verify: {trials: 1, gcp_trials: 1}\n");
  const auto v = cli("verify --suites bulk_monotone,gcp --config " + ok.string() + " --out " + dir.string(), dir);
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_NE(v.out.find("PASS gcp"), std::string::npos);
  EXPECT_EQ(cli("verify --suites nonsense --config " + ok.string() + " --out " + dir.string(), dir).code, 2);
}
