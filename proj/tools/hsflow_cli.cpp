// hsflow: run, probe, linearize and verify free-boundary flows from a YAML config.
//
// Exit codes: 0 ok, 1 other error, 2 configuration, 3 solver non-convergence,
// 4 phase-band violation, 5 property failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hsflow/analysis.hpp"
#include "hsflow/config.hpp"
#include "hsflow/io.hpp"

namespace fs = std::filesystem;
using namespace hsflow;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNonConvergence = 3, kPhaseBand = 4, kPropertyFailure = 5 };

struct Common {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> resolution;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory (overrides output.dir)");
  app->add_option("--seed", c.seed, "random seed (overrides seed)");
  app->add_option("--resolution", c.resolution, "grid override, <n_x>x<n_y>");
}

RunConfig load(const Common& c) {
  RunConfig cfg = parse_config(c.config);
  if (c.out) cfg.out_dir = *c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.resolution) {
    static const std::regex re(R"((\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(*c.resolution, m, re))
      throw ConfigError("--resolution must look like 256x256, got '" + *c.resolution + "'", "--resolution");
    cfg.n_x = std::stoi(m[1]);
    cfg.n_y = std::stoi(m[2]);
    if (cfg.n_x < 8 || cfg.n_y < 8) throw ConfigError("--resolution: both sizes must be at least 8", "--resolution");
    cfg.lin_column = std::min(cfg.lin_column, cfg.n_x - 1);
  }
  return cfg;
}

fs::path out_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

int cmd_run(const RunConfig& c) {
  const auto f0 = make_initial(c);
  const auto evo = make_evolution(c);
  std::ofstream nd(out_path(c, c.frames_file)), csv(out_path(c, c.summary_file));
  FrameWriter writer(nd, &csv, f0.grid().dx());
  const auto s = run(f0, evo, [&](const Frame& fr) { writer(fr); });
  double lo = s.f.front(), hi = s.f.front();
  for (double v : s.f) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::cout << "t=" << s.t << " steps=" << s.steps << " frames=" << s.frames << " min_f=" << FrameWriter::number(lo)
            << " max_f=" << FrameWriter::number(hi) << "\n";
  return kOk;
}

int cmd_probe(const RunConfig& c, const std::string& subject) {
  const auto f = make_initial(c);
  const bool two = c.phase == PhaseModel::two_phase;
  if ((subject == "Iminus" || subject == "H") && !two)
    throw ConfigError("probe subject '" + subject + "' needs phase: two", "phase");
  std::vector<double> values;
  if (subject == "I" || subject == "Iplus") {
    values = op_I(f, c.op_plus, c.flux()).i_plus;
  } else if (subject == "Iminus") {
    values = op_I_minus(f, c.op_minus, c.flux());
  } else {
    values = op_H(f, make_law(c), c.op_plus, c.op_minus, c.flux());
  }
  json j;
  j["subject"] = subject;
  j["order"] = c.order;
  std::vector<double> xs(f.size());
  for (int i = 0; i < f.size(); ++i) xs[i] = f.grid().x(i);
  j["x"] = xs;
  j["values"] = values;
  std::ofstream(out_path(c, "probe_" + subject + ".json")) << j.dump() << "\n";
  for (std::size_t i = 0; i < values.size(); ++i) std::cout << (i ? "," : "") << FrameWriter::number(values[i]);
  std::cout << "\n";
  return kOk;
}

int cmd_linearize(const RunConfig& c) {
  const auto f = make_initial(c);
  KernelOptions ko;
  ko.eps = c.lin_eps;
  ko.order = c.lin_order;
  ko.tol = c.lin_tol;
  const auto k = linearize_I(f, c.op_plus, c.lin_column, ko);
  std::ofstream(out_path(c, c.kernel_file)) << kernel_json(k, f.grid()).dump() << "\n";
  std::cout << "c0=" << FrameWriter::number(k.c0) << " min_off_diagonal=" << FrameWriter::number(k.min_off_diagonal())
            << " tail_mass(P/4)=" << FrameWriter::number(k.tail_mass(c.period / 4)) << "\n";
  return kOk;
}

const std::vector<std::string> kSuites = {"gcp",           "bulk_monotone", "translation",    "constant_shift",
                                          "far_field_decay", "reflection",  "pucci_ordering", "modulus",
                                          "evolution_comparison"};

int cmd_verify(const RunConfig& c, std::vector<std::string> suites) {
  if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) suites = kSuites;
  for (const auto& s : suites)
    if (std::find(kSuites.begin(), kSuites.end(), s) == kSuites.end())
      throw ConfigError("unknown suite '" + s + "'", "--suites");

  const bool two = c.phase == PhaseModel::two_phase;
  SuiteOptions o;
  o.grid = c.grid();
  o.delta = c.delta;
  o.model = c.phase;
  o.op = c.op_plus;
  o.op_minus = c.op_minus;
  if (two) o.law = make_law(c);
  o.flux = c.flux();
  o.seed = c.seed;
  o.trials = c.verify_trials;
  o.tol = 1e-6 + 10.0 * c.tol;
  o.mean = two ? 0.5 * c.height : c.height / 3.0;
  o.amplitude = 0.1 * c.height;

  std::vector<PropertyReport> reports;
  for (const auto& s : suites) {
    if (s == "gcp") {
      auto p = o;
      p.trials = c.gcp_trials;
      reports.push_back(check_gcp(p));
    } else if (s == "bulk_monotone") {
      reports.push_back(check_bulk_monotone(o));
    } else if (s == "translation") {
      auto p = o;
      p.tol = 1e-10;
      p.flux.tol = std::min(c.tol, 1e-14);
      reports.push_back(check_translation(p));
    } else if (s == "constant_shift") {
      reports.push_back(check_constant_shift(o));
    } else if (s == "far_field_decay") {
      reports.push_back(check_far_field_decay(o));
    } else if (s == "reflection") {
      auto p = o;
      p.tol = 1e-8;
      p.mean = 0.5 * c.height;
      p.op_minus = two ? c.op_minus : EllipticOperatorSpec::laplace();
      reports.push_back(check_reflection(p));
    } else if (s == "pucci_ordering") {
      reports.push_back(check_pucci_ordering(o));
    } else if (s == "modulus") {
      reports.push_back(check_modulus(make_initial(c), make_evolution(c), o.tol));
    } else if (s == "evolution_comparison") {
      reports.push_back(check_evolution_comparison(o, make_evolution(c)));
    }
    std::cout << report_line(reports.back()) << std::endl;
  }
  json j = json::array();
  bool ok = true;
  for (const auto& r : reports) {
    j.push_back(report_json(r));
    ok = ok && r.pass;
  }
  std::ofstream(out_path(c, "verify.json")) << j.dump(2) << "\n";
  return ok ? kOk : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph free-boundary flows: bulk solves, interface fluxes, evolution and property checks"};
  app.require_subcommand(1);

  Common run_opts, probe_opts, lin_opts, verify_opts;
  std::string subject = "I";
  std::vector<std::string> suites;

  auto* run_cmd = app.add_subcommand("run", "evolve the initial profile, writing frames and a summary");
  add_common(run_cmd, run_opts);
  auto* probe_cmd = app.add_subcommand("probe", "evaluate one flux profile of the initial interface");
  add_common(probe_cmd, probe_opts);
  probe_cmd->add_option("--subject", subject, "I | Iplus | Iminus | H")
      ->check(CLI::IsMember({"I", "Iplus", "Iminus", "H"}));
  auto* lin_cmd = app.add_subcommand("linearize", "kernel weights of I at linearize.column");
  add_common(lin_cmd, lin_opts);
  auto* verify_cmd = app.add_subcommand("verify", "run property suites; exit 5 if any fails");
  add_common(verify_cmd, verify_opts);
  verify_cmd->add_option("--suites", suites, "suite names or 'all'")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return cmd_run(load(run_opts));
    if (*probe_cmd) return cmd_probe(load(probe_opts), subject);
    if (*lin_cmd) return cmd_linearize(load(lin_opts));
    if (*verify_cmd) return cmd_verify(load(verify_opts), suites);
  } catch (const ConfigError& e) {
    std::cerr << "config error";
    if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
    std::cerr << ": " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "solver did not converge: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const PhaseBandViolation& e) {
    std::cerr << e.what() << "\n";
    return kPhaseBand;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
