#pragma once

// Run configuration: YAML schema, strict parsing and serialization.
// Needs yaml-cpp (link the hsflow_io target).
//
// Schema (defaults in brackets; keys marked * are required):
//
//   phase: one | two                              [one]
//   grid:
//     n_x, n_y                                    [256, 256]
//     period                                      [2*pi]
//     height_cap*   (phase one: box height)
//     L*            (phase two: strip height)
//   delta                                         [0.1]
//   operator:       {kind: laplace|pucci_plus|pucci_minus, lambda [1], Lambda [1]}
//   operator_minus: same, phase two only          [laplace]
//   law:
//     id: identity | affine | squares | table     [identity for one, affine for two]
//     lo, hi                 (squares)            [0.1, 10]
//     knots*, plus*, minus*, lambda0*, Lambda0*  (table; minus only for phase two)
//   initial*:
//     kind*: flat | sine | samples
//     c* (flat); mean*, amp*, mode [1] (sine); file* (samples, relative to the config)
//   evolution: {T [1], cfl [0.4], dt_max [0.01], frame_stride [10],
//               order [2], tol [1e-10], probe_step [0 = min(dx, dy)]}
//   linearize: {column [0], eps [0 = 1e-4 max|f|], order [1], tol [1e-13]}
//   verify:    {trials [20], gcp_trials [100]}
//   output:    {dir [out], frames [frames.ndjson], summary [summary.csv], kernel [kernel.json]}
//   seed                                          [1]

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "hsflow/errors.hpp"
#include "hsflow/evolution.hpp"
#include "hsflow/fboperator.hpp"
#include "hsflow/geometry.hpp"
#include "hsflow/profiles.hpp"

namespace hsflow {

struct LawSpec {
  std::string id = "identity";
  double lo = 0.1, hi = 10.0;
  std::vector<double> knots, plus, minus;
  double lambda0 = 1.0, Lambda0 = 1.0;
  bool operator==(const LawSpec&) const = default;
};

struct InitialSpec {
  std::string kind = "flat";
  double c = 1.0;
  double mean = 1.0, amp = 0.0;
  int mode = 1;
  std::string file;  // as written in the config
  bool operator==(const InitialSpec&) const = default;
};

struct RunConfig {
  PhaseModel phase = PhaseModel::one_phase;
  int n_x = 256, n_y = 256;
  double period = 2.0 * std::numbers::pi;
  double height = 0.0;  // height_cap (one phase) or L (two phase)
  double delta = 0.1;
  EllipticOperatorSpec op_plus, op_minus;
  LawSpec law;
  InitialSpec initial;
  double T = 1.0, cfl = 0.4, dt_max = 1e-2;
  int frame_stride = 10;
  int order = 2;
  double tol = 1e-10;
  double probe_step = 0.0;
  int lin_column = 0;
  double lin_eps = 0.0;
  int lin_order = 1;
  double lin_tol = 1e-13;
  int verify_trials = 20;
  int gcp_trials = 100;
  std::string out_dir = "out", frames_file = "frames.ndjson", summary_file = "summary.csv",
              kernel_file = "kernel.json";
  std::uint64_t seed = 1;
  std::filesystem::path base_dir;  // directory of the config file; not serialized

  bool operator==(const RunConfig& o) const {
    return phase == o.phase && n_x == o.n_x && n_y == o.n_y && period == o.period && height == o.height &&
           delta == o.delta && op_plus == o.op_plus && op_minus == o.op_minus && law == o.law &&
           initial == o.initial && T == o.T && cfl == o.cfl && dt_max == o.dt_max &&
           frame_stride == o.frame_stride && order == o.order && tol == o.tol && probe_step == o.probe_step &&
           lin_column == o.lin_column && lin_eps == o.lin_eps && lin_order == o.lin_order && lin_tol == o.lin_tol &&
           verify_trials == o.verify_trials && gcp_trials == o.gcp_trials && out_dir == o.out_dir &&
           frames_file == o.frames_file && summary_file == o.summary_file && kernel_file == o.kernel_file &&
           seed == o.seed;
  }

  PeriodicGrid grid() const { return PeriodicGrid(n_x, n_y, period, height); }
  FluxOptions flux() const { return {order, tol, probe_step}; }
};

namespace detail {

/// Mapping reader that remembers which keys were consumed.
class YamlMap {
public:
  YamlMap(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(path_, "expected a mapping", node_);
  }

  bool has(const std::string& key) const { return node_ && node_[key]; }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(key, node_[key]);
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) fail(full(key), "missing required key '" + full(key) + "'", node_);
    return convert<T>(key, node_[key]);
  }

  YamlMap child(const std::string& key) {
    seen_.insert(key);
    return YamlMap(has(key) ? node_[key] : YAML::Node(), full(key));
  }

  void reject(const std::string& key, const std::string& why) {
    if (has(key)) fail(full(key), "key '" + full(key) + "' " + why, node_[key]);
  }

  /// Throws on any key that was never asked for.
  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) fail(full(k), "unknown key '" + full(k) + "'", kv.first);
    }
  }

  const std::string& path() const { return path_; }
  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& key, const std::string& msg, const YAML::Node& at) {
    const int line = at && at.Mark().line >= 0 ? at.Mark().line + 1 : -1;
    throw ConfigError((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + msg, key, line);
  }

private:
  template <class T>
  T convert(const std::string& key, const YAML::Node& n) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(full(key), "key '" + full(key) + "' has the wrong type", n);
    }
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline OperatorKind parse_operator_kind(const std::string& s, const std::string& key, const YAML::Node& at) {
  if (s == "laplace") return OperatorKind::laplace;
  if (s == "pucci_plus") return OperatorKind::pucci_plus;
  if (s == "pucci_minus") return OperatorKind::pucci_minus;
  YamlMap::fail(key, "key '" + key + "': unknown operator kind '" + s + "'", at);
}

inline std::string operator_kind_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::pucci_plus: return "pucci_plus";
    case OperatorKind::pucci_minus: return "pucci_minus";
    default: return "laplace";
  }
}

inline EllipticOperatorSpec parse_operator(YamlMap m, const YAML::Node& raw) {
  EllipticOperatorSpec s;
  const auto kind = m.get<std::string>("kind", "laplace");
  s.kind = parse_operator_kind(kind, m.full("kind"), raw);
  s.lambda = m.get<double>("lambda", 1.0);
  s.Lambda = m.get<double>("Lambda", 1.0);
  m.finish();
  try {
    s.validate();
  } catch (const InvalidInput& e) {
    YamlMap::fail(m.path(), m.path() + ": " + e.what(), raw);
  }
  return s;
}

}  // namespace detail

inline RunConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::YamlMap;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": YAML syntax error: " + e.msg, "",
                      e.mark.line + 1);
  }
  if (!root || root.IsNull()) throw ConfigError("empty configuration", "");
  YamlMap top(root, "");
  RunConfig c;
  c.base_dir = base_dir;
  auto need = [](bool ok, const std::string& key, const std::string& msg, const YAML::Node& at) {
    if (!ok) YamlMap::fail(key, "key '" + key + "' " + msg, at);
  };

  const auto phase = top.get<std::string>("phase", "one");
  need(phase == "one" || phase == "two", "phase", "must be 'one' or 'two'", root["phase"]);
  c.phase = phase == "two" ? PhaseModel::two_phase : PhaseModel::one_phase;
  const bool two = c.phase == PhaseModel::two_phase;

  {
    auto g = top.child("grid");
    const YAML::Node raw = root["grid"];
    if (!raw) YamlMap::fail("grid", "missing required key 'grid'", root);
    c.n_x = g.get<int>("n_x", 256);
    c.n_y = g.get<int>("n_y", 256);
    c.period = g.get<double>("period", 2.0 * std::numbers::pi);
    if (two) {
      g.reject("height_cap", "is for phase one; a two-phase strip takes grid.L");
      c.height = g.require<double>("L");
      need(c.height > 0.0, "grid.L", "must be positive", raw["L"]);
    } else {
      g.reject("L", "is for phase two; a one-phase box takes grid.height_cap");
      c.height = g.require<double>("height_cap");
      need(c.height > 0.0, "grid.height_cap", "must be positive", raw["height_cap"]);
    }
    need(c.n_x >= 8, "grid.n_x", "must be at least 8", raw["n_x"]);
    need(c.n_y >= 8, "grid.n_y", "must be at least 8", raw["n_y"]);
    need(c.period > 0.0, "grid.period", "must be positive", raw["period"]);
    g.finish();
  }
  c.delta = top.get<double>("delta", 0.1);
  need(c.delta >= 0.0 && 2.0 * c.delta < c.height, "delta", "must satisfy 0 <= delta < height/2", root["delta"]);

  c.op_plus = detail::parse_operator(top.child("operator"), root["operator"]);
  if (two) {
    c.op_minus = detail::parse_operator(top.child("operator_minus"), root["operator_minus"]);
  } else {
    top.reject("operator_minus", "is only valid for phase two");
  }

  {
    auto l = top.child("law");
    const YAML::Node raw = root["law"];
    c.law.id = l.get<std::string>("id", two ? "affine" : "identity");
    const auto& id = c.law.id;
    if (id == "identity") {
      need(!two, "law.id", "'identity' is a one-phase law", raw["id"]);
    } else if (id == "affine" || id == "squares") {
      need(two, "law.id", "'" + id + "' is a two-phase law", raw["id"]);
      if (id == "squares") {
        c.law.lo = l.get<double>("lo", 0.1);
        c.law.hi = l.get<double>("hi", 10.0);
        need(c.law.lo > 0.0 && c.law.hi > c.law.lo, "law.hi", "needs 0 < lo < hi", raw);
      }
    } else if (id == "table") {
      c.law.knots = l.require<std::vector<double>>("knots");
      c.law.plus = l.require<std::vector<double>>("plus");
      if (two) c.law.minus = l.require<std::vector<double>>("minus");
      else l.reject("minus", "is only valid for phase two");
      c.law.lambda0 = l.require<double>("lambda0");
      c.law.Lambda0 = l.require<double>("Lambda0");
    } else {
      YamlMap::fail("law.id", "key 'law.id': unknown law '" + id + "'", raw["id"]);
    }
    l.finish();
  }

  {
    const YAML::Node raw = root["initial"];
    if (!raw) YamlMap::fail("initial", "missing required key 'initial'", root);
    auto i = top.child("initial");
    c.initial.kind = i.require<std::string>("kind");
    const auto& k = c.initial.kind;
    if (k == "flat") {
      c.initial.c = i.require<double>("c");
    } else if (k == "sine") {
      c.initial.mean = i.require<double>("mean");
      c.initial.amp = i.require<double>("amp");
      c.initial.mode = i.get<int>("mode", 1);
    } else if (k == "samples") {
      c.initial.file = i.require<std::string>("file");
      need(std::filesystem::exists(base_dir / c.initial.file), "initial.file",
           "names a file that does not exist: " + c.initial.file, raw["file"]);
    } else {
      YamlMap::fail("initial.kind", "key 'initial.kind': unknown profile kind '" + k + "'", raw["kind"]);
    }
    i.finish();
  }

  {
    auto e = top.child("evolution");
    const YAML::Node raw = root["evolution"];
    c.T = e.get<double>("T", 1.0);
    c.cfl = e.get<double>("cfl", 0.4);
    c.dt_max = e.get<double>("dt_max", 1e-2);
    c.frame_stride = e.get<int>("frame_stride", 10);
    c.order = e.get<int>("order", 2);
    c.tol = e.get<double>("tol", 1e-10);
    c.probe_step = e.get<double>("probe_step", 0.0);
    e.finish();
    need(c.T > 0.0, "evolution.T", "must be positive", raw ? raw["T"] : raw);
    need(c.cfl > 0.0 && c.cfl <= 1.0, "evolution.cfl", "must lie in (0, 1]", raw ? raw["cfl"] : raw);
    need(c.dt_max > 0.0, "evolution.dt_max", "must be positive", raw ? raw["dt_max"] : raw);
    need(c.frame_stride >= 1, "evolution.frame_stride", "must be >= 1", raw ? raw["frame_stride"] : raw);
    need(c.order == 1 || c.order == 2, "evolution.order", "must be 1 or 2", raw ? raw["order"] : raw);
    need(c.tol > 0.0, "evolution.tol", "must be positive", raw ? raw["tol"] : raw);
    need(c.probe_step >= 0.0, "evolution.probe_step", "must be >= 0", raw ? raw["probe_step"] : raw);
  }
  {
    auto l = top.child("linearize");
    const YAML::Node raw = root["linearize"];
    c.lin_column = l.get<int>("column", 0);
    c.lin_eps = l.get<double>("eps", 0.0);
    c.lin_order = l.get<int>("order", 1);
    c.lin_tol = l.get<double>("tol", 1e-13);
    l.finish();
    need(c.lin_column >= 0 && c.lin_column < c.n_x, "linearize.column", "must be a column index",
         raw ? raw["column"] : raw);
    need(c.lin_eps >= 0.0, "linearize.eps", "must be >= 0", raw ? raw["eps"] : raw);
    need(c.lin_order == 1 || c.lin_order == 2, "linearize.order", "must be 1 or 2", raw ? raw["order"] : raw);
    need(c.lin_tol > 0.0, "linearize.tol", "must be positive", raw ? raw["tol"] : raw);
  }
  {
    auto v = top.child("verify");
    const YAML::Node raw = root["verify"];
    c.verify_trials = v.get<int>("trials", 20);
    c.gcp_trials = v.get<int>("gcp_trials", 100);
    v.finish();
    need(c.verify_trials >= 1, "verify.trials", "must be >= 1", raw ? raw["trials"] : raw);
    need(c.gcp_trials >= 1, "verify.gcp_trials", "must be >= 1", raw ? raw["gcp_trials"] : raw);
  }
  {
    auto o = top.child("output");
    c.out_dir = o.get<std::string>("dir", "out");
    c.frames_file = o.get<std::string>("frames", "frames.ndjson");
    c.summary_file = o.get<std::string>("summary", "summary.csv");
    c.kernel_file = o.get<std::string>("kernel", "kernel.json");
    o.finish();
  }
  c.seed = top.get<std::uint64_t>("seed", 1);
  top.finish();
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), "");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path.parent_path());
}

/// Full YAML rendering; parse_config_string(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  const bool two = c.phase == PhaseModel::two_phase;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "phase" << YAML::Value << (two ? "two" : "one");
  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_x" << YAML::Value << c.n_x << YAML::Key << "n_y" << YAML::Value << c.n_y;
  out << YAML::Key << "period" << YAML::Value << c.period;
  out << YAML::Key << (two ? "L" : "height_cap") << YAML::Value << c.height;
  out << YAML::EndMap;
  out << YAML::Key << "delta" << YAML::Value << c.delta;
  auto op = [&](const char* key, const EllipticOperatorSpec& s) {
    out << YAML::Key << key << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << detail::operator_kind_name(s.kind);
    out << YAML::Key << "lambda" << YAML::Value << s.lambda << YAML::Key << "Lambda" << YAML::Value << s.Lambda;
    out << YAML::EndMap;
  };
  op("operator", c.op_plus);
  if (two) op("operator_minus", c.op_minus);
  out << YAML::Key << "law" << YAML::Value << YAML::BeginMap << YAML::Key << "id" << YAML::Value << c.law.id;
  if (c.law.id == "squares")
    out << YAML::Key << "lo" << YAML::Value << c.law.lo << YAML::Key << "hi" << YAML::Value << c.law.hi;
  if (c.law.id == "table") {
    out << YAML::Key << "knots" << YAML::Value << YAML::Flow << c.law.knots;
    out << YAML::Key << "plus" << YAML::Value << YAML::Flow << c.law.plus;
    if (two) out << YAML::Key << "minus" << YAML::Value << YAML::Flow << c.law.minus;
    out << YAML::Key << "lambda0" << YAML::Value << c.law.lambda0;
    out << YAML::Key << "Lambda0" << YAML::Value << c.law.Lambda0;
  }
  out << YAML::EndMap;
  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value
      << c.initial.kind;
  if (c.initial.kind == "flat") out << YAML::Key << "c" << YAML::Value << c.initial.c;
  if (c.initial.kind == "sine")
    out << YAML::Key << "mean" << YAML::Value << c.initial.mean << YAML::Key << "amp" << YAML::Value
        << c.initial.amp << YAML::Key << "mode" << YAML::Value << c.initial.mode;
  if (c.initial.kind == "samples") out << YAML::Key << "file" << YAML::Value << c.initial.file;
  out << YAML::EndMap;
  out << YAML::Key << "evolution" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "T" << YAML::Value << c.T << YAML::Key << "cfl" << YAML::Value << c.cfl;
  out << YAML::Key << "dt_max" << YAML::Value << c.dt_max << YAML::Key << "frame_stride" << YAML::Value
      << c.frame_stride;
  out << YAML::Key << "order" << YAML::Value << c.order << YAML::Key << "tol" << YAML::Value << c.tol;
  out << YAML::Key << "probe_step" << YAML::Value << c.probe_step;
  out << YAML::EndMap;
  out << YAML::Key << "linearize" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "column" << YAML::Value << c.lin_column << YAML::Key << "eps" << YAML::Value << c.lin_eps;
  out << YAML::Key << "order" << YAML::Value << c.lin_order << YAML::Key << "tol" << YAML::Value << c.lin_tol;
  out << YAML::EndMap;
  out << YAML::Key << "verify" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "trials" << YAML::Value << c.verify_trials << YAML::Key << "gcp_trials" << YAML::Value
      << c.gcp_trials;
  out << YAML::EndMap;
  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dir" << YAML::Value << c.out_dir << YAML::Key << "frames" << YAML::Value << c.frames_file;
  out << YAML::Key << "summary" << YAML::Value << c.summary_file << YAML::Key << "kernel" << YAML::Value
      << c.kernel_file;
  out << YAML::EndMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------- builders

inline VelocityLaw make_law(const RunConfig& c) {
  const auto& l = c.law;
  try {
    if (l.id == "identity") return VelocityLaw::identity();
    if (l.id == "affine") return VelocityLaw::affine_difference();
    if (l.id == "squares") return VelocityLaw::squares_difference(l.lo, l.hi);
    return VelocityLaw::table(c.phase == PhaseModel::two_phase ? LawArity::two_phase : LawArity::one_phase, l.knots,
                              l.plus, l.minus, l.lambda0, l.Lambda0);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("law: ") + e.what(), "law");
  }
}

/// Whitespace-separated numbers; resampled periodically-linearly when the
/// count differs from n_x (e.g. under a --resolution override).
inline std::vector<double> read_samples(const std::filesystem::path& path, int n_x) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read samples file " + path.string(), "initial.file");
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("samples file " + path.string() + ": not a number: '" + tok + "'", "initial.file");
    }
  }
  if (v.size() < 2) throw ConfigError("samples file " + path.string() + " needs at least two values", "initial.file");
  if (static_cast<int>(v.size()) == n_x) return v;
  std::vector<double> out(n_x);
  const double m = static_cast<double>(v.size());
  for (int i = 0; i < n_x; ++i) {
    const double s = i * m / n_x;
    const int k = static_cast<int>(std::floor(s));
    const double w = s - k;
    out[i] = (1.0 - w) * v[k % v.size()] + w * v[(k + 1) % v.size()];
  }
  return out;
}

inline GraphInterface make_initial(const RunConfig& c) {
  const auto g = c.grid();
  std::vector<double> v;
  if (c.initial.kind == "flat") v = flat_profile(g, c.initial.c);
  else if (c.initial.kind == "sine") v = sine_profile(g, c.initial.mean, c.initial.amp, c.initial.mode);
  else v = read_samples(c.base_dir / c.initial.file, c.n_x);
  try {
    return GraphInterface(g, std::move(v), c.delta, c.phase);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("initial: ") + e.what(), "initial");
  }
}

inline EvolutionConfig make_evolution(const RunConfig& c) {
  EvolutionConfig e;
  e.T = c.T;
  e.cfl = c.cfl;
  e.dt_max = c.dt_max;
  e.frame_stride = c.frame_stride;
  e.flux = c.flux();
  e.op_plus = c.op_plus;
  e.op_minus = c.op_minus;
  e.law = make_law(c);
  return e;
}

}  // namespace hsflow
