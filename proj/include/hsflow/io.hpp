#pragma once

// Output formats: frames as NDJSON, a per-frame CSV summary, kernel estimates
// and flux profiles as JSON documents. Uses nlohmann/json (vendor/json.hpp).

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsflow/analysis.hpp"
#include "hsflow/errors.hpp"
#include "hsflow/evolution.hpp"

namespace hsflow {

using json = nlohmann::json;

inline json stats_json(const FrameStats& s) {
  return {{"min_f", s.min_f}, {"max_f", s.max_f}, {"lipschitz", s.lipschitz}, {"dt", s.dt}, {"max_rhs", s.max_rhs}};
}

/// {t, dt, step, f, i_plus, i_minus (array or null), rhs, stats}
inline json frame_json(const Frame& fr) {
  json j;
  j["t"] = fr.t;
  j["dt"] = fr.stats.dt;
  j["step"] = fr.step;
  j["f"] = fr.f;
  j["i_plus"] = fr.fluxes.i_plus;
  j["i_minus"] = fr.fluxes.i_minus ? json(*fr.fluxes.i_minus) : json(nullptr);
  j["rhs"] = fr.rhs;
  j["stats"] = stats_json(fr.stats);
  return j;
}

/// Writes one frame per line. Every frame's stats are recomputed from its
/// samples before writing; a mismatch is a bug and throws.
class FrameWriter {
public:
  FrameWriter(std::ostream& ndjson, std::ostream* csv, double dx) : nd_(ndjson), csv_(csv), dx_(dx) {
    if (csv_) *csv_ << "t,min_f,max_f,lipschitz,max_rhs\n";
  }

  void operator()(const Frame& fr) {
    const auto again = FrameStats::of(fr.f, dx_, fr.stats.dt, fr.rhs);
    if (again.min_f != fr.stats.min_f || again.max_f != fr.stats.max_f || again.lipschitz != fr.stats.lipschitz ||
        again.max_rhs != fr.stats.max_rhs)
      throw Error("frame stats disagree with the frame samples at step " + std::to_string(fr.step));
    nd_ << frame_json(fr).dump() << '\n';
    if (csv_) *csv_ << number(fr.t) << ',' << number(fr.stats.min_f) << ',' << number(fr.stats.max_f) << ','
                    << number(fr.stats.lipschitz) << ',' << number(fr.stats.max_rhs) << '\n';
    nd_.flush();
    ++count_;
  }

  int count() const noexcept { return count_; }

  /// Shortest round-tripping representation, as used by the JSON output.
  static std::string number(double v) { return json(v).dump(); }

private:
  std::ostream& nd_;
  std::ostream* csv_;
  double dx_;
  int count_ = 0;
};

inline json kernel_json(const KernelEstimate& k, const PeriodicGrid& g) {
  json j;
  j["base_point"] = k.base_point;
  j["x0"] = g.x(k.base_point);
  j["c0"] = k.c0;
  j["drift"] = k.drift;
  j["fd_step"] = k.fd_step;
  j["offsets"] = k.offsets;
  j["weights"] = k.weights;
  j["min_off_diagonal"] = k.min_off_diagonal();
  j["total_abs_mass"] = k.total_abs_mass();
  json tail = json::array();
  for (int s = 0; s <= g.n_x / 2; ++s) {
    const double R = s * g.dx();
    tail.push_back({{"R", R}, {"mass", k.tail_mass(R)}});
  }
  j["tail_mass"] = tail;
  return j;
}

inline json report_json(const PropertyReport& r) {
  return {{"name", r.name},           {"trials", r.trials}, {"max_violation", r.max_violation},
          {"tolerance", r.tolerance}, {"pass", r.pass},     {"notes", r.notes}};
}

/// One line per report: "PASS name trials=.. max_violation=.. tol=.."
inline std::string report_line(const PropertyReport& r) {
  return std::string(r.pass ? "PASS " : "FAIL ") + r.name + " trials=" + std::to_string(r.trials) +
         " max_violation=" + detail::fmt(r.max_violation) + " tol=" + detail::fmt(r.tolerance) +
         (r.notes.empty() ? "" : " (" + r.notes + ")");
}

}  // namespace hsflow
