#pragma once

// Explicit Euler time stepping of d/dt f = G(I+, I-) * sqrt(1 + f'^2) with a
// CFL-limited step, frame emission and phase-band guards.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsflow/elliptic.hpp"
#include "hsflow/errors.hpp"
#include "hsflow/fboperator.hpp"
#include "hsflow/geometry.hpp"

namespace hsflow {

struct EvolutionConfig {
  double T = 1.0;
  double cfl = 0.4;
  double dt_max = 1e-2;
  int frame_stride = 10;
  FluxOptions flux;
  EllipticOperatorSpec op_plus = EllipticOperatorSpec::laplace();
  EllipticOperatorSpec op_minus = EllipticOperatorSpec::laplace();
  VelocityLaw law = VelocityLaw::identity();

  void validate(PhaseModel model) const {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("EvolutionConfig: T must be positive");
    if (!(cfl > 0.0) || cfl > 1.0) throw InvalidInput("EvolutionConfig: cfl must lie in (0, 1]");
    if (!(dt_max > 0.0)) throw InvalidInput("EvolutionConfig: dt_max must be positive");
    if (frame_stride < 1) throw InvalidInput("EvolutionConfig: frame_stride must be >= 1");
    op_plus.validate();
    if (model == PhaseModel::two_phase) {
      op_minus.validate();
      if (law.arity() != LawArity::two_phase) throw InvalidInput("EvolutionConfig: two-phase runs need a G(a, b) law");
    } else if (law.arity() != LawArity::one_phase) {
      throw InvalidInput("EvolutionConfig: one-phase runs need a g(a) law");
    }
  }
};

/// max_i |f_{i+1} - f_i| / dx
inline double lipschitz_seminorm(std::span<const double> f, double dx) {
  const std::size_t n = f.size();
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(f[(i + 1) % n] - f[i]));
  return m / dx;
}

/// max_i |f_{i+h} - f_i| for every integer shift h = 1..n/2.
inline std::vector<double> shift_moduli(std::span<const double> f) {
  const std::size_t n = f.size();
  std::vector<double> m(n / 2, 0.0);
  for (std::size_t h = 1; h <= n / 2; ++h)
    for (std::size_t i = 0; i < n; ++i) m[h - 1] = std::max(m[h - 1], std::abs(f[(i + h) % n] - f[i]));
  return m;
}

struct FrameStats {
  double min_f = 0.0;
  double max_f = 0.0;
  double lipschitz = 0.0;
  double dt = 0.0;  // step that produced this frame (0 for the initial one)
  double max_rhs = 0.0;

  static FrameStats of(std::span<const double> f, double dx, double dt, std::span<const double> rhs) {
    FrameStats s;
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    s.min_f = *lo;
    s.max_f = *hi;
    s.lipschitz = lipschitz_seminorm(f, dx);
    s.dt = dt;
    for (double r : rhs) s.max_rhs = std::max(s.max_rhs, std::abs(r));
    return s;
  }
};

struct Frame {
  int step = 0;
  double t = 0.0;
  std::vector<double> f;
  InterfaceFluxes fluxes;
  std::vector<double> rhs;
  FrameStats stats;
};

/// Holds the current interface and the last bulk solutions (used as warm starts).
class Evolver {
public:
  Evolver(GraphInterface f0, EvolutionConfig cfg) : f_(std::move(f0)), cfg_(std::move(cfg)) {
    cfg_.validate(f_.model());
    const auto r = cfg_.law.check_monotone();
    if (!r.ok) throw InvalidInput("Evolver: velocity law '" + cfg_.law.name() + "' violates its monotonicity bounds");
  }

  double time() const noexcept { return t_; }
  int steps() const noexcept { return steps_; }
  const GraphInterface& state() const noexcept { return f_; }
  const EvolutionConfig& config() const noexcept { return cfg_; }

  const InterfaceFluxes& fluxes() {
    evaluate();
    return *fluxes_;
  }
  const std::vector<double>& rhs() {
    evaluate();
    return rhs_;
  }

  /// min(dt_max, cfl * dx / max(1, max |rhs|)).
  double stable_dt() {
    double m = 1.0;
    for (double r : rhs()) m = std::max(m, std::abs(r));
    return std::min(cfg_.dt_max, cfg_.cfl * f_.grid().dx() / m);
  }

  /// f <- f + dt * rhs(f). Throws PhaseBandViolation (state unchanged) if the
  /// result leaves [delta, upper]. `t_after` pins the clock (avoids drift on the last step).
  void advance(double dt, std::optional<double> t_after = std::nullopt) {
    if (!(dt > 0.0)) throw InvalidInput("Evolver::advance: dt must be positive");
    const auto& v = rhs();
    std::vector<double> next(f_.samples());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += dt * v[i];
    const auto bad = GraphInterface::band_violations(next, f_.delta(), f_.upper());
    if (!bad.empty())
      throw PhaseBandViolation("phase-band violation at t = " + std::to_string(t_ + dt) + " (column " +
                                   std::to_string(bad.front()) + ")",
                               t_ + dt, bad);
    f_ = f_.with_values(std::move(next));
    t_ = t_after ? *t_after : t_ + dt;
    ++steps_;
    last_dt_ = dt;
    fluxes_.reset();
  }

  Frame frame() {
    Frame fr;
    fr.step = steps_;
    fr.t = t_;
    fr.f = f_.samples();
    fr.fluxes = fluxes();
    fr.rhs = rhs_;
    fr.stats = FrameStats::of(fr.f, f_.grid().dx(), steps_ == 0 ? 0.0 : last_dt_, fr.rhs);
    return fr;
  }

private:
  void evaluate() {
    if (fluxes_) return;
    InterfaceFluxes fl;
    fl.order = cfg_.flux.order;
    auto plus = evaluate_phase(f_, Phase::positive, cfg_.op_plus, cfg_.flux, warm_plus_ ? &*warm_plus_ : nullptr);
    fl.i_plus = std::move(plus.values);
    fl.clipped_plus = std::move(plus.clipped);
    warm_plus_ = std::move(plus.field);
    if (f_.model() == PhaseModel::two_phase) {
      auto minus =
          evaluate_phase(f_, Phase::negative, cfg_.op_minus, cfg_.flux, warm_minus_ ? &*warm_minus_ : nullptr);
      for (double& v : minus.values) v = -v;
      fl.i_minus = std::move(minus.values);
      fl.clipped_minus = std::move(minus.clipped);
      warm_minus_ = std::move(minus.field);
    }
    rhs_ = interface_velocity(f_, cfg_.law, fl);
    fluxes_ = std::move(fl);
  }

  GraphInterface f_;
  EvolutionConfig cfg_;
  double t_ = 0.0;
  double last_dt_ = 0.0;
  int steps_ = 0;
  std::optional<InterfaceFluxes> fluxes_;
  std::vector<double> rhs_;
  std::optional<BulkField> warm_plus_, warm_minus_;
};

/// One CFL-limited Euler step; returns (f_next, dt_used).
inline std::pair<GraphInterface, double> step(const GraphInterface& f, const EvolutionConfig& cfg) {
  Evolver ev(f, cfg);
  const double dt = ev.stable_dt();
  ev.advance(dt);
  return {ev.state(), dt};
}

using FrameSink = std::function<void(const Frame&)>;

struct RunSummary {
  double t = 0.0;
  int steps = 0;
  int frames = 0;
  std::vector<double> f;
};

/// Integrates to cfg.T, handing frames to `sink`: the initial state, every
/// frame_stride steps, and the final state at exactly T (last step shortened).
/// Frames already emitted stay emitted when a step fails; the error propagates.
inline RunSummary run(const GraphInterface& f0, const EvolutionConfig& cfg, const FrameSink& sink) {
  Evolver ev(f0, cfg);
  RunSummary out;
  auto emit = [&] {
    sink(ev.frame());
    ++out.frames;
  };
  emit();
  const double T = cfg.T;
  while (ev.time() < T) {
    double dt = ev.stable_dt();
    const double remaining = T - ev.time();
    // absorb a sliver of time into this step rather than taking a tiny extra one
    if (dt >= remaining - 1e-12 * T) dt = remaining;
    const bool last = dt == remaining;
    ev.advance(dt, last ? std::optional<double>(T) : std::nullopt);
    if (last) break;
    if (ev.steps() % cfg.frame_stride == 0) emit();
  }
  emit();
  out.t = ev.time();
  out.steps = ev.steps();
  out.f = ev.state().samples();
  return out;
}

inline std::vector<Frame> run_collect(const GraphInterface& f0, const EvolutionConfig& cfg) {
  std::vector<Frame> frames;
  run(f0, cfg, [&](const Frame& fr) { frames.push_back(fr); });
  return frames;
}

}  // namespace hsflow
