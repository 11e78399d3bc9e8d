#pragma once

// Verification toolkit: linearization of I (kernel weights), dispersion
// multipliers of flat fronts, inf/sup convolutions, the bump barrier, and
// randomized property suites reporting their worst violation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hsflow/elliptic.hpp"
#include "hsflow/errors.hpp"
#include "hsflow/evolution.hpp"
#include "hsflow/fboperator.hpp"
#include "hsflow/geometry.hpp"
#include "hsflow/profiles.hpp"

namespace hsflow {

// ---------------------------------------------------------------- reports

struct PropertyReport {
  std::string name;
  int trials = 0;
  double max_violation = -std::numeric_limits<double>::infinity();  // signed; <= 0 means a margin
  double tolerance = 0.0;
  bool pass = false;
  std::string notes;

  void record(double v) { max_violation = std::max(max_violation, v); }
  PropertyReport& finish() {
    pass = trials > 0 && max_violation <= tolerance;
    return *this;
  }
};

// ---------------------------------------------------------------- dispersion

/// Response multiplier of I around the flat front f = a to the mode cos(k x):
/// I(a + eps cos kx) = 1/a + eps * m(k) cos kx + O(eps^2), m(k) = -(k/a) coth(k a).
/// The k -> 0 limit is the constant-shift response -1/a^2.
inline double dispersion_multiplier(double a, double k) {
  if (!(a > 0.0) || !(k >= 0.0)) throw InvalidInput("dispersion_multiplier: need a > 0, k >= 0");
  if (k * a < 1e-8) return -1.0 / (a * a);
  return -(k / a) / std::tanh(k * a);
}

// ---------------------------------------------------------------- kernel

struct KernelOptions {
  double eps = 0.0;  // 0 selects 1e-4 * max|f|
  int order = 1;
  double tol = 1e-13;
};

/// Linearization of I at one column: weights w_j against unit hats at columns
/// j, the response c0 to a constant shift, and a fitted first moment.
struct KernelEstimate {
  int base_point = 0;
  double c0 = 0.0;
  double drift = 0.0;            // sum_{j != base} w_j h_j
  std::vector<double> weights;   // indexed by column
  std::vector<double> offsets;   // h_j = minimal-image x_j - x_base
  double fd_step = 0.0;

  /// sum of w_j over |h_j| > R (base column excluded)
  double tail_mass(double R) const {
    double s = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j)
      if (static_cast<int>(j) != base_point && std::abs(offsets[j]) > R) s += weights[j];
    return s;
  }
  double total_abs_mass() const {
    double s = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j)
      if (static_cast<int>(j) != base_point) s += std::abs(weights[j]);
    return s;
  }
  double min_off_diagonal() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < weights.size(); ++j)
      if (static_cast<int>(j) != base_point) m = std::min(m, weights[j]);
    return m;
  }
};

namespace detail {

inline double flux_at(const GraphInterface& f, const EllipticOperatorSpec& op, const FluxOptions& fo, int column,
                      const BulkField* warm) {
  const auto domain = build_domain(f, Phase::positive);
  BulkSolveOptions bo;
  bo.tol = fo.tol;
  std::vector<double> guess;
  if (warm) guess = remap_values(*warm, layout_of(domain));
  const auto u = solve_bulk(domain, op, BoundaryData::free_boundary(), bo,
                            warm ? std::optional<std::span<const double>>(guess) : std::nullopt);
  return normal_derivative_probe(u, domain, column, fo.order, fo.probe_step);
}

inline bool fits_band(const GraphInterface& f, double eps) {
  const auto v = f.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double dy = f.grid().dy();
  const double floor = std::max(f.delta(), 2.0 * dy);
  const double ceil = std::min(f.upper(), f.grid().height_cap - 2.0 * dy);
  return *lo - eps >= floor && *hi + eps <= ceil;
}

}  // namespace detail

/// w_j = [I(f + eps e_j, x0) - I(f - eps e_j, x0)] / (2 eps), c0 likewise with e = 1.
/// If f +- eps leaves the band, eps is halved once before giving up.
inline KernelEstimate linearize_I(const GraphInterface& f, const EllipticOperatorSpec& op, int x0,
                                  const KernelOptions& ko = {}) {
  const auto& g = f.grid();
  x0 = g.wrap(x0);
  double eps = ko.eps;
  if (eps <= 0.0) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    eps = 1e-4 * m;
  }
  if (!detail::fits_band(f, eps)) {
    eps *= 0.5;
    if (!detail::fits_band(f, eps))
      throw InvalidInput("linearize_I: perturbed profile leaves the phase band even after halving eps");
  }
  FluxOptions fo;
  fo.order = ko.order;
  fo.tol = ko.tol;
  const auto base = evaluate_phase(f, Phase::positive, op, fo);

  KernelEstimate k;
  k.base_point = x0;
  k.fd_step = eps;
  k.weights.resize(g.n_x);
  k.offsets.resize(g.n_x);
  auto respond = [&](auto&& perturb) {
    std::vector<double> up(f.samples()), dn(f.samples());
    perturb(up, eps);
    perturb(dn, -eps);
    const double ip = detail::flux_at(f.with_values(std::move(up)), op, fo, x0, &base.field);
    const double im = detail::flux_at(f.with_values(std::move(dn)), op, fo, x0, &base.field);
    return (ip - im) / (2.0 * eps);
  };
  for (int j = 0; j < g.n_x; ++j) {
    k.offsets[j] = periodic_offset(g.x(j), g.x(x0), g.period);
    k.weights[j] = respond([j](std::vector<double>& v, double e) { v[j] += e; });
  }
  k.c0 = respond([](std::vector<double>& v, double e) {
    for (double& x : v) x += e;
  });
  for (int j = 0; j < g.n_x; ++j)
    if (j != x0) k.drift += k.weights[j] * k.offsets[j];
  return k;
}

// ---------------------------------------------------------------- convolutions and barriers

/// f^eps(x_i) = max_j f(x_j) - d(x_i, x_j)^2 / (2 eps), periodic distance.
inline GraphInterface sup_convolution(const GraphInterface& f, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("sup_convolution: eps must be positive");
  const auto& g = f.grid();
  std::vector<double> out(g.n_x);
  for (int i = 0; i < g.n_x; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.n_x; ++j) {
      const double d = periodic_offset(g.x(j), g.x(i), g.period);
      m = std::max(m, f[j] - d * d / (2.0 * eps));
    }
    out[i] = m;
  }
  return f.with_values(std::move(out));
}

/// f_eps(x_i) = min_j f(x_j) + d(x_i, x_j)^2 / (2 eps).
inline GraphInterface inf_convolution(const GraphInterface& f, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("inf_convolution: eps must be positive");
  const auto& g = f.grid();
  std::vector<double> out(g.n_x);
  for (int i = 0; i < g.n_x; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.n_x; ++j) {
      const double d = periodic_offset(g.x(j), g.x(i), g.period);
      m = std::min(m, f[j] + d * d / (2.0 * eps));
    }
    out[i] = m;
  }
  return f.with_values(std::move(out));
}

/// Phi(x) = |x|^2 / (1 + |x|^2)
inline double bump_phi(double x) { return x * x / (1.0 + x * x); }

/// phi_R(x) = C + amp * Phi(d(x, x_center) / R), minimal-image distance.
inline std::vector<double> bump_phi_R(const PeriodicGrid& g, double R, double C_offset, int center = 0,
                                      double amp = 1.0) {
  if (!(R > 0.0)) throw InvalidInput("bump_phi_R: R must be positive");
  std::vector<double> v(g.n_x);
  for (int i = 0; i < g.n_x; ++i) v[i] = C_offset + amp * bump_phi(periodic_offset(g.x(i), g.x(center), g.period) / R);
  return v;
}

/// Per-column I(g + phi_R) - I(g); phi_R centered at `center`.
inline std::vector<double> bump_response(const GraphInterface& g, double R, const EllipticOperatorSpec& op,
                                         double C_offset = 0.0, int center = 0, double amp = 1.0,
                                         const FluxOptions& fo = {}) {
  const auto phi = bump_phi_R(g.grid(), R, C_offset, center, amp);
  std::vector<double> v(g.samples());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += phi[i];
  const auto bad = GraphInterface::band_violations(v, g.delta(), g.upper());
  if (!bad.empty()) throw InvalidInput("bump_response: g + phi_R leaves the phase band");
  const auto base = op_I(g, op, fo).i_plus;
  const auto bumped = op_I(g.with_values(std::move(v)), op, fo).i_plus;
  std::vector<double> r(base.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = bumped[i] - base[i];
  return r;
}

// ---------------------------------------------------------------- property suites

struct SuiteOptions {
  PeriodicGrid grid{256, 256, 2.0 * std::numbers::pi, 2.0};
  double delta = 0.1;
  PhaseModel model = PhaseModel::one_phase;
  EllipticOperatorSpec op = EllipticOperatorSpec::laplace();
  EllipticOperatorSpec op_minus = EllipticOperatorSpec::laplace();
  VelocityLaw law = VelocityLaw::affine_difference();  // used by two-phase suites
  FluxOptions flux;
  std::uint64_t seed = 1;
  int trials = 20;
  double tol = 1e-6;
  double mean = 1.0;       // random profiles: mean height
  double amplitude = 0.3;  // and max deviation
};

namespace detail {

inline GraphInterface make_interface(const SuiteOptions& o, std::vector<double> v) {
  return GraphInterface(o.grid, std::move(v), o.delta, o.model);
}

/// I (one phase) or H = G(I+, I-) (two phase) per column.
inline std::vector<double> flux_profile(const GraphInterface& f, const SuiteOptions& o, const FluxOptions& fo) {
  if (o.model == PhaseModel::one_phase) return op_I(f, o.op, fo).i_plus;
  return apply_law(o.law, two_phase_fluxes(f, o.op, o.op_minus, fo));
}

inline std::vector<double> plus(std::vector<double> a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

}  // namespace detail

/// f <= g touching at x0 implies I(f, x0) <= I(g, x0) (H for two-phase
/// suites). Uses order-1 probes. Trial 0 is f = 1, g = 1 + 0.3 (1 - cos x).
inline PropertyReport check_gcp(SuiteOptions o) {
  PropertyReport r{.name = "gcp", .tolerance = o.tol};
  FluxOptions fo = o.flux;
  fo.order = 1;
  SeededRng rng(o.seed);
  for (int t = 0; t < o.trials; ++t) {
    std::vector<double> f, b;
    int i0 = 0;
    if (t == 0) {
      f = flat_profile(o.grid, o.mean);
      b = cosine_profile(o.grid, 0.3, -0.3);  // 0.3 (1 - cos)
      b[0] = 0.0;
    } else {
      f = random_smooth_profile(o.grid, rng, o.mean, o.amplitude);
      i0 = rng.integer(0, o.grid.n_x - 1);
      b = touching_bump(o.grid, rng, i0, rng.uniform(0.02, 0.2));
    }
    const auto F = detail::make_interface(o, f);
    const auto G = detail::make_interface(o, detail::plus(f, b));
    const double lhs = detail::flux_profile(F, o, fo)[i0];
    const double rhs = detail::flux_profile(G, o, fo)[i0];
    r.record(lhs - rhs);
    ++r.trials;
  }
  return r.finish();
}

/// f <= g implies U_f <= U_g on the interior nodes of D_f.
inline PropertyReport check_bulk_monotone(SuiteOptions o) {
  PropertyReport r{.name = "bulk_monotone", .tolerance = o.tol};
  SeededRng rng(o.seed);
  BulkSolveOptions bo;
  bo.tol = o.flux.tol;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = random_smooth_profile(o.grid, rng, o.mean, o.amplitude);
    auto b = random_smooth_profile(o.grid, rng, 0.0, 1.0);
    const double lift = rng.uniform(0.0, 0.15);
    for (double& x : b) x = lift * 0.5 * (1.0 + x);  // in [0, lift]
    const auto F = detail::make_interface(o, f);
    const auto G = detail::make_interface(o, detail::plus(f, b));
    const auto df = build_domain(F, Phase::positive), dg = build_domain(G, Phase::positive);
    const auto uf = solve_bulk(df, o.op, BoundaryData::free_boundary(), bo);
    const auto ug = solve_bulk(dg, o.op, BoundaryData::free_boundary(), bo);
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < o.grid.n_x; ++i)
      for (int j = df.lo(i); j <= df.hi(i); ++j) worst = std::max(worst, uf.at(i, j) - ug.at(i, j));
    r.record(worst);
    ++r.trials;
  }
  return r.finish();
}

/// I(shift(f, s))[i] == I(f)[i + s] for integer column shifts s.
inline PropertyReport check_translation(SuiteOptions o, int shifts_per_profile = 5) {
  PropertyReport r{.name = "translation", .tolerance = o.tol};
  SeededRng rng(o.seed);
  const int n = o.grid.n_x;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = random_smooth_profile(o.grid, rng, o.mean, o.amplitude);
    const auto base = detail::flux_profile(detail::make_interface(o, f), o, o.flux);
    for (int k = 0; k < shifts_per_profile; ++k) {
      const int s = rng.integer(1, n - 1);
      std::vector<double> fs(n);
      for (int i = 0; i < n; ++i) fs[i] = f[(i + s) % n];
      const auto moved = detail::flux_profile(detail::make_interface(o, fs), o, o.flux);
      double worst = 0.0;
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(moved[i] - base[(i + s) % n]));
      r.record(worst);
      ++r.trials;
    }
  }
  return r.finish();
}

/// I(f + s) <= I(f) for s > 0; the notes carry max (I(f) - I(f+s)) / s.
inline PropertyReport check_constant_shift(SuiteOptions o, std::vector<double> shifts = {0.01, 0.1}) {
  PropertyReport r{.name = "constant_shift", .tolerance = o.tol};
  SeededRng rng(o.seed);
  double slope = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = random_smooth_profile(o.grid, rng, o.mean, o.amplitude);
    const auto base = op_I(detail::make_interface(o, f), o.op, o.flux).i_plus;
    for (double s : shifts) {
      auto fs = f;
      for (double& x : fs) x += s;
      const auto moved = op_I(detail::make_interface(o, fs), o.op, o.flux).i_plus;
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < base.size(); ++i) {
        worst = std::max(worst, moved[i] - base[i]);
        slope = std::max(slope, (base[i] - moved[i]) / s);
      }
      r.record(worst);
      ++r.trials;
    }
  }
  r.notes = "max (I(f) - I(f+s))/s = " + detail::fmt(slope);
  return r.finish();
}

/// Perturbing f by eta only outside a window of half-width R around x0 moves
/// I(x0) by an amount non-increasing in R, below 10% of eta once R >= P/4.
/// Violation: the larger of (resp(R_next) - resp(R)) and (resp(R) - 0.1 eta) for R >= P/4.
inline PropertyReport check_far_field_decay(SuiteOptions o, double eta = 0.1) {
  PropertyReport r{.name = "far_field_decay", .tolerance = o.tol};
  SeededRng rng(o.seed);
  const double P = o.grid.period;
  const std::vector<double> radii = {P / 8, P / 4, 3 * P / 8};
  const double ramp = P / 16;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = random_smooth_profile(o.grid, rng, o.mean, o.amplitude);
    const int x0 = rng.integer(0, o.grid.n_x - 1);
    const double base = op_I(detail::make_interface(o, f), o.op, o.flux).i_plus[x0];
    double prev = std::numeric_limits<double>::infinity();
    for (double R : radii) {
      auto fp = f;
      for (int i = 0; i < o.grid.n_x; ++i) {
        const double d = std::abs(periodic_offset(o.grid.x(i), o.grid.x(x0), P)) - R;
        const double s = d <= 0.0 ? 0.0 : d >= ramp ? 1.0 : 0.5 * (1.0 - std::cos(std::numbers::pi * d / ramp));
        fp[i] += eta * s;
      }
      const double resp = std::abs(op_I(detail::make_interface(o, fp), o.op, o.flux).i_plus[x0] - base);
      if (std::isfinite(prev)) r.record(resp - prev);
      if (R >= P / 4 - 1e-12) r.record(resp - 0.1 * eta);
      prev = resp;
    }
    ++r.trials;
  }
  return r.finish();
}

/// Frame-to-frame growth of every shift modulus and of the Lipschitz seminorm.
inline PropertyReport check_modulus(const GraphInterface& f0, const EvolutionConfig& cfg, double tol) {
  PropertyReport r{.name = "modulus", .tolerance = tol};
  std::vector<double> prev_mod;
  double prev_lip = 0.0;
  const double dx = f0.grid().dx();
  run(f0, cfg, [&](const Frame& fr) {
    const auto mod = shift_moduli(fr.f);
    const double lip = lipschitz_seminorm(fr.f, dx);
    if (!prev_mod.empty()) {
      for (std::size_t h = 0; h < mod.size(); ++h) r.record(mod[h] - prev_mod[h]);
      r.record(lip - prev_lip);
    }
    prev_mod = mod;
    prev_lip = lip;
    ++r.trials;
  });
  if (r.trials == 1) r.record(0.0);
  return r.finish();
}

/// Ordered initial pairs f0 <= g0 (touching at one column), both evolved on
/// the shared schedule dt = min of the two CFL steps; violation max(f - g)
/// over every step. Uses order-1 probes.
inline PropertyReport check_evolution_comparison(SuiteOptions o, EvolutionConfig cfg) {
  PropertyReport r{.name = "evolution_comparison", .tolerance = o.tol};
  cfg.flux.order = 1;
  SeededRng rng(o.seed);
  for (int t = 0; t < o.trials; ++t) {
    const auto f0 = random_smooth_profile(o.grid, rng, o.mean, o.amplitude);
    const int i0 = rng.integer(0, o.grid.n_x - 1);
    const auto b = touching_bump(o.grid, rng, i0, rng.uniform(0.02, 0.2));
    Evolver ef(detail::make_interface(o, f0), cfg);
    Evolver eg(detail::make_interface(o, detail::plus(f0, b)), cfg);
    while (ef.time() < cfg.T) {
      double dt = std::min(ef.stable_dt(), eg.stable_dt());
      const double remaining = cfg.T - ef.time();
      if (dt >= remaining - 1e-12 * cfg.T) dt = remaining;
      const bool last = dt == remaining;
      ef.advance(dt, last ? std::optional<double>(cfg.T) : std::nullopt);
      eg.advance(dt, last ? std::optional<double>(cfg.T) : std::nullopt);
      const auto& fv = ef.state().samples();
      const auto& gv = eg.state().samples();
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < fv.size(); ++i) worst = std::max(worst, fv[i] - gv[i]);
      r.record(worst);
      if (last) break;
    }
    ++r.trials;
  }
  return r.finish();
}

/// I-(f) against the one-phase I of the profile rotated by 180 degrees in the
/// strip, L - f(-x), read back at the mirrored columns.
inline PropertyReport check_reflection(SuiteOptions o) {
  PropertyReport r{.name = "reflection", .tolerance = o.tol};
  o.model = PhaseModel::two_phase;
  SeededRng rng(o.seed);
  const int n = o.grid.n_x;
  const double L = o.grid.height_cap;
  for (int t = 0; t < o.trials; ++t) {
    const auto f = random_smooth_profile(o.grid, rng, o.mean, o.amplitude);
    std::vector<double> rot(n);
    for (int i = 0; i < n; ++i) rot[i] = L - f[(n - i) % n];
    const auto direct = op_I_minus(detail::make_interface(o, f), o.op_minus, o.flux);
    const auto mirrored = op_I(GraphInterface(o.grid, rot, o.delta, PhaseModel::one_phase), o.op_minus.reflected(),
                               o.flux).i_plus;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(direct[i] - mirrored[(n - i) % n]));
    r.record(worst);
    ++r.trials;
  }
  return r.finish();
}

/// U_{M-} <= U_Laplace <= U_{M+} on the nodes and the same order for I, with
/// Pucci bounds lambda <= 1 <= Lambda.
inline PropertyReport check_pucci_ordering(SuiteOptions o, double lambda = 1.0, double Lambda = 2.0) {
  PropertyReport r{.name = "pucci_ordering", .tolerance = o.tol};
  if (!(lambda <= 1.0 && Lambda >= 1.0)) throw InvalidInput("check_pucci_ordering: need lambda <= 1 <= Lambda");
  SeededRng rng(o.seed);
  BulkSolveOptions bo;
  bo.tol = o.flux.tol;
  const auto specs = {EllipticOperatorSpec::pucci(OperatorKind::pucci_minus, lambda, Lambda),
                      EllipticOperatorSpec::laplace(),
                      EllipticOperatorSpec::pucci(OperatorKind::pucci_plus, lambda, Lambda)};
  for (int t = 0; t < o.trials; ++t) {
    const auto f = detail::make_interface(o, random_smooth_profile(o.grid, rng, o.mean, o.amplitude));
    const auto d = build_domain(f, Phase::positive);
    std::vector<BulkField> u;
    std::vector<std::vector<double>> I;
    for (const auto& s : specs) {
      u.push_back(solve_bulk(d, s, BoundaryData::free_boundary(), bo));
      std::vector<double> flux(f.size());
      for (int i = 0; i < f.size(); ++i) flux[i] = normal_derivative_probe(u.back(), d, i, o.flux.order);
      I.push_back(std::move(flux));
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < u[0].values.size(); ++p)
      worst = std::max({worst, u[0].values[p] - u[1].values[p], u[1].values[p] - u[2].values[p]});
    for (int i = 0; i < f.size(); ++i) worst = std::max({worst, I[0][i] - I[1][i], I[1][i] - I[2][i]});
    r.record(worst);
    ++r.trials;
  }
  return r.finish();
}

}  // namespace hsflow
