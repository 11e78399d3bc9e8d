#pragma once

// Free boundary operators: I(f) = d_n U_f on the graph (one phase), I+/I- and
// H(f) = G(I+, I-) (two phases), and the graph velocity G * sqrt(1 + f'^2).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsflow/elliptic.hpp"
#include "hsflow/errors.hpp"
#include "hsflow/geometry.hpp"

namespace hsflow {

enum class LawArity { one_phase, two_phase };

struct MonotonicityReport {
  bool ok = true;
  double min_slope_a = 0.0, max_slope_a = 0.0;  // dG/da
  double min_slope_b = 0.0, max_slope_b = 0.0;  // -dG/db (two-phase)
};

/// Balance law g(a) or G(a, b) with declared monotonicity bounds
/// lambda0 <= dG/da <= Lambda0 and lambda0 <= -dG/db <= Lambda0.
/// The declaration is checked by sampling over [probe_lo, probe_hi]^2.
class VelocityLaw {
public:
  using Rule = std::function<double(double, double)>;

  VelocityLaw() = default;
  VelocityLaw(std::string name, LawArity arity, Rule rule, double lambda0, double Lambda0, double probe_lo = 0.1,
              double probe_hi = 10.0)
      : name_(std::move(name)), arity_(arity), rule_(std::move(rule)), lambda0_(lambda0), Lambda0_(Lambda0),
        probe_lo_(probe_lo), probe_hi_(probe_hi) {
    if (!(lambda0_ > 0.0) || !(Lambda0_ >= lambda0_)) throw InvalidInput("VelocityLaw: need 0 < lambda0 <= Lambda0");
    if (!(probe_lo_ >= 0.0) || !(probe_hi_ > probe_lo_)) throw InvalidInput("VelocityLaw: bad probe range");
  }

  static VelocityLaw identity() {
    return {"identity", LawArity::one_phase, [](double a, double) { return a; }, 1.0, 1.0};
  }
  static VelocityLaw affine_difference() {
    return {"affine", LawArity::two_phase, [](double a, double b) { return a - b; }, 1.0, 1.0};
  }
  /// G(a, b) = a^2 - b^2; uniformly monotone only on a bounded range of fluxes.
  static VelocityLaw squares_difference(double lo = 0.1, double hi = 10.0) {
    return {"squares", LawArity::two_phase, [](double a, double b) { return a * a - b * b; }, 2.0 * lo, 2.0 * hi,
            lo, hi};
  }
  /// Piecewise-linear g(a) (one phase) or G(a, b) = g(a) - h(b) (two phase) on
  /// increasing knots, extended linearly beyond the end knots.
  static VelocityLaw table(LawArity arity, std::vector<double> knots, std::vector<double> plus,
                           std::vector<double> minus, double lambda0, double Lambda0) {
    if (knots.size() < 2 || plus.size() != knots.size() ||
        (arity == LawArity::two_phase && minus.size() != knots.size()))
      throw InvalidInput("VelocityLaw::table: knot/value lengths disagree");
    for (std::size_t k = 1; k < knots.size(); ++k)
      if (!(knots[k] > knots[k - 1])) throw InvalidInput("VelocityLaw::table: knots must increase");
    auto pl = [knots, plus](double a) { return piecewise_linear(knots, plus, a); };
    Rule rule;
    if (arity == LawArity::one_phase) {
      rule = [pl](double a, double) { return pl(a); };
    } else {
      auto mi = [knots, minus](double b) { return piecewise_linear(knots, minus, b); };
      rule = [pl, mi](double a, double b) { return pl(a) - mi(b); };
    }
    return {"table", arity, std::move(rule), lambda0, Lambda0, knots.front(), knots.back()};
  }

  double operator()(double a, double b = 0.0) const { return rule_(a, b); }
  const std::string& name() const noexcept { return name_; }
  LawArity arity() const noexcept { return arity_; }
  double lambda0() const noexcept { return lambda0_; }
  double Lambda0() const noexcept { return Lambda0_; }

  /// Finite-difference slopes on a lattice of the probe box.
  MonotonicityReport check_monotone(double tol = 1e-9, int samples = 17) const {
    MonotonicityReport r;
    r.min_slope_a = r.min_slope_b = 1e300;
    r.max_slope_a = r.max_slope_b = -1e300;
    const double step = 1e-6 * (probe_hi_ - probe_lo_);
    auto at = [&](int k) { return probe_lo_ + (probe_hi_ - probe_lo_) * k / (samples - 1); };
    const int nb = arity_ == LawArity::two_phase ? samples : 1;
    for (int ia = 0; ia < samples; ++ia) {
      for (int ib = 0; ib < nb; ++ib) {
        const double a = std::clamp(at(ia), probe_lo_ + step, probe_hi_ - step);
        const double b = arity_ == LawArity::two_phase ? std::clamp(at(ib), probe_lo_ + step, probe_hi_ - step) : 0.0;
        const double sa = ((*this)(a + step, b) - (*this)(a - step, b)) / (2.0 * step);
        r.min_slope_a = std::min(r.min_slope_a, sa);
        r.max_slope_a = std::max(r.max_slope_a, sa);
        if (arity_ == LawArity::two_phase) {
          const double sb = -((*this)(a, b + step) - (*this)(a, b - step)) / (2.0 * step);
          r.min_slope_b = std::min(r.min_slope_b, sb);
          r.max_slope_b = std::max(r.max_slope_b, sb);
        }
      }
    }
    const double etol = tol * std::max(1.0, Lambda0_);
    r.ok = r.min_slope_a >= lambda0_ - etol && r.max_slope_a <= Lambda0_ + etol;
    if (arity_ == LawArity::two_phase) r.ok = r.ok && r.min_slope_b >= lambda0_ - etol && r.max_slope_b <= Lambda0_ + etol;
    return r;
  }

private:
  static double piecewise_linear(const std::vector<double>& x, const std::vector<double>& y, double v) {
    std::size_t k = 1;
    while (k + 1 < x.size() && v > x[k]) ++k;
    const double t = (v - x[k - 1]) / (x[k] - x[k - 1]);
    return y[k - 1] + t * (y[k] - y[k - 1]);
  }

  std::string name_;
  LawArity arity_ = LawArity::one_phase;
  Rule rule_;
  double lambda0_ = 1.0, Lambda0_ = 1.0;
  double probe_lo_ = 0.1, probe_hi_ = 10.0;
};

struct FluxOptions {
  int order = 2;            // 1: U(X0+hn)/h, 2: (4U(X0+hn) - U(X0+2hn))/(2h)
  double tol = 1e-10;       // elliptic solver tolerance
  double probe_step = 0.0;  // 0 selects min(dx, dy)
};

/// Per-column fluxes. i_minus is present for two-phase evaluations.
struct InterfaceFluxes {
  std::vector<double> i_plus;
  std::optional<std::vector<double>> i_minus;
  int order = 2;
  std::vector<int> clipped_plus;   // columns where order 2 fell back to order 1
  std::vector<int> clipped_minus;
};

namespace detail {

// Value of the field on grid column c at height y. Between the last interior
// node and the interface the column is interpolated linearly towards the
// interface datum; beyond the interface the interface datum itself is used.
inline double column_value(const BulkField& u, const CutCellDomain& d, int c, double y) {
  const auto& g = d.grid();
  const double dy = g.dy();
  c = g.wrap(c);
  const double xc = g.x(c);
  const double fc = d.heights()[c];
  const double uf = u.bc.interface(xc, fc);
  if (d.phase() == Phase::positive) {
    if (y >= fc) return uf;
    int jl = static_cast<int>(std::floor(y / dy));
    jl = std::clamp(jl, 0, d.hi(c));
    const double yl = g.y(jl);
    const double ul = jl == 0 ? u.bc.bottom(xc) : u.at(c, jl);
    double yu, uu;
    if (jl + 1 <= d.hi(c)) {
      yu = g.y(jl + 1);
      uu = u.at(c, jl + 1);
    } else {
      yu = fc;
      uu = uf;
    }
    const double t = std::clamp((y - yl) / (yu - yl), 0.0, 1.0);
    return (1.0 - t) * ul + t * uu;
  }
  if (y <= fc) return uf;
  int ju = static_cast<int>(std::ceil(y / dy));
  ju = std::clamp(ju, d.lo(c), g.n_y);
  const double yu = g.y(ju);
  const double uu = ju == g.n_y ? u.bc.top(xc) : u.at(c, ju);
  double yl, ul;
  if (ju - 1 >= d.lo(c)) {
    yl = g.y(ju - 1);
    ul = u.at(c, ju - 1);
  } else {
    yl = fc;
    ul = uf;
  }
  const double t = std::clamp((yu - y) / (yu - yl), 0.0, 1.0);
  return (1.0 - t) * uu + t * ul;
}

// Point value: linear in x between the two bracketing columns. `s` is the
// x-position in column units (may lie outside [0, n_x)).
inline double point_value(const BulkField& u, const CutCellDomain& d, double s, double y) {
  const double fl = std::floor(s);
  const int c0 = static_cast<int>(fl);
  const double w = s - fl;
  const double v0 = column_value(u, d, c0, y);
  if (w == 0.0) return v0;
  return (1.0 - w) * v0 + w * column_value(u, d, c0 + 1, y);
}

}  // namespace detail

/// Inward normal derivative of the field at the interface point of column i,
/// by one-sided differences along the inward normal of the domain's phase.
/// Sets *clipped when order 2 had to fall back to order 1.
inline double normal_derivative_probe(const BulkField& u, const CutCellDomain& d, int i, int order,
                                      double probe_step = 0.0, bool* clipped = nullptr) {
  if (order != 1 && order != 2) throw InvalidInput("normal_derivative_probe: order must be 1 or 2");
  const auto& g = d.grid();
  i = g.wrap(i);
  const double h = probe_step > 0.0 ? probe_step : std::min(g.dx(), g.dy());
  const InterfacePoint& X0 = d.interface_points()[i];
  const double u0 = u.bc.interface(X0.x, X0.y);
  auto sample = [&](double t) {
    const double x = X0.x + t * X0.normal.x;
    const double y = X0.y + t * X0.normal.y;
    const bool inside = d.contains(x, y);
    const double s = i + t * X0.normal.x / g.dx();
    return std::pair{inside, inside ? detail::point_value(u, d, s, y) : 0.0};
  };
  const auto [in1, u1] = sample(h);
  if (!in1)
    throw ProbeOutOfPhase("normal_derivative_probe: probe point left the phase at column " + std::to_string(i), i);
  if (clipped) *clipped = false;
  if (order == 1) return (u1 - u0) / h;
  const auto [in2, u2] = sample(2.0 * h);
  if (!in2) {
    if (clipped) *clipped = true;
    return (u1 - u0) / h;
  }
  return (4.0 * (u1 - u0) - (u2 - u0)) / (2.0 * h);
}

/// One phase evaluation: the domain, its bulk solution and the probed derivatives.
struct PhaseEvaluation {
  CutCellDomain domain;
  BulkField field;
  std::vector<double> values;  // inward normal derivative per column (sign as in the phase)
  std::vector<int> clipped;
};

inline PhaseEvaluation evaluate_phase(const GraphInterface& f, Phase phase, const EllipticOperatorSpec& op,
                                      const FluxOptions& opts = {}, const BulkField* warm = nullptr) {
  PhaseEvaluation ev;
  ev.domain = build_domain(f, phase);
  BulkSolveOptions bo;
  bo.tol = opts.tol;
  std::vector<double> guess;
  if (warm) guess = remap_values(*warm, detail::layout_of(ev.domain));
  ev.field = solve_bulk(ev.domain, op, BoundaryData::free_boundary(), bo,
                        warm ? std::optional<std::span<const double>>(guess) : std::nullopt);
  ev.values.resize(f.size());
  for (int i = 0; i < f.size(); ++i) {
    bool clipped = false;
    ev.values[i] = normal_derivative_probe(ev.field, ev.domain, i, opts.order, opts.probe_step, &clipped);
    if (clipped) ev.clipped.push_back(i);
  }
  return ev;
}

/// I(f) per column: normal derivative of U_f (U = 1 on the bottom, 0 on the graph).
inline InterfaceFluxes op_I(const GraphInterface& f, const EllipticOperatorSpec& op, const FluxOptions& opts = {}) {
  auto ev = evaluate_phase(f, Phase::positive, op, opts);
  InterfaceFluxes out;
  out.i_plus = std::move(ev.values);
  out.order = opts.order;
  out.clipped_plus = std::move(ev.clipped);
  return out;
}

/// I-(f) per column: -d_{n-} U-_f with U- = 0 on the graph and -1 on the top of the strip.
inline std::vector<double> op_I_minus(const GraphInterface& f, const EllipticOperatorSpec& op,
                                      const FluxOptions& opts = {}) {
  auto ev = evaluate_phase(f, Phase::negative, op, opts);
  for (double& v : ev.values) v = -v;
  return ev.values;
}

/// Two-phase fluxes I+ and I-.
inline InterfaceFluxes two_phase_fluxes(const GraphInterface& f, const EllipticOperatorSpec& op_plus,
                                        const EllipticOperatorSpec& op_minus, const FluxOptions& opts = {}) {
  auto plus = evaluate_phase(f, Phase::positive, op_plus, opts);
  auto minus = evaluate_phase(f, Phase::negative, op_minus, opts);
  InterfaceFluxes out;
  out.i_plus = std::move(plus.values);
  for (double& v : minus.values) v = -v;
  out.i_minus = std::move(minus.values);
  out.order = opts.order;
  out.clipped_plus = std::move(plus.clipped);
  out.clipped_minus = std::move(minus.clipped);
  return out;
}

inline std::vector<double> apply_law(const VelocityLaw& law, const InterfaceFluxes& fl) {
  const std::size_t n = fl.i_plus.size();
  std::vector<double> out(n);
  if (law.arity() == LawArity::two_phase) {
    if (!fl.i_minus) throw InvalidInput("apply_law: two-phase law needs I- fluxes");
    for (std::size_t i = 0; i < n; ++i) {
      const double a = fl.i_plus[i], b = (*fl.i_minus)[i];
      if (!(a > 0.0) || !(b > 0.0))
        throw InvalidInput("apply_law: fluxes outside the positive domain of G at column " + std::to_string(i));
      out[i] = law(a, b);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = law(fl.i_plus[i]);
  }
  return out;
}

/// H(f) = G(I+(f), I-(f)) per column.
inline std::vector<double> op_H(const GraphInterface& f, const VelocityLaw& G, const EllipticOperatorSpec& op_plus,
                                const EllipticOperatorSpec& op_minus, const FluxOptions& opts = {}) {
  if (G.arity() != LawArity::two_phase) throw InvalidInput("op_H: G must be a two-phase law");
  return apply_law(G, two_phase_fluxes(f, op_plus, op_minus, opts));
}

/// Graph velocity G(I+, I-) * sqrt(1 + f'^2) (or g(I) * sqrt(1 + f'^2)).
inline std::vector<double> interface_velocity(const GraphInterface& f, const VelocityLaw& law,
                                              const InterfaceFluxes& fluxes) {
  auto v = apply_law(law, fluxes);
  const auto slope = graph_gradient(f);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::sqrt(1.0 + slope[i] * slope[i]);
  return v;
}

}  // namespace hsflow
