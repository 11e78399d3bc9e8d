#pragma once

// Bulk Dirichlet problems F(D^2 U) = 0 on cut-cell domains.
//
// Every operator is written as a non-negative combination of directional second
// differences along lattice directions, each discretised Shortley-Weller style
// (three-point quadratic fit with shortened legs at the interface). The
// assembled rows are therefore M-matrix rows and the scheme satisfies a discrete
// maximum principle for every operator kind.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsflow/errors.hpp"
#include "hsflow/geometry.hpp"
#include "hsflow/multigrid.hpp"
#include "hsflow/stencil.hpp"

namespace hsflow {

enum class OperatorKind { laplace, pucci_plus, pucci_minus };

struct EllipticOperatorSpec {
  OperatorKind kind = OperatorKind::laplace;
  double lambda = 1.0;
  double Lambda = 1.0;

  static EllipticOperatorSpec laplace() { return {}; }
  static EllipticOperatorSpec pucci(OperatorKind k, double lambda, double Lambda) {
    EllipticOperatorSpec s{k, lambda, Lambda};
    s.validate();
    return s;
  }
  void validate() const {
    if (kind == OperatorKind::laplace) {
      if (lambda != 1.0 || Lambda != 1.0) throw InvalidInput("laplace operator fixes lambda = Lambda = 1");
      return;
    }
    if (!(lambda > 0.0) || !(Lambda >= lambda) || !std::isfinite(Lambda))
      throw InvalidInput("Pucci operator needs 0 < lambda <= Lambda");
  }
  /// F~(Q) = -F(-Q): the operator seen by the reflected negative phase.
  EllipticOperatorSpec reflected() const {
    EllipticOperatorSpec s = *this;
    if (kind == OperatorKind::pucci_plus) s.kind = OperatorKind::pucci_minus;
    else if (kind == OperatorKind::pucci_minus) s.kind = OperatorKind::pucci_plus;
    return s;
  }
  bool operator==(const EllipticOperatorSpec&) const = default;
};

/// Pucci extremal operators of a list of Hessian eigenvalues.
/// M+ = Lambda * sum(e > 0) + lambda * sum(e <= 0), M- = lambda * sum(e > 0) + Lambda * sum(e <= 0).
enum class PucciSign { plus, minus };
inline double pucci_eval(std::span<const double> eigs, double lambda, double Lambda, PucciSign sign) {
  double pos = 0.0, neg = 0.0;
  for (double e : eigs) (e > 0.0 ? pos : neg) += e;
  return sign == PucciSign::plus ? Lambda * pos + lambda * neg : lambda * pos + Lambda * neg;
}

/// Dirichlet data: bottom row (positive phase), interface, top row (negative phase).
struct BoundaryData {
  std::function<double(double)> bottom = [](double) { return 1.0; };
  std::function<double(double, double)> interface = [](double, double) { return 0.0; };
  std::function<double(double)> top = [](double) { return -1.0; };

  static BoundaryData constant(double bottom_value, double interface_value, double top_value) {
    BoundaryData b;
    b.bottom = [bottom_value](double) { return bottom_value; };
    b.interface = [interface_value](double, double) { return interface_value; };
    b.top = [top_value](double) { return top_value; };
    return b;
  }
  /// The free-boundary problem data: U = 1 on the bottom, 0 on the graph, -1 on the top.
  static BoundaryData free_boundary() { return {}; }
};

/// A directional second difference with weight: coef * d^2/ds^2 along (di*dx, dj*dy).
struct DirectionalTerm {
  int di = 0;
  int dj = 0;
  double coef = 0.0;
};

/// Up to three directional terms per node; a "policy" of the discrete operator.
struct PolicyTerms {
  std::array<DirectionalTerm, 3> terms{};
  int count = 0;
};

/// Assembled rows A u = b with A = -(discrete operator).
struct DiscreteSystem {
  CutCellDomain domain;
  BoundaryData bc;
  StencilMatrix matrix;
  std::vector<double> rhs;
  std::vector<std::uint8_t> pinned;  // rows replaced by u = Dirichlet value (leg collapse)
  int collapsed_legs = 0;
};

inline constexpr double kLegCollapse = 1e-8;

namespace detail {

inline ColumnLayout layout_of(const CutCellDomain& d) {
  const int n = d.grid().n_x;
  std::vector<int> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = d.lo(i);
    hi[i] = d.hi(i);
  }
  return ColumnLayout(std::move(lo), std::move(hi));
}

inline double leg_value(const Leg& l, const BoundaryData& bc) {
  switch (l.kind) {
    case LegKind::interface: return bc.interface(l.x, l.y);
    case LegKind::bottom: return bc.bottom(l.x);
    case LegKind::top: return bc.top(l.x);
    default: return 0.0;
  }
}

/// Second difference along (di, dj) at node (i, j): coefficients towards the
/// forward/backward ends and the centre, including leg shortening.
struct SecondDifference {
  Leg fwd, bwd;
  double c_fwd = 0.0, c_bwd = 0.0, c_center = 0.0;
};

inline SecondDifference second_difference(const CutCellDomain& d, int i, int j, int di, int dj) {
  const auto& g = d.grid();
  const double hx = di * g.dx();
  const double hy = dj * g.dy();
  const double s2 = hx * hx + hy * hy;
  SecondDifference sd;
  sd.fwd = d.leg(i, j, di, dj);
  sd.bwd = d.leg(i, j, -di, -dj);
  const double tp = sd.fwd.theta, tm = sd.bwd.theta;
  sd.c_fwd = 2.0 / (s2 * tp * (tp + tm));
  sd.c_bwd = 2.0 / (s2 * tm * (tp + tm));
  sd.c_center = 2.0 / (s2 * tp * tm);
  return sd;
}

}  // namespace detail

/// Assembles -sum_k coef_k D_k u = 0 with node-dependent policies.
template <class PolicyFn>
DiscreteSystem assemble_policy(const CutCellDomain& domain, const BoundaryData& bc, PolicyFn&& policy_at) {
  DiscreteSystem sys;
  sys.domain = domain;
  sys.bc = bc;
  sys.matrix = StencilMatrix(detail::layout_of(domain));
  sys.rhs.assign(sys.matrix.size(), 0.0);
  sys.pinned.assign(sys.matrix.size(), 0);
  const auto& g = domain.grid();
  const double regular_diag = 2.0 / (g.dx() * g.dx()) + 2.0 / (g.dy() * g.dy());

  sys.matrix.for_each_row([&](int i, int j, int p) {
    const PolicyTerms pol = policy_at(i, j, p);
    Stencil row{};
    double b = 0.0;
    for (int k = 0; k < pol.count; ++k) {
      const auto& t = pol.terms[k];
      if (t.coef == 0.0) continue;
      const auto sd = detail::second_difference(domain, i, j, t.di, t.dj);
      for (const Leg* l : {&sd.fwd, &sd.bwd}) {
        if (l->kind == LegKind::interface && l->theta < kLegCollapse) {
          // node sits on the interface: pin it to the Dirichlet value
          ++sys.collapsed_legs;
          row = Stencil{};
          row[kCenter] = regular_diag;
          sys.matrix.rows[p] = row;
          sys.rhs[p] = regular_diag * detail::leg_value(*l, bc);
          sys.pinned[p] = 1;
          return;
        }
      }
      row[kCenter] += t.coef * sd.c_center;
      const std::pair<const Leg*, double> ends[2] = {{&sd.fwd, t.coef * sd.c_fwd}, {&sd.bwd, t.coef * sd.c_bwd}};
      for (int e = 0; e < 2; ++e) {
        const Leg& l = *ends[e].first;
        const double c = ends[e].second;
        if (l.kind == LegKind::interior) {
          const int sgn = e == 0 ? 1 : -1;
          row[stencil_slot(sgn * t.di, sgn * t.dj)] -= c;
        } else {
          b += c * detail::leg_value(l, bc);
        }
      }
    }
    sys.matrix.rows[p] = row;
    sys.rhs[p] = b;
  });
  return sys;
}

inline PolicyTerms laplace_terms(double scale = 1.0) {
  PolicyTerms t;
  t.terms[0] = {1, 0, scale};
  t.terms[1] = {0, 1, scale};
  t.count = 2;
  return t;
}

/// Shortley-Weller five-point Laplacian on the cut-cell domain.
inline DiscreteSystem assemble_laplace(const CutCellDomain& domain, const BoundaryData& bc) {
  const PolicyTerms t = laplace_terms();
  return assemble_policy(domain, bc, [&](int, int, int) { return t; });
}

/// Values on the interior nodes of a domain (column-major, ColumnLayout order)
/// together with the boundary data they were computed with.
struct BulkField {
  ColumnLayout layout;
  std::vector<double> values;
  BoundaryData bc;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;

  bool has(int i, int j) const noexcept {
    const int c = layout.wrap(i);
    return layout.contains(c, j);
  }
  double at(int i, int j) const noexcept {
    const int c = layout.wrap(i);
    return values[layout.index(c, j)];
  }
};

/// Values of `u` carried over to another layout of the same grid, for warm
/// starts; nodes missing from u take the nearest value in their column.
inline std::vector<double> remap_values(const BulkField& u, const ColumnLayout& target) {
  std::vector<double> out(target.size(), 0.0);
  const auto& src = u.layout;
  if (src.n_cols != target.n_cols) return out;
  for (int c = 0; c < target.n_cols; ++c)
    for (int j = target.lo[c]; j <= target.hi[c]; ++j)
      out[target.index(c, j)] = u.values[src.index(c, std::clamp(j, src.lo[c], src.hi[c]))];
  return out;
}

/// Solves a discrete system by semicoarsening multigrid to max-norm scaled
/// residual tol. Deterministic: fixed cycle schedule and sweep order.
inline BulkField solve_linear(const DiscreteSystem& sys, double tol = 1e-10,
                              std::optional<std::span<const double>> initial = std::nullopt) {
  BulkField field;
  field.layout = sys.matrix.layout;
  field.bc = sys.bc;
  field.values.assign(sys.matrix.size(), 0.0);
  if (initial && initial->size() == field.values.size())
    std::copy(initial->begin(), initial->end(), field.values.begin());
  SemicoarseningMultigrid mg(sys.matrix);
  LinearSolveOptions opts;
  opts.tol = tol;
  const auto st = mg.solve(sys.rhs, field.values, opts);
  field.residual = st.residual;
  field.iterations = st.iterations;
  field.residual_history = st.history;
  return field;
}

namespace detail {

// Policy family for the Pucci operators: axis-aligned diag(a, b) with
// a, b in {lambda, Lambda}, and lambda*I + (Lambda - lambda) v v^T for the two
// lattice diagonals v. All have eigenvalues in [lambda, Lambda] and
// non-negative directional weights, so every policy is monotone.
inline constexpr int kPucciPolicies = 6;

inline PolicyTerms pucci_policy(int k, double lam, double Lam) {
  PolicyTerms t;
  switch (k) {
    case 0: t.terms = {{{1, 0, lam}, {0, 1, lam}, {}}}; t.count = 2; break;
    case 1: t.terms = {{{1, 0, Lam}, {0, 1, Lam}, {}}}; t.count = 2; break;
    case 2: t.terms = {{{1, 0, Lam}, {0, 1, lam}, {}}}; t.count = 2; break;
    case 3: t.terms = {{{1, 0, lam}, {0, 1, Lam}, {}}}; t.count = 2; break;
    case 4: t.terms = {{{1, 0, lam}, {0, 1, lam}, {1, 1, Lam - lam}}}; t.count = 3; break;
    default: t.terms = {{{1, 0, lam}, {0, 1, lam}, {1, -1, Lam - lam}}}; t.count = 3; break;
  }
  return t;
}

/// Directional second differences D_x, D_y, D_{+}, D_{-} of the field at (i, j).
inline std::array<double, 4> directional_values(const DiscreteSystem& sys, const BulkField& u, int i, int j) {
  static constexpr int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  std::array<double, 4> out{};
  const double uc = u.at(i, j);
  for (int k = 0; k < 4; ++k) {
    const auto sd = second_difference(sys.domain, i, j, dirs[k][0], dirs[k][1]);
    auto end_value = [&](const Leg& l, int sgn) {
      if (l.kind == LegKind::interior) return u.at(i + sgn * dirs[k][0], j + sgn * dirs[k][1]);
      return leg_value(l, sys.bc);
    };
    out[k] = sd.c_fwd * end_value(sd.fwd, 1) + sd.c_bwd * end_value(sd.bwd, -1) - sd.c_center * uc;
  }
  return out;
}

inline double policy_value(int k, const std::array<double, 4>& d, double lam, double Lam) {
  switch (k) {
    case 0: return lam * (d[0] + d[1]);
    case 1: return Lam * (d[0] + d[1]);
    case 2: return Lam * d[0] + lam * d[1];
    case 3: return lam * d[0] + Lam * d[1];
    case 4: return lam * (d[0] + d[1]) + (Lam - lam) * d[2];
    default: return lam * (d[0] + d[1]) + (Lam - lam) * d[3];
  }
}

inline double policy_diagonal(const DiscreteSystem& sys, int i, int j, int k, double lam, double Lam) {
  const PolicyTerms t = pucci_policy(k, lam, Lam);
  double diag = 0.0;
  for (int m = 0; m < t.count; ++m) {
    if (t.terms[m].coef == 0.0) continue;
    diag += t.terms[m].coef * second_difference(sys.domain, i, j, t.terms[m].di, t.terms[m].dj).c_center;
  }
  return diag;
}

}  // namespace detail

/// Discrete value of the operator (Laplacian or Pucci extremal over the policy
/// family) applied to a field, per interior node; scaled by the row diagonal.
inline std::vector<double> operator_residual(const DiscreteSystem& sys, const BulkField& u,
                                             const EllipticOperatorSpec& op) {
  std::vector<double> r(u.values.size());
  const double lam = op.kind == OperatorKind::laplace ? 1.0 : op.lambda;
  const double Lam = op.kind == OperatorKind::laplace ? 1.0 : op.Lambda;
  sys.matrix.for_each_row([&](int i, int j, int p) {
    if (sys.pinned[p]) {
      r[p] = 0.0;
      return;
    }
    const auto d = detail::directional_values(sys, u, i, j);
    double v = detail::policy_value(0, d, lam, Lam);
    if (op.kind != OperatorKind::laplace) {
      for (int k = 1; k < detail::kPucciPolicies; ++k) {
        const double w = detail::policy_value(k, d, lam, Lam);
        v = op.kind == OperatorKind::pucci_plus ? std::max(v, w) : std::min(v, w);
      }
    }
    r[p] = v / sys.matrix.rows[p][kCenter];
  });
  return r;
}

struct BulkSolveOptions {
  double tol = 1e-10;
  int max_policy_iterations = 60;
};

/// Solves F(D^2 U) = 0 on the domain. The Laplacian is a single linear solve;
/// Pucci operators use Howard policy iteration, each step a monotone linear
/// solve warm-started from the previous iterate.
inline BulkField solve_bulk(const CutCellDomain& domain, const EllipticOperatorSpec& op, const BoundaryData& bc,
                            const BulkSolveOptions& opts = {},
                            std::optional<std::span<const double>> initial = std::nullopt) {
  op.validate();
  if (op.kind == OperatorKind::laplace) {
    return solve_linear(assemble_laplace(domain, bc), opts.tol, initial);
  }
  const double lam = op.lambda, Lam = op.Lambda;
  const bool maximise = op.kind == OperatorKind::pucci_plus;
  const ColumnLayout layout = detail::layout_of(domain);
  std::vector<int> policy(layout.size(), 0);
  std::vector<double> history;
  BulkField u;
  bool have_u = false;

  for (int it = 0; it < opts.max_policy_iterations; ++it) {
    auto sys = assemble_policy(domain, bc, [&](int, int, int p) { return detail::pucci_policy(policy[p], lam, Lam); });
    std::optional<std::span<const double>> guess = initial;
    if (have_u) guess = std::span<const double>(u.values);
    u = solve_linear(sys, 0.1 * opts.tol, guess);
    have_u = true;

    // policy improvement; switch only on a strict gain beyond the tie threshold
    bool changed = false;
    double worst = 0.0;
    sys.matrix.for_each_row([&](int i, int j, int p) {
      if (sys.pinned[p]) return;
      const auto d = detail::directional_values(sys, u, i, j);
      const double diag = sys.matrix.rows[p][kCenter];
      const double current = detail::policy_value(policy[p], d, lam, Lam);
      int best = policy[p];
      double best_v = current;
      for (int k = 0; k < detail::kPucciPolicies; ++k) {
        const double v = detail::policy_value(k, d, lam, Lam);
        if (maximise ? v > best_v : v < best_v) {
          best_v = v;
          best = k;
        }
      }
      worst = std::max(worst, std::abs(best_v) / diag);
      if (best != policy[p] && std::abs(best_v - current) / diag > 0.1 * opts.tol) {
        policy[p] = best;
        changed = true;
      }
    });
    history.push_back(worst);
    if (!changed) {
      u.residual = std::max(u.residual, worst);
      u.residual_history = history;
      u.iterations = it + 1;
      return u;
    }
  }
  throw NonConvergence("solve_bulk: policy iteration did not settle", history);
}

}  // namespace hsflow
