#pragma once

// Periodic interface graphs and the cut-cell description of the bulk domains
// below (positive phase) and above (negative phase) them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hsflow/errors.hpp"

namespace hsflow {

enum class Phase { positive, negative };

/// One-phase problems live in [0, height_cap] with no upper boundary condition;
/// two-phase problems live in the strip [0, L] with U = -1 on the top row.
enum class PhaseModel { one_phase, two_phase };

/// Uniform node lattice on the x-torus [0, period) times [0, height_cap].
/// Columns i = 0..n_x-1 sit at x_i = i*dx; rows j = 0..n_y sit at y_j = j*dy.
/// Row 0 is the fixed bottom boundary, row n_y the top of the box.
struct PeriodicGrid {
  int n_x = 0;
  int n_y = 0;
  double period = 0.0;
  double height_cap = 0.0;

  PeriodicGrid() = default;
  PeriodicGrid(int nx, int ny, double period_, double cap)
      : n_x(nx), n_y(ny), period(period_), height_cap(cap) {
    if (n_x < 8 || n_y < 8) throw InvalidInput("PeriodicGrid: n_x and n_y must be at least 8");
    if (!(period > 0.0) || !(height_cap > 0.0) || !std::isfinite(period) || !std::isfinite(height_cap))
      throw InvalidInput("PeriodicGrid: period and height_cap must be positive and finite");
  }

  double dx() const noexcept { return period / n_x; }
  double dy() const noexcept { return height_cap / n_y; }
  double x(int i) const noexcept { return i * dx(); }
  double y(int j) const noexcept { return j * dy(); }
  int wrap(int i) const noexcept {
    const int r = i % n_x;
    return r < 0 ? r + n_x : r;
  }
  /// Number of nodes per column including both boundary rows.
  int rows() const noexcept { return n_y + 1; }

  bool operator==(const PeriodicGrid&) const = default;
};

/// Periodic samples f_i of the interface height, constrained to the phase band
/// [delta, height_cap - delta] (for two-phase strips height_cap is L).
class GraphInterface {
public:
  GraphInterface() = default;
  GraphInterface(PeriodicGrid grid, std::vector<double> values, double delta,
                 PhaseModel model = PhaseModel::one_phase)
      : grid_(grid), values_(std::move(values)), delta_(delta), model_(model) {
    if (static_cast<int>(values_.size()) != grid_.n_x)
      throw InvalidInput("GraphInterface: expected " + std::to_string(grid_.n_x) + " samples, got " +
                         std::to_string(values_.size()));
    if (!(delta_ >= 0.0) || !(2.0 * delta_ < grid_.height_cap))
      throw InvalidInput("GraphInterface: delta must satisfy 0 <= delta < height_cap/2");
    const auto bad = band_violations(values_, delta_, upper());
    if (!bad.empty())
      throw InvalidInput("GraphInterface: sample " + std::to_string(bad.front()) + " = " +
                         std::to_string(values_[bad.front()]) + " outside phase band [" +
                         std::to_string(delta_) + ", " + std::to_string(upper()) + "]");
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& samples() const noexcept { return values_; }
  double operator[](int i) const noexcept { return values_[grid_.wrap(i)]; }
  int size() const noexcept { return grid_.n_x; }
  double delta() const noexcept { return delta_; }
  double upper() const noexcept { return grid_.height_cap - delta_; }
  PhaseModel model() const noexcept { return model_; }

  /// Same grid, band and model with new samples (validated).
  GraphInterface with_values(std::vector<double> v) const {
    return GraphInterface(grid_, std::move(v), delta_, model_);
  }

  /// Columns whose samples are non-finite or outside [lo, hi].
  static std::vector<int> band_violations(std::span<const double> v, double lo, double hi) {
    std::vector<int> bad;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!std::isfinite(v[i]) || v[i] < lo || v[i] > hi) bad.push_back(static_cast<int>(i));
    return bad;
  }

private:
  PeriodicGrid grid_;
  std::vector<double> values_;
  double delta_ = 0.0;
  PhaseModel model_ = PhaseModel::one_phase;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Periodic central differences (f_{i+1} - f_{i-1}) / (2 dx).
inline std::vector<double> graph_gradient(const GraphInterface& f) {
  const auto& g = f.grid();
  std::vector<double> d(g.n_x);
  const double inv = 1.0 / (2.0 * g.dx());
  for (int i = 0; i < g.n_x; ++i) d[i] = (f[i + 1] - f[i - 1]) * inv;
  return d;
}

inline Vec2 normal_from_slope(double slope) {
  const double s = 1.0 / std::sqrt(1.0 + slope * slope);
  return {slope * s, -s};
}

/// Inward unit normal of the region below the graph at column i.
inline Vec2 interface_normal(const GraphInterface& f, int i) {
  const double slope = (f[i + 1] - f[i - 1]) / (2.0 * f.grid().dx());
  return normal_from_slope(slope);
}

enum class LegKind : std::uint8_t { interior, interface, bottom, top };

/// Segment from a node towards a lattice neighbour, truncated where it meets
/// the interface. theta is the surviving fraction of the full step, in (0, 1].
struct Leg {
  LegKind kind = LegKind::interior;
  double theta = 1.0;
  double x = 0.0;  // endpoint, x not wrapped
  double y = 0.0;
};

/// Axis leg recorded for an interior node next to the interface.
struct CutLeg {
  int i = 0;
  int j = 0;
  int di = 0;
  int dj = 0;
  double theta = 1.0;
};

struct InterfacePoint {
  double x = 0.0;
  double y = 0.0;
  Vec2 normal;  // inward to this domain's phase
};

/// Interior-node mask and cut-cell geometry of D_f (positive phase, under the
/// graph) or D_f^- (negative phase, between the graph and the top row).
/// Interior nodes of every column form one contiguous row range.
class CutCellDomain {
public:
  CutCellDomain() = default;

  Phase phase() const noexcept { return phase_; }
  const PeriodicGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& heights() const noexcept { return f_; }
  const std::vector<double>& slopes() const noexcept { return slope_; }

  int lo(int i) const noexcept { return lo_[grid_.wrap(i)]; }
  int hi(int i) const noexcept { return hi_[grid_.wrap(i)]; }
  bool interior(int i, int j) const noexcept {
    const int c = grid_.wrap(i);
    return j >= lo_[c] && j <= hi_[c];
  }
  /// Node-major mask, index i * (n_y + 1) + j.
  std::vector<bool> interior_mask() const {
    std::vector<bool> m(static_cast<std::size_t>(grid_.n_x) * grid_.rows(), false);
    for (int i = 0; i < grid_.n_x; ++i)
      for (int j = lo_[i]; j <= hi_[i]; ++j) m[static_cast<std::size_t>(i) * grid_.rows() + j] = true;
    return m;
  }
  int interior_count() const noexcept {
    int n = 0;
    for (int i = 0; i < grid_.n_x; ++i) n += hi_[i] - lo_[i] + 1;
    return n;
  }

  const std::vector<CutLeg>& cut_legs() const noexcept { return cut_legs_; }
  const std::vector<InterfacePoint>& interface_points() const noexcept { return points_; }
  /// Row index carrying fixed Dirichlet data: 0 for the positive phase, n_y for the negative.
  int boundary_row() const noexcept { return phase_ == Phase::positive ? 0 : grid_.n_y; }

  /// Interface height at (unwrapped) x by linear interpolation between columns.
  double height_at(double x) const noexcept {
    const double s = x / grid_.dx();
    const double fl = std::floor(s);
    const int i0 = static_cast<int>(fl);
    const double w = s - fl;
    return (1.0 - w) * f_[grid_.wrap(i0)] + w * f_[grid_.wrap(i0 + 1)];
  }

  /// True if (x, y) lies strictly inside the phase (interface interpolated linearly).
  bool contains(double x, double y) const noexcept {
    const double h = height_at(x);
    if (phase_ == Phase::positive) return y > 0.0 && y < h;
    return y > h && y < grid_.height_cap;
  }

  /// Leg from interior node (i, j) towards (i + di, j + dj), di, dj in {-1, 0, 1}.
  Leg leg(int i, int j, int di, int dj) const noexcept {
    const int jn = j + dj;
    const double x_end = grid_.x(i + di);
    const double y_end = grid_.y(jn);
    // signed clearance from the interface; positive inside the phase
    const double g0 = clearance(f_[grid_.wrap(i)], grid_.y(j));
    const double g1 = clearance(f_[grid_.wrap(i + di)], y_end);
    if (g1 > 0.0) {
      if (phase_ == Phase::positive && jn == 0) return {LegKind::bottom, 1.0, x_end, y_end};
      if (phase_ == Phase::negative && jn == grid_.n_y) return {LegKind::top, 1.0, x_end, y_end};
      return {LegKind::interior, 1.0, x_end, y_end};
    }
    const double t = std::min(1.0, g0 / (g0 - g1));
    return {LegKind::interface, t, grid_.x(i) + t * di * grid_.dx(), grid_.y(j) + t * dj * grid_.dy()};
  }

  friend CutCellDomain build_domain(const GraphInterface& f, Phase phase);

private:
  double clearance(double height, double y) const noexcept {
    return phase_ == Phase::positive ? height - y : y - height;
  }

  Phase phase_ = Phase::positive;
  PeriodicGrid grid_;
  std::vector<double> f_;
  std::vector<double> slope_;
  std::vector<int> lo_;
  std::vector<int> hi_;
  std::vector<CutLeg> cut_legs_;
  std::vector<InterfacePoint> points_;
};

/// Builds the cut-cell description of D_f (phase = positive) or D_f^- (negative).
inline CutCellDomain build_domain(const GraphInterface& f, Phase phase) {
  const auto& g = f.grid();
  if (phase == Phase::negative && f.model() != PhaseModel::two_phase)
    throw InvalidInput("build_domain: the negative phase needs a two-phase strip");
  const auto bad = GraphInterface::band_violations(f.values(), f.delta(), f.upper());
  if (!bad.empty())
    throw InvalidInput("build_domain: sample " + std::to_string(bad.front()) + " outside the phase band");

  const double dy = g.dy();
  CutCellDomain d;
  d.phase_ = phase;
  d.grid_ = g;
  d.f_ = f.samples();
  d.slope_ = graph_gradient(f);
  d.lo_.resize(g.n_x);
  d.hi_.resize(g.n_x);
  for (int i = 0; i < g.n_x; ++i) {
    const double fi = d.f_[i];
    if (fi < 2.0 * dy || g.height_cap - fi < 2.0 * dy)
      throw ResolutionInsufficient("build_domain: interface at column " + std::to_string(i) +
                                   " is closer than 2*dy to a fixed boundary");
    if (phase == Phase::positive) {
      d.lo_[i] = 1;
      int top = static_cast<int>(std::floor(fi / dy));
      while (top >= 1 && !(g.y(top) < fi)) --top;
      while (top + 1 <= g.n_y - 1 && g.y(top + 1) < fi) ++top;
      d.hi_[i] = top;
    } else {
      d.hi_[i] = g.n_y - 1;
      int bot = static_cast<int>(std::ceil(fi / dy));
      while (bot <= g.n_y - 1 && !(g.y(bot) > fi)) ++bot;
      while (bot - 1 >= 1 && g.y(bot - 1) > fi) --bot;
      d.lo_[i] = bot;
    }
    if (d.lo_[i] > d.hi_[i])
      throw ResolutionInsufficient("build_domain: column " + std::to_string(i) + " has no interior node");
  }

  static constexpr int axes[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int i = 0; i < g.n_x; ++i) {
    for (int j = d.lo_[i]; j <= d.hi_[i]; ++j) {
      for (const auto& a : axes) {
        const Leg l = d.leg(i, j, a[0], a[1]);
        if (l.kind == LegKind::interface) d.cut_legs_.push_back({i, j, a[0], a[1], l.theta});
      }
    }
  }

  d.points_.resize(g.n_x);
  for (int i = 0; i < g.n_x; ++i) {
    Vec2 n = normal_from_slope(d.slope_[i]);
    if (phase == Phase::negative) n = {-n.x, -n.y};
    d.points_[i] = {g.x(i), d.f_[i], n};
  }
  return d;
}

}  // namespace hsflow
