#pragma once

// Sparse storage for discrete elliptic systems on column-contiguous node sets.
// Every unknown couples only to lattice neighbours (dc, dj) in {-1,0,1}^2, so a
// row is a fixed 3x3 stencil; this also holds for the Galerkin coarse levels of
// the x-semicoarsening multigrid.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <span>
#include <vector>

namespace hsflow {

/// Periodic set of columns, column c holding rows lo[c]..hi[c] (inclusive).
/// Unknowns are numbered column by column.
struct ColumnLayout {
  int n_cols = 0;
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<int> offset;  // size n_cols + 1

  ColumnLayout() = default;
  ColumnLayout(std::vector<int> lo_, std::vector<int> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    n_cols = static_cast<int>(lo.size());
    offset.resize(n_cols + 1);
    offset[0] = 0;
    for (int c = 0; c < n_cols; ++c) offset[c + 1] = offset[c] + (hi[c] - lo[c] + 1);
  }

  int size() const noexcept { return offset.back(); }
  int wrap(int c) const noexcept {
    const int r = c % n_cols;
    return r < 0 ? r + n_cols : r;
  }
  bool contains(int c, int j) const noexcept { return j >= lo[c] && j <= hi[c]; }
  int index(int c, int j) const noexcept { return offset[c] + (j - lo[c]); }
};

/// Slot of the coupling towards (c + dc, j + dj).
constexpr int stencil_slot(int dc, int dj) noexcept { return (dc + 1) * 3 + (dj + 1); }
constexpr int kCenter = stencil_slot(0, 0);

using Stencil = std::array<double, 9>;

/// Row-stencil matrix A; the systems assembled here are M-matrices
/// (positive diagonal, non-positive couplings).
struct StencilMatrix {
  ColumnLayout layout;
  std::vector<Stencil> rows;

  StencilMatrix() = default;
  explicit StencilMatrix(ColumnLayout l) : layout(std::move(l)), rows(layout.size(), Stencil{}) {}

  int size() const noexcept { return layout.size(); }

  template <class F>
  void for_each_row(F&& fn) const {
    for (int c = 0; c < layout.n_cols; ++c)
      for (int j = layout.lo[c]; j <= layout.hi[c]; ++j) fn(c, j, layout.index(c, j));
  }

  /// Index of the neighbour (c + dc, j + dj), or -1 if it is not an unknown.
  int neighbour(int c, int j, int dc, int dj) const noexcept {
    const int cn = layout.wrap(c + dc);
    const int jn = j + dj;
    return layout.contains(cn, jn) ? layout.index(cn, jn) : -1;
  }

  double row_product(int c, int j, int p, std::span<const double> x) const noexcept {
    const Stencil& s = rows[p];
    double acc = 0.0;
    for (int dc = -1; dc <= 1; ++dc) {
      const int cn = layout.wrap(c + dc);
      for (int dj = -1; dj <= 1; ++dj) {
        const double a = s[stencil_slot(dc, dj)];
        if (a == 0.0) continue;
        const int jn = j + dj;
        assert(layout.contains(cn, jn));
        acc += a * x[layout.index(cn, jn)];
      }
    }
    return acc;
  }

  void apply(std::span<const double> x, std::span<double> y) const {
    for_each_row([&](int c, int j, int p) { y[p] = row_product(c, j, p, x); });
  }

  /// r = b - A x
  void residual(std::span<const double> x, std::span<const double> b, std::span<double> r) const {
    for_each_row([&](int c, int j, int p) { r[p] = b[p] - row_product(c, j, p, x); });
  }

  /// max_p |b - A x|_p / A_pp, the residual measured in units of the unknown.
  double scaled_residual(std::span<const double> x, std::span<const double> b) const {
    double m = 0.0;
    for_each_row([&](int c, int j, int p) {
      const double r = (b[p] - row_product(c, j, p, x)) / rows[p][kCenter];
      m = std::max(m, std::abs(r));
    });
    return m;
  }
};

}  // namespace hsflow
