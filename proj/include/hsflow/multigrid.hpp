#pragma once

// Semicoarsening multigrid for StencilMatrix systems.
//
// Columns are coarsened by two in x only, rows are kept, so the hierarchy ends
// in a single column whose system is tridiagonal. Smoothing is zebra line
// Gauss-Seidel along columns; this pairing is robust to the strong dx/dy
// anisotropy of the strip grids. Prolongation is operator dependent (vertical
// couplings lumped onto the diagonal), which keeps cut-cell rows with large
// diagonals from being dragged by their neighbours. Coarse operators are
// Galerkin products P^T A P.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hsflow/errors.hpp"
#include "hsflow/stencil.hpp"

namespace hsflow {

struct LinearSolveOptions {
  double tol = 1e-10;     // on StencilMatrix::scaled_residual
  int max_cycles = 200;
  int pre_sweeps = 1;
  int post_sweeps = 1;
};

struct LinearSolveStats {
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

namespace detail {

struct Parent {
  int coarse = -1;  // coarse unknown index
  double w = 0.0;
};

struct MgLevel {
  StencilMatrix a;
  // prolongation to this level from the next coarser one: up to two parents per unknown
  std::vector<std::array<Parent, 2>> parents;
};

inline bool is_coarse_column(int c) { return c % 2 == 0; }

/// A level flattened for the smoother: per-column tridiagonal parts with their
/// Thomas factors, and the couplings to other columns in CSR form.
class CompiledLevel {
public:
  CompiledLevel() = default;
  explicit CompiledLevel(const StencilMatrix& a) {
    const auto& L = a.layout;
    const int n = a.size();
    n_cols_ = L.n_cols;
    offset_ = L.offset;
    sub_.assign(n, 0.0);
    diag_.assign(n, 0.0);
    sup_.assign(n, 0.0);
    off_ptr_.assign(n + 1, 0);
    off_idx_.clear();
    off_val_.clear();
    off_idx_.reserve(static_cast<std::size_t>(n) * 4);
    off_val_.reserve(static_cast<std::size_t>(n) * 4);
    a.for_each_row([&](int c, int j, int p) {
      const Stencil& s = a.rows[p];
      for (int dc = -1; dc <= 1; ++dc) {
        const int cn = L.wrap(c + dc);
        for (int dj = -1; dj <= 1; ++dj) {
          const double v = s[stencil_slot(dc, dj)];
          if (v == 0.0) continue;
          if (cn == c) {
            if (dj == 0) diag_[p] += v;
            else if (dj < 0) sub_[p] += v;
            else sup_[p] += v;
          } else {
            off_idx_.push_back(L.index(cn, j + dj));
            off_val_.push_back(v);
          }
        }
      }
      off_ptr_[p + 1] = static_cast<int>(off_idx_.size());
    });
    // Thomas factors per column
    cp_.assign(n, 0.0);
    binv_.assign(n, 0.0);
    for (int c = 0; c < n_cols_; ++c) {
      const int b = offset_[c], e = offset_[c + 1];
      double beta = diag_[b];
      binv_[b] = 1.0 / beta;
      for (int k = b + 1; k < e; ++k) {
        cp_[k] = sup_[k - 1] * binv_[k - 1];
        beta = diag_[k] - sub_[k] * cp_[k];
        binv_[k] = 1.0 / beta;
      }
    }
  }

  int size() const noexcept { return offset_.back(); }
  int n_cols() const noexcept { return n_cols_; }

  void relax_column(int c, std::span<double> x, std::span<const double> rhs) const {
    const int b = offset_[c], e = offset_[c + 1];
    double prev = 0.0;
    for (int k = b; k < e; ++k) {
      double r = rhs[k];
      for (int q = off_ptr_[k]; q < off_ptr_[k + 1]; ++q) r -= off_val_[q] * x[off_idx_[q]];
      prev = (r - sub_[k] * prev) * binv_[k];
      x[k] = prev;
    }
    for (int k = e - 2; k >= b; --k) x[k] -= cp_[k + 1] * x[k + 1];
  }

  void zebra(std::span<double> x, std::span<const double> rhs) const {
    for (int c = 0; c < n_cols_; c += 2) relax_column(c, x, rhs);
    for (int c = 1; c < n_cols_; c += 2) relax_column(c, x, rhs);
  }

  double row_residual(int p, int col_begin, int col_end, std::span<const double> x,
                      std::span<const double> rhs) const noexcept {
    double r = rhs[p] - diag_[p] * x[p];
    if (p > col_begin) r -= sub_[p] * x[p - 1];
    if (p + 1 < col_end) r -= sup_[p] * x[p + 1];
    for (int q = off_ptr_[p]; q < off_ptr_[p + 1]; ++q) r -= off_val_[q] * x[off_idx_[q]];
    return r;
  }

  void residual(std::span<const double> x, std::span<const double> rhs, std::span<double> r) const {
    for (int c = 0; c < n_cols_; ++c)
      for (int p = offset_[c]; p < offset_[c + 1]; ++p) r[p] = row_residual(p, offset_[c], offset_[c + 1], x, rhs);
  }

  double scaled_residual(std::span<const double> x, std::span<const double> rhs) const {
    double m = 0.0;
    for (int c = 0; c < n_cols_; ++c)
      for (int p = offset_[c]; p < offset_[c + 1]; ++p)
        m = std::max(m, std::abs(row_residual(p, offset_[c], offset_[c + 1], x, rhs) / diag_[p]));
    return m;
  }

private:
  int n_cols_ = 0;
  std::vector<int> offset_;
  std::vector<double> sub_, diag_, sup_, cp_, binv_;
  std::vector<int> off_ptr_, off_idx_;
  std::vector<double> off_val_;
};

}  // namespace detail

/// Multigrid hierarchy for one matrix; reusable for several right-hand sides.
class SemicoarseningMultigrid {
public:
  explicit SemicoarseningMultigrid(StencilMatrix a) {
    levels_.emplace_back();
    levels_.back().a = std::move(a);
    while (levels_.back().a.layout.n_cols > 1) coarsen();
    for (const auto& l : levels_) compiled_.emplace_back(l.a);
  }

  const StencilMatrix& matrix() const noexcept { return levels_.front().a; }
  int depth() const noexcept { return static_cast<int>(levels_.size()); }

  /// Iterates V-cycles from the initial guess in x until the scaled residual
  /// drops below opts.tol. Throws NonConvergence on hitting the cycle cap.
  LinearSolveStats solve(std::span<const double> b, std::span<double> x,
                         const LinearSolveOptions& opts = {}) {
    const auto& a = compiled_.front();
    LinearSolveStats st;
    st.residual = a.scaled_residual(x, b);
    st.history.push_back(st.residual);
    int stalled = 0;
    while (st.residual > opts.tol) {
      if (st.iterations >= opts.max_cycles || stalled >= 5)
        throw NonConvergence("multigrid: no convergence after " + std::to_string(st.iterations) +
                                 " cycles, residual " + std::to_string(st.residual),
                             st.history);
      vcycle(0, x, b, opts);
      ++st.iterations;
      const double prev = st.residual;
      st.residual = a.scaled_residual(x, b);
      st.history.push_back(st.residual);
      stalled = st.residual >= 0.9 * prev ? stalled + 1 : 0;
    }
    return st;
  }

private:
  void coarsen() {
    const auto& fine = levels_.back();
    const StencilMatrix& A = fine.a;
    const ColumnLayout& F = A.layout;
    const int nf = F.n_cols;
    const int nc = (nf + 1) / 2;

    // coarse column of each fine column's parents
    std::vector<int> left(nf), right(nf);
    for (int c = 0; c < nf; ++c) {
      if (detail::is_coarse_column(c)) {
        left[c] = right[c] = c / 2;
      } else {
        left[c] = (c - 1) / 2;
        right[c] = ((c + 1) % nf) / 2;
      }
    }
    std::vector<int> lo(nc, 1 << 30), hi(nc, -1);
    for (int c = 0; c < nf; ++c) {
      for (int pc : {left[c], right[c]}) {
        lo[pc] = std::min(lo[pc], F.lo[c]);
        hi[pc] = std::max(hi[pc], F.hi[c]);
      }
    }
    ColumnLayout C(lo, hi);

    std::vector<std::array<detail::Parent, 2>> parents(A.size());
    A.for_each_row([&](int c, int j, int p) {
      if (detail::is_coarse_column(c)) {
        parents[p] = {detail::Parent{C.index(c / 2, j), 1.0}, detail::Parent{}};
        return;
      }
      const Stencil& s = A.rows[p];
      double sl = 0.0, sr = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        sl -= s[stencil_slot(-1, dj)];
        sr -= s[stencil_slot(1, dj)];
      }
      const double denom = s[kCenter] + s[stencil_slot(0, -1)] + s[stencil_slot(0, 1)];
      double wl = 0.5, wr = 0.5;
      if (denom > 0.0 && sl >= 0.0 && sr >= 0.0) {
        wl = sl / denom;
        wr = sr / denom;
      }
      parents[p] = {detail::Parent{C.index(left[c], j), wl}, detail::Parent{C.index(right[c], j), wr}};
    });

    // Galerkin product P^T A P, accumulated into the 3x3 coarse stencils
    StencilMatrix Ac(C);
    std::vector<int> col_of(C.size());
    for (int I = 0; I < nc; ++I)
      for (int k = C.offset[I]; k < C.offset[I + 1]; ++k) col_of[k] = I;
    auto coarse_col_of = [&](int idx) { return col_of[idx]; };
    auto rel = [nc](int from, int to) {
      int d = ((to - from) % nc + nc) % nc;
      if (d == 0) return 0;
      if (d == 1) return 1;
      return -1;
    };
    A.for_each_row([&](int c, int j, int p) {
      const Stencil& s = A.rows[p];
      for (const auto& pp : parents[p]) {
        if (pp.coarse < 0 || pp.w == 0.0) continue;
        const int Ip = coarse_col_of(pp.coarse);
        Stencil& out = Ac.rows[pp.coarse];
        for (int dc = -1; dc <= 1; ++dc) {
          const int cq = F.wrap(c + dc);
          for (int dj = -1; dj <= 1; ++dj) {
            const double v = s[stencil_slot(dc, dj)];
            if (v == 0.0) continue;
            const int q = F.index(cq, j + dj);
            for (const auto& qp : parents[q]) {
              if (qp.coarse < 0 || qp.w == 0.0) continue;
              const int Iq = coarse_col_of(qp.coarse);
              out[stencil_slot(rel(Ip, Iq), dj)] += pp.w * v * qp.w;
            }
          }
        }
      }
    });
    // rows that no fine unknown maps onto (possible only with zero weights) get an identity
    for (auto& r : Ac.rows)
      if (r[kCenter] <= 0.0) r[kCenter] = 1.0;

    levels_.back().parents = std::move(parents);
    levels_.emplace_back();
    levels_.back().a = std::move(Ac);
  }

  void vcycle(std::size_t l, std::span<double> x, std::span<const double> b, const LinearSolveOptions& opts) {
    const auto& A = compiled_[l];
    if (l + 1 == levels_.size()) {
      A.relax_column(0, x, b);
      return;
    }
    for (int s = 0; s < opts.pre_sweeps; ++s) A.zebra(x, b);

    const auto& parents = levels_[l].parents;
    const int nc = compiled_[l + 1].size();
    std::vector<double> r(A.size());
    A.residual(x, b, r);
    std::vector<double> rc(nc, 0.0), xc(nc, 0.0);
    for (int p = 0; p < A.size(); ++p)
      for (const auto& pp : parents[p])
        if (pp.coarse >= 0) rc[pp.coarse] += pp.w * r[p];
    vcycle(l + 1, xc, rc, opts);
    for (int p = 0; p < A.size(); ++p)
      for (const auto& pp : parents[p])
        if (pp.coarse >= 0) x[p] += pp.w * xc[pp.coarse];

    for (int s = 0; s < opts.post_sweeps; ++s) A.zebra(x, b);
  }

  std::vector<detail::MgLevel> levels_;
  std::vector<detail::CompiledLevel> compiled_;
};
}  // namespace hsflow
