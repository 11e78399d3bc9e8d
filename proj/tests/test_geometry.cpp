#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hsflow/geometry.hpp"
#include "hsflow/profiles.hpp"

using namespace hsflow;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(PeriodicGrid, SpacingAndWrap) {
  PeriodicGrid g(16, 20, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(g.dx(), 0.125);
  EXPECT_DOUBLE_EQ(g.dy(), 0.05);
  EXPECT_EQ(g.wrap(-1), 15);
  EXPECT_EQ(g.wrap(16), 0);
  EXPECT_EQ(g.rows(), 21);
}

TEST(PeriodicGrid, RejectsTinyOrDegenerate) {
  EXPECT_THROW(PeriodicGrid(4, 16, 1.0, 1.0), InvalidInput);
  EXPECT_THROW(PeriodicGrid(16, 16, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(PeriodicGrid(16, 16, 1.0, -1.0), InvalidInput);
}

TEST(GraphInterface, ValidatesSizeAndBand) {
  PeriodicGrid g(8, 10, 1.0, 1.0);
  EXPECT_THROW(GraphInterface(g, std::vector<double>(7, 0.5), 0.1), InvalidInput);
  auto v = flat_profile(g, 0.5);
  v[3] = 0.95;
  EXPECT_THROW(GraphInterface(g, v, 0.1), InvalidInput);
  v[3] = NAN;
  EXPECT_THROW(GraphInterface(g, v, 0.1), InvalidInput);
  EXPECT_THROW(GraphInterface(g, flat_profile(g, 0.5), 0.6), InvalidInput);
  EXPECT_NO_THROW(GraphInterface(g, flat_profile(g, 0.5), 0.1));
}

TEST(CutCellDomain, FlatInterfaceBetweenRowsGivesHalfLeg) {
  PeriodicGrid g(8, 10, 1.0, 1.0);  // dy = 0.1
  const auto d = build_domain(GraphInterface(g, flat_profile(g, 0.55), 0.1), Phase::positive);
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(d.lo(i), 1);
    EXPECT_EQ(d.hi(i), 5);
    const Leg up = d.leg(i, 5, 0, 1);
    EXPECT_EQ(up.kind, LegKind::interface);
    EXPECT_NEAR(up.theta, 0.5, 1e-12);
    EXPECT_EQ(d.leg(i, 1, 0, -1).kind, LegKind::bottom);
  }
}

TEST(CutCellDomain, InterfaceOnRowExcludesThatRow) {
  PeriodicGrid g(8, 10, 1.0, 1.0);
  const auto d = build_domain(GraphInterface(g, flat_profile(g, 0.5), 0.1), Phase::positive);
  EXPECT_EQ(d.hi(0), 4);
  EXPECT_NEAR(d.leg(0, 4, 0, 1).theta, 1.0, 1e-12);
  EXPECT_EQ(d.leg(0, 4, 0, 1).kind, LegKind::interface);
}

TEST(CutCellDomain, MaskMatchesBruteForce) {
  PeriodicGrid g(32, 40, 2.0 * kPi, 3.0);
  SeededRng rng(7);
  const GraphInterface f(g, random_smooth_profile(g, rng, 1.5, 0.6), 0.2, PhaseModel::two_phase);
  for (Phase ph : {Phase::positive, Phase::negative}) {
    const auto d = build_domain(f, ph);
    const auto mask = d.interior_mask();
    int count = 0;
    for (int i = 0; i < g.n_x; ++i) {
      int runs = 0;
      bool prev = false;
      for (int j = 0; j <= g.n_y; ++j) {
        const double y = j * g.dy();
        const bool expect = ph == Phase::positive ? (j >= 1 && y < f[i]) : (j <= g.n_y - 1 && y > f[i]);
        EXPECT_EQ(mask[i * g.rows() + j], expect) << "i=" << i << " j=" << j;
        EXPECT_EQ(d.interior(i, j), expect);
        count += expect;
        if (expect && !prev) ++runs;
        prev = expect;
      }
      EXPECT_EQ(runs, 1) << "column " << i << " is not contiguous";
    }
    EXPECT_EQ(count, d.interior_count());
  }
}

TEST(CutCellDomain, CutLegEndpointsLieOnInterpolatedInterface) {
  PeriodicGrid g(24, 24, 2.0 * kPi, 2.0);
  SeededRng rng(3);
  const GraphInterface f(g, random_smooth_profile(g, rng, 1.0, 0.4), 0.1);
  const auto d = build_domain(f, Phase::positive);
  int checked = 0;
  for (int i = 0; i < g.n_x; ++i) {
    for (int j = d.lo(i); j <= d.hi(i); ++j) {
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (!di && !dj) continue;
          const Leg l = d.leg(i, j, di, dj);
          if (l.kind != LegKind::interface) continue;
          EXPECT_GT(l.theta, 0.0);
          EXPECT_LE(l.theta, 1.0);
          // the height interpolant is linear along the leg's x-extent
          EXPECT_NEAR(l.y, d.height_at(l.x), 1e-12);
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, g.n_x);
  EXPECT_FALSE(d.cut_legs().empty());
}

TEST(CutCellDomain, ResolutionAndPhaseErrors) {
  PeriodicGrid g(8, 10, 1.0, 1.0);
  EXPECT_THROW(build_domain(GraphInterface(g, flat_profile(g, 0.15), 0.1), Phase::positive), ResolutionInsufficient);
  EXPECT_THROW(build_domain(GraphInterface(g, flat_profile(g, 0.5), 0.1), Phase::negative), InvalidInput);
  EXPECT_THROW(build_domain(GraphInterface(g, flat_profile(g, 0.85), 0.1, PhaseModel::two_phase), Phase::negative),
               ResolutionInsufficient);
}

TEST(CutCellDomain, InterfacePointsAndNormals) {
  PeriodicGrid g(64, 32, 2.0 * kPi, 3.0);
  const GraphInterface f(g, sine_profile(g, 1.5, 0.3), 0.1, PhaseModel::two_phase);
  const auto dp = build_domain(f, Phase::positive);
  const auto dm = build_domain(f, Phase::negative);
  for (int i = 0; i < g.n_x; ++i) {
    const auto& p = dp.interface_points()[i];
    EXPECT_DOUBLE_EQ(p.y, f[i]);
    EXPECT_NEAR(std::hypot(p.normal.x, p.normal.y), 1.0, 1e-14);
    EXPECT_LT(p.normal.y, 0.0);
    const auto& q = dm.interface_points()[i];
    EXPECT_DOUBLE_EQ(q.normal.x, -p.normal.x);
    EXPECT_GT(q.normal.y, 0.0);
    // orthogonal to the discrete tangent (1, f'_i)
    EXPECT_NEAR(p.normal.x + dp.slopes()[i] * p.normal.y, 0.0, 1e-14);
  }
}

TEST(GraphGradient, CentralDifferenceIsSecondOrder) {
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    PeriodicGrid g(n, 16, 2.0 * kPi, 2.0);
    const GraphInterface f(g, sine_profile(g, 1.0, 0.3), 0.1);
    const auto d = graph_gradient(f);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(d[i] - 0.3 * std::cos(g.x(i))));
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.2);
    prev = err;
  }
}
