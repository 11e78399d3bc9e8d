#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hsflow/analysis.hpp"

using namespace hsflow;

namespace {
constexpr double kPi = std::numbers::pi;

SuiteOptions small_suite(int n = 48) {
  SuiteOptions o;
  o.grid = PeriodicGrid(n, n, 2.0 * kPi, 2.0);
  o.trials = 4;
  return o;
}
}  // namespace

TEST(Dispersion, ClosedFormValuesAndLimits) {
  EXPECT_NEAR(dispersion_multiplier(1.0, 2.0), -2.0746, 1e-4);
  EXPECT_NEAR(dispersion_multiplier(1.0, 1e-6), -1.0, 1e-6);
  EXPECT_DOUBLE_EQ(dispersion_multiplier(2.0, 0.0), -0.25);
  EXPECT_NEAR(dispersion_multiplier(0.5, 40.0) / -40.0, 2.0, 1e-9);
  EXPECT_THROW(dispersion_multiplier(0.0, 1.0), InvalidInput);
}

TEST(Convolutions, ConstantsAreFixed) {
  PeriodicGrid g(32, 16, 2.0 * kPi, 2.0);
  const GraphInterface f(g, flat_profile(g, 0.9), 0.1);
  const auto up = sup_convolution(f, 0.1), dn = inf_convolution(f, 0.1);
  for (double v : up.samples()) EXPECT_DOUBLE_EQ(v, 0.9);
  for (double v : dn.samples()) EXPECT_DOUBLE_EQ(v, 0.9);
  EXPECT_THROW(sup_convolution(f, 0.0), InvalidInput);
}

TEST(Convolutions, SandwichOverRandomProfiles) {
  PeriodicGrid g(64, 16, 2.0 * kPi, 2.0);
  SeededRng rng(13);
  for (int t = 0; t < 50; ++t) {
    const GraphInterface f(g, random_smooth_profile(g, rng, 1.0, 0.4, 8), 0.1);
    const double eps = rng.uniform(0.01, 1.0);
    const auto up = sup_convolution(f, eps), dn = inf_convolution(f, eps);
    for (int i = 0; i < g.n_x; ++i) {
      EXPECT_GE(up[i], f[i]);
      EXPECT_LE(dn[i], f[i]);
    }
  }
}

TEST(Convolutions, SupIsSemiConvexAndInfIsSemiConcave) {
  PeriodicGrid g(128, 16, 2.0 * kPi, 2.0);
  std::vector<double> hat(g.n_x);
  for (int i = 0; i < g.n_x; ++i) hat[i] = 1.2 - 0.3 * std::abs(periodic_offset(g.x(i), kPi, g.period)) / kPi;
  const GraphInterface f(g, hat, 0.1);
  for (double eps : {0.05, 0.2, 1.0}) {
    const auto s = sup_convolution(f, eps);
    const auto m = inf_convolution(f, eps);
    double worst_s = 1e300, worst_m = -1e300;
    for (int i = 0; i < g.n_x; ++i) {
      const int a = g.wrap(i - 1), b = g.wrap(i + 1);
      worst_s = std::min(worst_s, s[b] - 2 * s[i] + s[a]);
      worst_m = std::max(worst_m, m[b] - 2 * m[i] + m[a]);
    }
    EXPECT_GE(worst_s, -g.dx() * g.dx() / eps - 1e-12);
    EXPECT_LE(worst_m, g.dx() * g.dx() / eps + 1e-12);
  }
}

TEST(Bump, ShapeAndResponse) {
  EXPECT_DOUBLE_EQ(bump_phi(0.0), 0.0);
  EXPECT_DOUBLE_EQ(bump_phi(1.0), 0.5);
  PeriodicGrid g(64, 64, 2.0 * kPi, 2.0);
  const auto phi = bump_phi_R(g, 1.0, 0.2, 10, 0.5);
  EXPECT_DOUBLE_EQ(phi[10], 0.2);
  EXPECT_DOUBLE_EQ(phi[11], phi[9]);

  const GraphInterface base(g, flat_profile(g, 1.0), 0.1);
  const auto lap = EllipticOperatorSpec::laplace();
  // constant lift only: I does not increase
  for (double v : bump_response(base, 1.0, lap, 0.1, 0, 0.0)) EXPECT_LE(v, 1e-9);
  // response at the center decreases as the bump widens
  const double P = g.period;
  double prev = std::numeric_limits<double>::infinity();
  for (double R : {P / 8, P / 4, P / 2}) {
    const double r = bump_response(base, R, lap, 0.0, 0, 0.05)[0];
    EXPECT_GE(r, -1e-9);
    EXPECT_LT(r, prev);
    prev = r;
  }
  const double r4 = bump_response(base, P / 4, lap, 0.0, 0, 0.05)[0];
  double mmax = 0.0;
  for (int k = 1; k <= g.n_x / 2; ++k) mmax = std::max(mmax, std::abs(dispersion_multiplier(1.0, k)));
  EXPECT_LT(r4, 0.05 * mmax);
  EXPECT_THROW(bump_response(base, 1.0, lap, 0.0, 0, 5.0), InvalidInput);
}

TEST(Kernel, FlatBaseWeightsAreSymmetricAndPositive) {
  PeriodicGrid g(32, 32, 2.0 * kPi, 2.0);
  const GraphInterface f(g, flat_profile(g, 1.0), 0.1);
  const auto k = linearize_I(f, EllipticOperatorSpec::laplace(), 5);
  EXPECT_NEAR(k.c0, -1.0, 0.02);
  EXPECT_GE(k.min_off_diagonal(), -1e-6);
  for (int h = 1; h < 16; ++h) EXPECT_NEAR(k.weights[(5 + h) % 32], k.weights[(5 - h + 32) % 32], 1e-7);
  for (int s = 0; s < 16; ++s) EXPECT_LE(k.tail_mass((s + 1) * g.dx()), k.tail_mass(s * g.dx()) + 1e-9);
  EXPECT_LT(k.tail_mass(g.period / 4), 0.1 * k.total_abs_mass());
  EXPECT_NEAR(k.fd_step, 1e-4, 1e-15);
}

TEST(Kernel, LinearizationPredictsSmallPerturbations) {
  PeriodicGrid g(32, 32, 2.0 * kPi, 2.0);
  SeededRng rng(17);
  const GraphInterface f(g, random_smooth_profile(g, rng, 1.0, 0.2), 0.1);
  const auto lap = EllipticOperatorSpec::laplace();
  FluxOptions fo;
  fo.order = 1;
  fo.tol = 1e-13;
  const int x0 = 7;
  const auto k = linearize_I(f, lap, x0, {0.0, 1, 1e-13});
  EXPECT_LE(k.c0, 1e-9);
  const double base = op_I(f, lap, fo).i_plus[x0];
  for (int t = 0; t < 5; ++t) {
    const auto phi = random_smooth_profile(g, rng, 0.0, 1.0);
    for (double eps : {1e-3, 5e-4}) {
      std::vector<double> v(f.samples());
      double predicted = 0.0;
      for (int j = 0; j < g.n_x; ++j) {
        v[j] += eps * phi[j];
        predicted += k.weights[j] * eps * phi[j];
      }
      const double actual = op_I(f.with_values(v), lap, fo).i_plus[x0] - base;
      EXPECT_NEAR(actual, predicted, 50.0 * eps * eps + 1e-8);
    }
  }
}

TEST(Kernel, HalvingTheStepBarelyMovesSignificantWeights) {
  PeriodicGrid g(32, 32, 2.0 * kPi, 2.0);
  const GraphInterface f(g, sine_profile(g, 1.0, 0.2), 0.1);
  const auto a = linearize_I(f, EllipticOperatorSpec::laplace(), 3);
  const auto b = linearize_I(f, EllipticOperatorSpec::laplace(), 3, {a.fd_step / 2, 1, 1e-13});
  double scale = 0.0;
  for (double w : a.weights) scale = std::max(scale, std::abs(w));
  for (int j = 0; j < g.n_x; ++j)
    if (std::abs(a.weights[j]) > 1e-3 * scale) EXPECT_NEAR(b.weights[j], a.weights[j], 0.05 * std::abs(a.weights[j]));
}

TEST(Kernel, StepShrinksOnceNearTheBand) {
  PeriodicGrid g(16, 256, 2.0 * kPi, 2.0);
  const GraphInterface edge(g, flat_profile(g, 1.9 - 1e-4), 0.1);
  EXPECT_THROW(linearize_I(edge, EllipticOperatorSpec::laplace(), 0, {1e-3, 1, 1e-10}), InvalidInput);
  const GraphInterface near(g, flat_profile(g, 1.9 - 6e-4), 0.1);
  const auto k = linearize_I(near, EllipticOperatorSpec::laplace(), 0, {1e-3, 1, 1e-12});
  EXPECT_DOUBLE_EQ(k.fd_step, 5e-4);
}

TEST(Report, PassFollowsTolerance) {
  PropertyReport r{.name = "x", .tolerance = 1e-6};
  EXPECT_FALSE(r.finish().pass);  // no trials
  r.trials = 1;
  r.record(-1.0);
  EXPECT_TRUE(r.finish().pass);
  r.record(2e-6);
  EXPECT_FALSE(r.finish().pass);
}

TEST(Suites, AllPassOnSmallGrids) {
  auto o = small_suite();
  EXPECT_TRUE(check_gcp(o).pass);
  EXPECT_TRUE(check_bulk_monotone(o).pass);
  auto t = o;
  t.tol = 1e-10;
  t.flux.tol = 1e-13;
  EXPECT_TRUE(check_translation(t).pass);
  EXPECT_TRUE(check_constant_shift(o).pass);
  EXPECT_TRUE(check_far_field_decay(o).pass);
  auto r = o;
  r.tol = 1e-8;
  EXPECT_TRUE(check_reflection(r).pass);
  EXPECT_TRUE(check_pucci_ordering(o).pass);
}

TEST(Suites, TwoPhaseHInheritsComparison) {
  auto o = small_suite();
  o.model = PhaseModel::two_phase;
  o.grid = PeriodicGrid(48, 48, 2.0 * kPi, 2.5);
  o.law = VelocityLaw::squares_difference();
  const auto r = check_gcp(o);
  EXPECT_TRUE(r.pass) << r.max_violation;
}

TEST(Suites, EvolutionSuitesPassOnSmallGrids) {
  auto o = small_suite(32);
  o.grid = PeriodicGrid(32, 32, 2.0 * kPi, 3.0);
  o.trials = 2;
  EvolutionConfig cfg;
  cfg.T = 0.2;
  EXPECT_TRUE(check_evolution_comparison(o, cfg).pass);
  cfg.frame_stride = 1;
  EXPECT_TRUE(check_modulus(GraphInterface(o.grid, sine_profile(o.grid, 1.0, 0.3), 0.1), cfg, 1e-6).pass);
}

TEST(Suites, ShiftSuiteCatchesABrokenOperator) {
  // sanity check of the harness itself: a negative shift must register as a violation
  auto o = small_suite(32);
  o.trials = 1;
  const auto r = check_constant_shift(o, {-0.05});
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_violation, 1e-3);
}
