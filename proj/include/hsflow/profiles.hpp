#pragma once

// Interface profiles used by runs and test suites, and a small seeded RNG
// whose output does not depend on the standard library implementation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "hsflow/geometry.hpp"

namespace hsflow {

/// splitmix64; deterministic across platforms.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : s_(seed) {}
  std::uint64_t next() noexcept {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// uniform in [0, 1)
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) noexcept { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) noexcept {  // inclusive range
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

private:
  std::uint64_t s_;
};

inline std::vector<double> flat_profile(const PeriodicGrid& g, double c) { return std::vector<double>(g.n_x, c); }

/// mean + amp * sin(2 pi mode x / P)
inline std::vector<double> sine_profile(const PeriodicGrid& g, double mean, double amp, int mode = 1) {
  std::vector<double> v(g.n_x);
  const double w = 2.0 * std::numbers::pi * mode / g.period;
  for (int i = 0; i < g.n_x; ++i) v[i] = mean + amp * std::sin(w * g.x(i));
  return v;
}

/// mean + amp * cos(2 pi mode x / P)
inline std::vector<double> cosine_profile(const PeriodicGrid& g, double mean, double amp, int mode = 1) {
  std::vector<double> v(g.n_x);
  const double w = 2.0 * std::numbers::pi * mode / g.period;
  for (int i = 0; i < g.n_x; ++i) v[i] = mean + amp * std::cos(w * g.x(i));
  return v;
}

/// Random trigonometric polynomial with modes 1..max_mode, coefficients decaying
/// like 1/k^2, rescaled so that max |f - mean| = amp.
inline std::vector<double> random_smooth_profile(const PeriodicGrid& g, SeededRng& rng, double mean, double amp,
                                                 int max_mode = 4) {
  std::vector<double> v(g.n_x, 0.0);
  const double w = 2.0 * std::numbers::pi / g.period;
  for (int k = 1; k <= max_mode; ++k) {
    const double a = rng.uniform(-1.0, 1.0) / (k * k);
    const double b = rng.uniform(-1.0, 1.0) / (k * k);
    for (int i = 0; i < g.n_x; ++i) v[i] += a * std::cos(k * w * g.x(i)) + b * std::sin(k * w * g.x(i));
  }
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  for (double& x : v) x = mean + (m > 0.0 ? amp * x / m : 0.0);
  return v;
}

/// Signed minimal-image offset x - x0 on a circle of length P.
inline double periodic_offset(double x, double x0, double P) {
  double d = std::fmod(x - x0, P);
  if (d > 0.5 * P) d -= P;
  if (d < -0.5 * P) d += P;
  return d;
}

/// Non-negative smooth bump vanishing exactly at column i0 (to second order):
/// amp * (1 - cos(2 pi (x - x_i0) / P)) * (1 + 0.5 q(x)) with q a random smooth
/// function in [-1, 1]. Adding it to f gives g >= f touching at i0.
inline std::vector<double> touching_bump(const PeriodicGrid& g, SeededRng& rng, int i0, double amp) {
  const auto q = random_smooth_profile(g, rng, 0.0, 1.0, 3);
  std::vector<double> b(g.n_x);
  const double w = 2.0 * std::numbers::pi / g.period;
  for (int i = 0; i < g.n_x; ++i) b[i] = amp * 0.5 * (1.0 - std::cos(w * (g.x(i) - g.x(i0)))) * (1.0 + 0.5 * q[i]);
  b[i0] = 0.0;
  return b;
}

}  // namespace hsflow
