#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "thetaskew/fixtures.hpp"
#include "thetaskew/twopath.hpp"

namespace tsk_test {

inline constexpr double kPi = std::numbers::pi;

// Derived constants frozen by `thetaskew oracle regen`.
inline const thetaskew::fixtures::FixtureSet& fixtures() {
  static const auto set = thetaskew::fixtures::load(THETASKEW_FIXTURES);
  return set;
}
inline double fixture(const char* name) { return fixtures().value(name); }

// Constant amplitudes, S1 = re_kappa q x, S2 = 0.
inline thetaskew::twopath::TwoPacketModel linear_model(double r1, double r2, std::size_t n,
                                                       double dx, double x0, double q,
                                                       double re_kappa = 1.0) {
  std::vector<double> a(n, r1), b(n, r2), s1(n), s2(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) s1[k] = re_kappa * q * (x0 + static_cast<double>(k) * dx);
  return {a, b, s1, s2, x0, dx};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace tsk_test
