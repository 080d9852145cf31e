#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "thetaskew/errors.hpp"
#include "thetaskew/oracle.hpp"
#include "thetaskew/twopath.hpp"

using namespace thetaskew;
using namespace thetaskew::twopath;
using tsk_test::kPi;

namespace {

TwoPacketModel constant(double r1, double r2, double s1, double s2, std::size_t n = 16) {
  return {std::vector<double>(n, r1), std::vector<double>(n, r2), std::vector<double>(n, s1),
          std::vector<double>(n, s2), 0.0, 1.0};
}

// Delta = 2 n pi + sigma for sigma in [-s, s].
TwoPacketModel window(double r1, double r2, int n, double s, std::size_t nodes) {
  return tsk_test::linear_model(r1, r2, nodes, 2.0 * s / static_cast<double>(nodes - 1), -s, 1.0)
      .with_action_offsets(2.0 * n * kPi, 0.0);
}

}  // namespace

TEST_SUITE("twopath") {
  TEST_CASE("model validation") {
    CHECK_THROWS_AS(TwoPacketModel(std::vector<double>(8, 1.0), std::vector<double>(7, 1.0),
                                   std::vector<double>(8, 0.0), std::vector<double>(8, 0.0), 0.0, 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(TwoPacketModel(std::vector<double>(8, -1.0), std::vector<double>(8, 1.0),
                                   std::vector<double>(8, 0.0), std::vector<double>(8, 0.0), 0.0, 1.0),
                    InvalidArgument);
  }

  TEST_CASE("build_field examples") {
    const DeformationParams p0(1.0, 0.0);
    const auto single = build_field(constant(1.3, 0.0, 0.7, 0.0), p0);
    for (const auto& z : single.samples()) CHECK(std::abs(z) == doctest::Approx(1.3));
    const auto bright = build_field(constant(1.0, 1.0, 0.0, 0.0), DeformationParams(1.0, 0.2));
    for (const auto& z : bright.samples()) CHECK(z == cplx(2.0, 0.0));
    const auto dark = build_field(constant(1.0, 1.0, 2.0 * kPi, 0.0), DeformationParams(2.0, 0.0));
    for (const auto& z : dark.samples()) CHECK(std::abs(z) < 1e-15);
  }

  TEST_CASE("baseline examples") {
    const DeformationParams p(1.0, 0.0);
    CHECK(baseline_p0(constant(1.0, 1.0, 0.0, 0.0), p)[0] == 4.0);
    CHECK(baseline_p0(constant(1.0, 1.0, kPi, 0.0), p)[0] == doctest::Approx(0.0));
    CHECK(baseline_p0(constant(1.2, 0.8, 0.3, 0.0), p)[0] ==
          doctest::Approx(tsk_test::fixture("p0_example")).epsilon(1e-14));
  }

  TEST_CASE("closed form examples") {
    const DeformationParams p(1.0, 0.05);
    for (double v : delta_p_closed_form(constant(1.2, 0.8, 0.0, 0.0), p).values) CHECK(v == 0.0);
    const auto bal = tsk_test::linear_model(1.0, 1.0, 64, 0.02, -0.6, 1.0);
    for (double v : delta_p_closed_form(bal, p).values) CHECK(std::abs(v) < 1e-15);
    CHECK(delta_p_closed_form(constant(1.2, 0.8, 0.3, 0.0), p).values[0] ==
          doctest::Approx(tsk_test::fixture("closed_form_example")).epsilon(1e-13));
  }

  TEST_CASE("closed form masks tan poles") {
    const auto cf = delta_p_closed_form(constant(1.2, 0.8, kPi, 0.0), DeformationParams(1.0, 0.05));
    CHECK(cf.masked(0));
  }

  TEST_CASE("first-order pieces sum to the closed form") {
    CHECK(delta_p_first_order(constant(1.2, 0.8, 0.0, 0.0), DeformationParams(1.0, 0.1)).total.values[3] == 0.0);
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> u(0.2, 2.0), s(-1.4, 1.4);
    for (int trial = 0; trial < 20; ++trial) {
      const double r1 = u(eng), r2 = u(eng);
      std::vector<double> s1(32), s2(32);
      for (std::size_t k = 0; k < 32; ++k) {
        s2[k] = s(eng);
        s1[k] = s2[k] + 2.0 * s(eng);  // Delta within (-pi, pi)
      }
      const TwoPacketModel m(std::vector<double>(32, r1), std::vector<double>(32, r2), s1, s2, 0.0, 1.0);
      const DeformationParams p(1.0, 0.03);
      const auto fo = delta_p_first_order(m, p);
      const auto cf = delta_p_closed_form(m, p);
      for (std::size_t k = 0; k < 32; ++k) {
        if (cf.masked(k) || fo.total.masked(k)) continue;
        CHECK(std::abs(fo.total.values[k] - cf.values[k]) < 1e-12);
        CHECK(fo.total.values[k] == doctest::Approx(fo.phase_part.values[k] + fo.linear_part.values[k]));
      }
    }
  }

  TEST_CASE("first order vanishes for equal amplitudes and opposite actions") {
    std::vector<double> s1(16), s2(16);
    for (std::size_t k = 0; k < 16; ++k) {
      s1[k] = 0.1 * k - 0.7;
      s2[k] = -s1[k];
    }
    const TwoPacketModel m(std::vector<double>(16, 0.9), std::vector<double>(16, 0.9), s1, s2, 0.0, 1.0);
    for (double v : delta_p_first_order(m, DeformationParams(1.0, 0.05)).total.values) CHECK(std::abs(v) < 1e-15);
  }

  TEST_CASE("cubic coefficient") {
    CHECK(cubic_coefficient(1.5, 1.5, 0.1) == 0.0);
    CHECK(cubic_coefficient(2.0, 1.0, 0.1) == doctest::Approx(tsk_test::fixture("cubic_coeff_2_1_0.1")).epsilon(1e-12));
    CHECK(cubic_coefficient(1.2, 0.8, 0.05) == doctest::Approx(tsk_test::fixture("cubic_coeff_1.2_0.8_0.05")).epsilon(1e-12));
    CHECK(cubic_coefficient(1.0, 2.0, 0.1) == -cubic_coefficient(2.0, 1.0, 0.1));
    CHECK_THROWS_AS(cubic_coefficient(0.0, 0.0, 0.1), Degenerate);
    CHECK(fringe_offset(2, 1.2, 0.8, 0.05) == doctest::Approx(4.0 * kPi * 0.05 * 0.8));
  }

  TEST_CASE("cubic fit of the closed form over |sigma| <= 0.3 reproduces C3") {
    for (int n : {-1, 0, 2}) {
      const auto m = window(1.2, 0.8, n, 0.3, 601);
      const auto cf = delta_p_closed_form(m, DeformationParams(1.0, 0.05));
      // The odd part removes the offset; fit it with c1 s + c3 s^3 + c5 s^5.
      const std::size_t mid = 300;
      double a[3][3] = {}, b[3] = {};
      for (std::size_t k = 1; k <= mid; ++k) {
        const double s = m.x(mid + k);
        const double o = 0.5 * (cf.values[mid + k] - cf.values[mid - k]);
        const double basis[3] = {s, s * s * s, std::pow(s, 5)};
        for (int i = 0; i < 3; ++i) {
          b[i] += basis[i] * o;
          for (int j = 0; j < 3; ++j) a[i][j] += basis[i] * basis[j];
        }
      }
      // Gaussian elimination.
      for (int i = 0; i < 3; ++i)
        for (int r = i + 1; r < 3; ++r) {
          const double f = a[r][i] / a[i][i];
          for (int c = i; c < 3; ++c) a[r][c] -= f * a[i][c];
          b[r] -= f * b[i];
        }
      double c[3];
      for (int i = 2; i >= 0; --i) {
        c[i] = b[i];
        for (int j = i + 1; j < 3; ++j) c[i] -= a[i][j] * c[j];
        c[i] /= a[i][i];
      }
      CHECK(std::abs(c[0]) < 1e-6 * std::abs(c[1]));
      CHECK(c[1] == doctest::Approx(cubic_coefficient(1.2, 0.8, 0.05)).epsilon(0.01));
      CHECK(cf.values[mid] == doctest::Approx(fringe_offset(n, 1.2, 0.8, 0.05)).epsilon(1e-12).scale(1e-12));
    }
  }

  TEST_CASE("closed form tracks the exact intensity to O(theta^2)") {
    auto err = [](double th) {
      double worst = 0.0;
      for (int n = -1; n <= 1; ++n) {
        const auto m = window(1.2, 0.8, n, 0.5 * kPi - 1e-3, 201);
        const auto cf = delta_p_closed_form(m, DeformationParams(1.0, th));
        for (std::size_t k = 0; k < m.size(); ++k) {
          if (cf.masked(k)) continue;
          const double exact = static_cast<double>(oracle::exact_intensity(1.2L, 0.8L, th, n, m.x(k)) -
                                                   oracle::exact_intensity(1.2L, 0.8L, 0.0L, n, m.x(k)));
          worst = std::max(worst, std::abs(exact - cf.values[k]));
        }
      }
      return worst;
    };
    const double ratio = err(0.02) / err(0.01);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }

  TEST_CASE("small-imbalance expansion") {
    const DeformationParams p(1.0, 0.01);
    for (double v : delta_p_small_imbalance(window(1.0, 1.0, 0, 1.5, 101), p).field.values) CHECK(v == 0.0);
    auto rel = [&](double eps) {
      const auto m = window(1.0 + eps, 1.0 - eps, 0, 0.5 * kPi, 201);
      const auto si = delta_p_small_imbalance(m, p).field;
      const auto cf = delta_p_closed_form(m, p);
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) {
        num = std::max(num, std::abs(si.values[k] - cf.values[k]));
        den = std::max(den, std::abs(cf.values[k]));
      }
      return num / den;
    };
    CHECK(rel(0.05) / rel(0.025) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(delta_p_small_imbalance(window(1.3, 0.7, 0, 1.0, 11), p).large_imbalance);
    CHECK_FALSE(delta_p_small_imbalance(window(1.05, 0.95, 0, 1.0, 11), p).large_imbalance);
  }

  TEST_CASE("small-imbalance cubic limit matches the cubic coefficient") {
    const double eps = 0.01, th = 0.02;
    const auto m = window(1.0 + eps, 1.0 - eps, 0, 4e-2, 9);
    const auto v = delta_p_small_imbalance(m, DeformationParams(1.0, th)).field.values[8];
    const double limit = v / std::pow(4e-2, 3);
    CHECK(limit == doctest::Approx(cubic_coefficient(1.0 + eps, 1.0 - eps, th)).epsilon(1e-3));  // R1 R2 = R0^2 - eps^2
  }

  TEST_CASE("fringe locations for linear Delta") {
    const double q = 2.0 * kPi / 1.3;
    const auto m = tsk_test::linear_model(1.2, 0.8, 512, 0.01, -2.56, q);
    const auto fr = fringe_locations(m, DeformationParams(1.0, 0.0), -2.5, 2.5);
    REQUIRE(fr.size() == 3);
    for (const auto& f : fr) CHECK(std::abs(f.x_center - 2.0 * kPi * f.order / q) < 1e-10 * m.dx());
    const auto shifted = fringe_locations(m.with_action_offsets(2.0 * kPi, 0.0), DeformationParams(1.0, 0.0), -2.5, 2.5);
    REQUIRE(shifted.size() == fr.size());
    for (std::size_t i = 0; i < fr.size(); ++i) {
      CHECK(shifted[i].order == fr[i].order + 1);
      CHECK(shifted[i].x_center == doctest::Approx(fr[i].x_center).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fringe_locations(m, DeformationParams(1.0, 0.0), 0.1, 0.2), NoFringe);
  }

  TEST_CASE("fringe locations for quadratic Delta match the refined argmax of P0") {
    const std::size_t n = 256;
    const double dx = 0.02, x0 = 0.1;
    std::vector<double> s1(n);
    for (std::size_t k = 0; k < n; ++k) s1[k] = 3.0 * std::pow(x0 + k * dx, 2);
    const TwoPacketModel m(std::vector<double>(n, 1.2), std::vector<double>(n, 0.8), s1,
                           std::vector<double>(n, 0.0), x0, dx);
    const auto fr = fringe_locations(m, DeformationParams(1.0, 0.0), 0.5, 5.0);
    REQUIRE(!fr.empty());
    for (const auto& f : fr) {
      // Brute force on a 100x refined grid around the center.
      double best = f.x_center, val = -1.0;
      for (int j = -100; j <= 100; ++j) {
        const double x = f.x_center + j * dx / 100.0;
        const double p = 1.2 * 1.2 + 0.8 * 0.8 + 2 * 1.2 * 0.8 * std::cos(3.0 * x * x);
        if (p > val) {
          val = p;
          best = x;
        }
      }
      CHECK(std::abs(best - f.x_center) <= 0.5 * dx / 100.0 + 1e-6 * dx);
      CHECK(f.x_lo < f.x_center);
      CHECK(f.x_hi > f.x_center);
    }
  }

  TEST_CASE("model anchor phase follows the global action") {
    const auto m = tsk_test::linear_model(1.2, 0.8, 64, 0.05, -1.6, 2.0);
    const DeformationParams p(1.0, 0.04);
    const double a = model_anchor_phase(m, p, 10);
    const double b = model_anchor_phase(m.with_action_offsets(0.3, 0.3), p, 10);
    CHECK(b - a == doctest::Approx(0.3 / (1.0 + 0.04 * 0.04)));
  }
}
