#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "thetaskew/core.hpp"
#include "thetaskew/errors.hpp"
#include "thetaskew/oracle.hpp"

using namespace thetaskew;
using tsk_test::kPi;

namespace {

WaveField phase_ramp(double step, std::size_t n = 16) {
  std::vector<cplx> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = std::polar(1.0, step * static_cast<double>(k));
  return {v, 0.0, 1.0};
}

WaveField random_smooth(std::mt19937_64& eng, std::size_t n = 128) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a0 = u(eng), b0 = u(eng), a1 = u(eng), b1 = u(eng);
  std::vector<cplx> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = static_cast<double>(k) / 16.0;
    v[k] = (1.5 + 0.5 * std::sin(a0 * x + b0)) * std::exp(cplx(0.0, 2.0 * std::sin(a1 * x) + 3.0 * b1 * x));
  }
  return {v, 0.0, 1.0 / 16.0};
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("deformation parameters validate theta and re_kappa") {
    CHECK_THROWS_AS(DeformationParams(1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(DeformationParams(1.0, -1.5), InvalidArgument);
    CHECK_THROWS_AS(DeformationParams(0.0, 0.1), InvalidArgument);
    const DeformationParams p(2.0, 0.25);
    CHECK(p.kappa() == cplx(2.0, 0.5));
    CHECK(p.im_kappa() == 0.5);
  }

  TEST_CASE("wave field rejects short, non-finite or badly spaced samples") {
    CHECK_THROWS_AS(WaveField(std::vector<cplx>(7, 1.0), 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(WaveField(std::vector<cplx>(8, 1.0), 0.0, 0.0), InvalidArgument);
    std::vector<cplx> v(8, 1.0);
    v[3] = cplx(NAN, 0.0);
    CHECK_THROWS_AS(WaveField(v, 0.0, 1.0), InvalidArgument);
  }

  TEST_CASE("unwrap: constant, small steps, wrapped steps") {
    for (double ph : unwrap_phase(WaveField(std::vector<cplx>(16, 1.0), 0.0, 1.0), 0)) CHECK(ph == 0.0);
    const auto slow = unwrap_phase(phase_ramp(0.1), 0);
    for (std::size_t k = 0; k < slow.size(); ++k) CHECK(slow[k] == doctest::Approx(0.1 * k).epsilon(1e-13));

    const auto fast = unwrap_phase(phase_ramp(3.0), 0);
    const double slope = tsk_test::fixture("unwrap_step3_slope");
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(std::abs(fast[k] - slope * k) < 1e-12);
    const auto wrapped = unwrap_phase(phase_ramp(4.0), 0);
    const double slope4 = tsk_test::fixture("unwrap_step4_slope");
    for (std::size_t k = 0; k < wrapped.size(); ++k) CHECK(std::abs(wrapped[k] - slope4 * k) < 1e-12);
  }

  TEST_CASE("unwrap agrees with chord tracking on a refined grid") {
    const auto f = phase_ramp(3.0);
    std::vector<std::complex<double>> s(f.samples().begin(), f.samples().end());
    const auto ref = oracle::chord_unwrap(s, 0, 10);
    const auto got = unwrap_phase(f, 0);
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - ref[k]) < 1e-12);
  }

  TEST_CASE("unwrap throws at a zero node, masked variant flags it") {
    std::vector<cplx> v(16, 1.0);
    v[5] = 0.0;
    const WaveField f(v, 0.0, 1.0);
    try {
      unwrap_phase(f, 0);
      FAIL("expected ZeroAmplitude");
    } catch (const ZeroAmplitude& e) {
      CHECK(e.index() == 5);
    }
    const auto m = unwrap_phase_masked(f, 0);
    CHECK(m.mask[5] != 0);
    CHECK(m.mask[4] == 0);
    CHECK_THROWS_AS(unwrap_phase_masked(f, 5), ZeroAmplitude);
  }

  TEST_CASE("deformed probability examples") {
    const WaveField one(std::vector<cplx>(16, 1.0), 0.0, 1.0);
    const auto flat = deformed_probability(one, DeformationParams(1.0, 0.3), 0);
    for (double v : flat.values()) CHECK(v == 1.0);

    const WaveField i_field(std::vector<cplx>(16, cplx(0.0, 1.0)), 0.0, 1.0);
    const auto p = deformed_probability(i_field, DeformationParams(1.0, 0.1), 3);
    for (double v : p.values()) CHECK(v == doctest::Approx(tsk_test::fixture("deformed_psi_i_theta0.1")).epsilon(1e-14));

    std::mt19937_64 eng(3);
    const auto f = random_smooth(eng);
    const auto p0 = deformed_probability(f, DeformationParams(1.0, 0.0), 40);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(p0[k] == std::norm(f[k]));
  }

  TEST_CASE("zero nodes get |psi|^2 and a mask flag") {
    std::vector<cplx> v(16, cplx(0.0, 1.0));
    v[9] = 0.0;
    const auto p = deformed_probability(WaveField(v, 0.0, 1.0), DeformationParams(1.0, 0.2), 0);
    CHECK(p.masked(9));
    CHECK(p[9] == 0.0);
    CHECK_FALSE(p.masked(10));
  }

  TEST_CASE("anchor covariance: a 2 pi branch shift scales P by exp(-4 pi theta)") {
    std::mt19937_64 eng(5);
    const auto f = random_smooth(eng);
    const DeformationParams p(1.0, 0.07);
    UnwrapOptions shifted;
    shifted.anchor_phase = std::arg(f[20]) + 2.0 * kPi;
    const auto a = deformed_probability(f, p, 20);
    const auto b = deformed_probability(f, p, 20, shifted);
    for (std::size_t k = 0; k < f.size(); ++k)
      CHECK(b[k] == doctest::Approx(a[k] * std::exp(-4.0 * kPi * 0.07)).epsilon(1e-12));
  }

  TEST_CASE("explicit anchor phase must be congruent to arg psi") {
    UnwrapOptions bad;
    bad.anchor_phase = 1.0;
    CHECK_THROWS_AS(unwrap_phase(phase_ramp(0.1), 0, bad), InvalidArgument);
  }

  TEST_CASE("decompose examples") {
    const auto one = decompose(WaveField(std::vector<cplx>(16, 1.0), 0.0, 1.0), DeformationParams(1.0, 0.2), 0);
    for (std::size_t k = 0; k < 16; ++k) {
      CHECK(one.amplitude[k] == 1.0);
      CHECK(one.action[k] == 0.0);
    }
    // psi = exp((theta + i) q x): R = 1, S = (1 + theta^2) q x.
    const double th = 0.05, q = 0.3, dx = 0.25;
    std::vector<cplx> v(32);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::exp(cplx(th, 1.0) * (q * k * dx));
    const WaveField f(v, 0.0, dx);
    const DeformationParams p(1.0, th);
    const auto pa = decompose(f, p, 0);
    const double slope = tsk_test::fixture("decompose_action_slope");
    for (std::size_t k = 0; k < v.size(); ++k) {
      CHECK(pa.amplitude[k] == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(pa.action[k] - slope * k * dx) < 1e-12);
    }
    const auto back = recompose(pa, p);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(std::abs(back[k] - v[k]) < 1e-12 * std::abs(v[k]));
  }

  TEST_CASE("theta = 0 decomposition is the polar form") {
    std::mt19937_64 eng(9);
    const auto f = random_smooth(eng);
    const auto pa = decompose(f, DeformationParams(2.0, 0.0), 0);
    const auto phi = unwrap_phase(f, 0);
    for (std::size_t k = 0; k < f.size(); ++k) {
      CHECK(pa.amplitude[k] == doctest::Approx(std::abs(f[k])).epsilon(1e-14));
      CHECK(pa.action[k] == doctest::Approx(2.0 * phi[k]).epsilon(1e-14));
    }
  }

  TEST_CASE("recompose examples") {
    PhaseAmplitudeField pa{std::vector<double>(8, 1.0), std::vector<double>(8, 0.0), {}, 0.0, 1.0};
    const auto unit = recompose(pa, DeformationParams(1.0, 0.3));
    for (const auto& z : unit.samples()) CHECK(z == cplx(1.0, 0.0));
    PhaseAmplitudeField neg{std::vector<double>(8, 2.0), std::vector<double>(8, kPi), {}, 0.0, 1.0};
    const auto minus_two = recompose(neg, DeformationParams(1.0, 0.0));
    for (const auto& z : minus_two.samples()) {
      CHECK(z.real() == doctest::Approx(-2.0));
      CHECK(std::abs(z.imag()) < 1e-15);
    }
  }

  TEST_CASE("round trip and R^2 = P on 100 random fields") {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    double rt = 0.0, r2 = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto f = random_smooth(eng);
      const DeformationParams p(1.0, u(eng));
      const auto pa = decompose(f, p, 64);
      const auto back = recompose(pa, p);
      const auto prob = deformed_probability(f, p, 64);
      for (std::size_t k = 0; k < f.size(); ++k) {
        rt = std::max(rt, std::abs(back[k] - f[k]) / std::abs(f[k]));
        r2 = std::max(r2, std::abs(pa.amplitude[k] * pa.amplitude[k] - prob[k]) / prob[k]);
      }
    }
    CHECK(rt < 1e-12);
    CHECK(r2 < 1e-12);
  }

  TEST_CASE("positivity and first-order continuity in theta") {
    std::mt19937_64 eng(13);
    const auto f = random_smooth(eng);
    double prev = 0.0;
    const auto p0 = deformed_probability(f, DeformationParams(1.0, 0.0), 0);
    for (double th : {1e-3, 5e-4, 2.5e-4}) {
      const auto p = deformed_probability(f, DeformationParams(1.0, th), 0);
      double d = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) {
        CHECK(p[k] >= 0.0);
        d = std::max(d, std::abs(p[k] - p0[k]));
      }
      if (prev > 0.0) CHECK(prev / d == doctest::Approx(2.0).epsilon(0.05));
      prev = d;
    }
    for (double th : {-0.99, 0.99}) {
      const auto p = deformed_probability(f, DeformationParams(1.0, th), 0);
      for (double v : p.values()) CHECK(v >= 0.0);
    }
  }

  TEST_CASE("wrap_to_pi range") {
    CHECK(wrap_to_pi(kPi) == doctest::Approx(kPi));
    CHECK(wrap_to_pi(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_to_pi(3.0 * kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  }
}
