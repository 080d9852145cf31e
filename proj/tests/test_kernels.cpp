#include <random>
#include <vector>

#include "doctest.h"
#include "thetaskew/kernels.hpp"

using namespace thetaskew::kernels;

namespace {

constexpr std::size_t kN = 3 * kParallelThreshold + 17;

std::vector<double> reals(std::uint64_t seed, std::size_t n = kN) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(eng);
  return v;
}

std::vector<cplx> complexes(std::uint64_t seed, std::size_t n = kN) {
  const auto re = reals(seed, n), im = reals(seed + 1, n);
  std::vector<cplx> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = {re[k], im[k]};
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("deformed intensity: serial and parallel bit-identical") {
    const auto psi = complexes(1);
    const auto phase = reals(3);
    std::vector<double> a(kN), b(kN);
    deformed_intensity_serial(psi, phase, 0.07, a);
    deformed_intensity_parallel(psi, phase, 0.07, b);
    CHECK(a == b);
    CHECK(a[5] == doctest::Approx(std::norm(psi[5]) * std::exp(-0.14 * phase[5])));
  }

  TEST_CASE("two-packet field: serial and parallel bit-identical") {
    const auto r1 = reals(5), r2 = reals(6), s1 = reals(7), s2 = reals(8);
    const cplx kappa(1.0, 0.05);
    std::vector<cplx> a(kN), b(kN);
    two_packet_field_serial(r1, r2, s1, s2, kappa, a);
    two_packet_field_parallel(r1, r2, s1, s2, kappa, b);
    CHECK(a == b);
    const cplx i(0.0, 1.0);
    const cplx ref = r1[9] * std::exp(i * s1[9] / kappa) + r2[9] * std::exp(i * s2[9] / kappa);
    CHECK(std::abs(a[9] - ref) < 1e-13 * std::abs(ref) + 1e-15);
  }

  TEST_CASE("convolution: serial and parallel bit-identical, zero padded edges") {
    const auto in = reals(9);
    const std::vector<double> kernel{0.25, 0.5, 0.25};
    std::vector<double> a(kN), b(kN);
    convolve_serial(in, kernel, a);
    convolve_parallel(in, kernel, b);
    CHECK(a == b);
    CHECK(a[0] == doctest::Approx(0.5 * in[0] + 0.25 * in[1]));
    CHECK(a[100] == doctest::Approx(0.25 * in[99] + 0.5 * in[100] + 0.25 * in[101]));
  }

  TEST_CASE("multiply and accumulate: serial and parallel bit-identical") {
    auto a = complexes(11), b = a;
    const auto m = complexes(13);
    multiply_inplace_serial(a, m);
    multiply_inplace_parallel(b, m);
    CHECK(a == b);

    auto x = reals(15), y = x;
    const auto inc = reals(17);
    accumulate_serial(x, inc);
    accumulate_parallel(y, inc);
    CHECK(x == y);
  }

  TEST_CASE("dispatch matches the serial reference below and above the threshold") {
    for (std::size_t n : {std::size_t{64}, kN}) {
      const auto psi = complexes(19, n);
      const auto phase = reals(21, n);
      std::vector<double> a(n), b(n);
      deformed_intensity_serial(psi, phase, -0.3, a);
      deformed_intensity(psi, phase, -0.3, b);
      CHECK(a == b);
    }
  }

  TEST_CASE("thread count can be set") {
    const int before = max_threads();
    set_threads(1);
    CHECK(max_threads() == 1);
    set_threads(before);
    CHECK(max_threads() == before);
  }
}
