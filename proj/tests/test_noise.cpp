#include <cmath>
#include <numeric>

#include "doctest.h"
#include "support.hpp"
#include "thetaskew/analysis.hpp"
#include "thetaskew/errors.hpp"
#include "thetaskew/noise.hpp"

using namespace thetaskew;
using namespace thetaskew::noise;
using tsk_test::kPi;

namespace {

// 1024 nodes, 64 per unit fringe spacing, centered on x = 0.
twopath::TwoPacketModel detector(double r1, double r2, double spacing = 1.0) {
  return tsk_test::linear_model(r1, r2, 1024, 1.0 / 64, -8.0, 2 * kPi / spacing);
}

double central_skewness(const ProbabilityField& p) {
  return analysis::analyze_windows(p, {{0, 0.0, 0.25}}, analysis::AnalysisOptions{})[0].skewness;
}

}  // namespace

TEST_SUITE("noise") {
  TEST_CASE("config validation") {
    NoiseConfig c;
    CHECK_NOTHROW(c.validate());
    c.psf_sigma = -0.1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = NoiseConfig{};
    c.shots = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }

  TEST_CASE("gaussian kernel") {
    CHECK(gaussian_kernel(0.0, 0.1) == std::vector<double>{1.0});
    const auto k = gaussian_kernel(0.1, 0.01);
    const std::size_t c = k.size() / 2;
    CHECK(k.size() % 2 == 1);
    CHECK(static_cast<double>(c) * 0.01 >= 0.6 - 1e-12);  // reaches 6 sigma
    CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(k[c] > k[c - 1]);
    CHECK(k[c - 1] == k[c + 1]);
  }

  TEST_CASE("no noise reproduces the exact pattern") {
    const auto m = detector(1.2, 0.8);
    const DeformationParams p(1.0, 0.05);
    NoiseConfig c;
    c.shots = 3;
    const auto a = ensemble_pattern(m, p, c, 512);
    const auto b = twopath::exact_probability(m, p, 512);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-14));
  }

  TEST_CASE("path jitter reduces visibility by exp(-(q sigma)^2 / 2), positions unchanged") {
    const double spacing = 1.6;
    const auto m = detector(1.0, 1.0, spacing);
    NoiseConfig c;
    c.path_jitter_sigma = 0.1;
    c.shots = 20000;
    c.seed = 42;
    const auto p = ensemble_pattern(m, DeformationParams(1.0, 0.0), c, 512);
    double hi = 0.0, lo = 1e300;
    for (std::size_t k = 256; k < 768; ++k) {
      hi = std::max(hi, p[k]);
      lo = std::min(lo, p[k]);
    }
    CHECK((hi - lo) / (hi + lo) == doctest::Approx(tsk_test::fixture("path_jitter_visibility")).epsilon(0.01));
    CHECK(std::abs(analysis::lsq_center(p, 0.0, 0.4) / spacing) < 0.01);
  }

  TEST_CASE("global phase jitter has no effect on the relative phase") {
    const auto m = detector(1.2, 0.8);
    NoiseConfig c;
    c.phase_jitter_sigma = 0.5;
    c.shots = 8;
    c.seed = 5;
    const auto a = ensemble_pattern(m, DeformationParams(1.0, 0.0), c, 512);
    const auto b = twopath::exact_probability(m, DeformationParams(1.0, 0.0), 512);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
  }

  TEST_CASE("PSF keeps a symmetric fringe symmetric") {
    const auto m = detector(1.2, 0.8);
    const auto p = apply_psf(twopath::exact_probability(m, DeformationParams(1.0, 0.0), 512), 0.1);
    CHECK(std::abs(central_skewness(p)) < 1e-10);
  }

  TEST_CASE("signal survives a PSF of a quarter fringe FWHM") {
    // The bright fringe FWHM is about half the spacing, so sigma = 0.125 spacings.
    const auto m = detector(1.2, 0.8);
    const auto clean = twopath::exact_probability(m, DeformationParams(1.0, 0.05), 512);
    const double s0 = central_skewness(clean);
    const double s1 = central_skewness(apply_psf(clean, 0.125));
    MESSAGE("skewness retained under PSF 0.125: " << s1 / s0);
    CHECK(s1 / s0 >= 0.5);
  }

  TEST_CASE("sample_shots: delta, uniform, closure, determinism") {
    std::vector<double> delta(100, 0.0);
    delta[37] = 1.0;
    const auto d = sample_shots(ProbabilityField(delta, 0.0, 1.0), 1000, 1);
    CHECK(d[37] == 1000);

    const ProbabilityField flat(std::vector<double>(100, 1.0), 0.0, 0.01);
    const auto c = sample_shots(flat, 1000000, 7);
    CHECK(std::accumulate(c.begin(), c.end(), std::uint64_t{0}) == 1000000);
    const double band = tsk_test::fixture("uniform_counts_5sigma");
    for (auto n : c) CHECK(std::abs(static_cast<double>(n) - 1e4) < band);
    CHECK(sample_shots(flat, 1000000, 7) == c);
    CHECK(sample_shots(flat, 1000000, 8) != c);

    CHECK_THROWS_AS(sample_shots(ProbabilityField(std::vector<double>(10, 0.0), 0.0, 1.0), 10, 1), EmptyDistribution);
  }

  TEST_CASE("histogram normalizes to a density") {
    const auto f = histogram_to_field({1, 3, 0, 4}, -1.0, 0.5);
    CHECK(f[1] == doctest::Approx(3.0 / (8 * 0.5)));
    CHECK(f.x0() == -1.0);
  }

  TEST_CASE("realizations are keyed by index, not by call order") {
    const auto m = detector(1.2, 0.8);
    const DeformationParams p(1.0, 0.02);
    NoiseConfig c;
    c.phase_jitter_sigma = 0.3;
    c.path_jitter_sigma = 0.1;
    c.psf_sigma = 0.1;
    c.events_per_shot = 100000;
    c.seed = 99;
    const auto a5 = realization(m, p, c, 512, 5);
    const auto a2 = realization(m, p, c, 512, 2);
    const auto b2 = realization(m, p, c, 512, 2);
    const auto b5 = realization(m, p, c, 512, 5);
    CHECK(std::equal(a5.values().begin(), a5.values().end(), b5.values().begin()));
    CHECK(std::equal(a2.values().begin(), a2.values().end(), b2.values().begin()));
    CHECK_FALSE(std::equal(a2.values().begin(), a2.values().end(), a5.values().begin()));
  }

  TEST_CASE("fringe wavenumber of a linear model") {
    CHECK(fringe_wavenumber(detector(1.2, 0.8, 0.5), DeformationParams(1.0, 0.0)) == doctest::Approx(4 * kPi));
  }
}
