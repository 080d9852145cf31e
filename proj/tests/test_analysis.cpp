#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "thetaskew/analysis.hpp"
#include "thetaskew/errors.hpp"
#include "thetaskew/twopath.hpp"

using namespace thetaskew;
using namespace thetaskew::analysis;
using tsk_test::kPi;

namespace {

template <class F>
ProbabilityField sample(F f, double x0, double dx, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = f(x0 + static_cast<double>(k) * dx);
  return {v, x0, dx};
}

FringeRecord record(int order, double s, double r, double err = 0.0) {
  FringeRecord rec;
  rec.order = order;
  rec.skewness = s;
  rec.imbalance_r = r;
  rec.usable = true;
  rec.skewness_err = err;
  return rec;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("find_peaks on a cosine") {
    const double dx = 0.01;
    const auto p = sample([](double x) { return 1.0 + std::cos(x); }, -1.0, dx, 1257);
    const auto peaks = find_peaks(p, 0.05);
    REQUIRE(peaks.size() == 2);
    CHECK(std::abs(peaks[0].x_peak) < dx * dx / 8);
    CHECK(std::abs(peaks[1].x_peak - 2 * kPi) < dx * dx / 8);
    // Windows are symmetric and stop at the nearer minimum.
    CHECK(peaks[1].window.hi - peaks[1].x_peak == doctest::Approx(peaks[1].x_peak - peaks[1].window.lo));
    CHECK(peaks[0].window.half_width() <= 1.0 + dx);
  }

  TEST_CASE("find_peaks rejects monotone data and small bumps") {
    CHECK_THROWS_AS(find_peaks(sample([](double x) { return x; }, 0.0, 0.1, 100), 0.05), NoPeaks);
    const auto p = sample([](double x) { return 1.0 + std::cos(x) + 0.01 * std::cos(20 * x) * (x > 10.0); }, -1.0, 0.01, 1600);
    for (const auto& pk : find_peaks(p, 0.05)) CHECK(pk.prominence >= 0.05 * 2.0);
  }

  TEST_CASE("find_peaks matches fringe locations of a linear two-packet pattern") {
    const double q = 2 * kPi / 0.8;
    const auto m = tsk_test::linear_model(1.2, 0.8, 4096, 0.001, -2.048, q);
    const DeformationParams p(1.0, 0.0);
    const auto peaks = find_peaks(twopath::baseline_p0(m, p), 0.05);
    const auto fr = twopath::fringe_locations(m, p, -2.0, 2.0);
    REQUIRE(peaks.size() == fr.size());
    for (std::size_t i = 0; i < fr.size(); ++i) CHECK(std::abs(peaks[i].x_peak - fr[i].x_center) < 1e-3 * 0.8);
  }

  TEST_CASE("local moments: even profile, polynomial profile, scale invariance") {
    const auto even = sample([](double x) { return std::exp(-x * x) + 0.3 * std::cos(3 * x) + 0.5; }, -2.0, 0.01, 401);
    CHECK(std::abs(local_moments(even, 0.0, {-1.0, 1.0}).skewness) < 1e-12);

    const auto poly = sample([](double x) { return 1.0 + 0.1 * x * x * x; }, -1.5, 1e-3, 3001);
    const auto m = local_moments(poly, 0.0, {-1.0, 1.0});
    CHECK(m.mu2 == doctest::Approx(tsk_test::fixture("poly_profile_mu2")).epsilon(1e-5));
    CHECK(m.mu3 == doctest::Approx(tsk_test::fixture("poly_profile_mu3")).epsilon(1e-5));
    CHECK(m.skewness == doctest::Approx(tsk_test::fixture("poly_profile_skewness")).epsilon(1e-5));
    CHECK(std::abs(local_moments(poly.scaled(7.0), 0.0, {-1.0, 1.0}).skewness - m.skewness) < 1e-10);
    CHECK_THROWS_AS(local_moments(poly, 0.0, {5.0, 6.0}), EmptyWindow);
  }

  TEST_CASE("local moments: trapezoid error is second order") {
    auto err = [](double dx) {
      const auto p = sample([](double x) { return 1.0 + 0.1 * x * x * x; }, -1.0, dx, static_cast<std::size_t>(std::lround(2.0 / dx)) + 1);
      return std::abs(local_moments(p, 0.0, {-1.0, 1.0}).skewness - tsk_test::fixture("poly_profile_skewness"));
    };
    CHECK(err(0.02) / err(0.01) == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("translation, parity and scale invariance") {
    auto f = [](double x) { return std::exp(-(x - 0.2) * (x - 0.2)) * (1.0 + 0.3 * std::tanh(x)); };
    const auto p = sample(f, -3.0, 0.01, 601);
    const auto base = local_moments(p, 0.1, {-0.9, 1.1});
    const auto shifted = sample([&](double x) { return f(x - 0.37); }, -3.0 + 0.37, 0.01, 601);
    CHECK(std::abs(local_moments(shifted, 0.47, {-0.53, 1.47}).skewness - base.skewness) < 1e-10);
    const auto mirror = sample([&](double x) { return f(-x); }, -3.0, 0.01, 601);
    CHECK(std::abs(local_moments(mirror, -0.1, {-1.1, 0.9}).skewness + base.skewness) < 1e-10);
    CHECK(std::abs(local_moments(p.scaled(1e-3), 0.1, {-0.9, 1.1}).skewness - base.skewness) < 1e-10);
  }

  TEST_CASE("linear background removal") {
    const auto p = sample([](double x) { return 2.0 + std::cos(x) + 0.3 * x; }, -4.0, 0.01, 801);
    const auto m = local_moments_linear_background(p, 0.0, {-kPi, kPi});
    CHECK(std::abs(m.skewness) < 1e-10);
  }

  TEST_CASE("fit_local_cubic: exact polynomial and conditioning") {
    const auto p = sample([](double x) { return 0.5 - 0.2 * (x - 1) + 0.7 * std::pow(x - 1, 2) + 0.05 * std::pow(x - 1, 3); }, 0.0, 0.01, 201);
    const auto fit = fit_local_cubic(p, 1.0, 0.5);
    CHECK(fit.a[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(fit.a[1] == doctest::Approx(-0.2).epsilon(1e-10));
    CHECK(fit.a[2] == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(fit.a[3] == doctest::Approx(0.05).epsilon(1e-10));
    CHECK_THROWS_AS(fit_local_cubic(p, 1.0, 0.04), TooFewSamples);
  }

  TEST_CASE("fit_local_cubic recovers C3 from P0 + delta P, and nothing odd at theta = 0") {
    const double q = 2 * kPi;
    const auto m = tsk_test::linear_model(1.2, 0.8, 2001, 1e-4, -0.1, q);
    const auto p0 = twopath::baseline_p0(m, DeformationParams(1.0, 0.05));
    const auto dp = twopath::delta_p_closed_form(m, DeformationParams(1.0, 0.05));
    std::vector<double> v(m.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = p0[k] + dp.values[k];
    const auto fit = fit_local_cubic(ProbabilityField(v, m.x0(), m.dx()), 0.0, 0.3 / q);
    CHECK(a3_in_sigma_units(fit, q) == doctest::Approx(twopath::cubic_coefficient(1.2, 0.8, 0.05)).epsilon(0.01));

    const auto sym = fit_local_cubic(p0, 0.0, 0.3 / q);
    CHECK(std::abs(sym.a[1]) < 1e-8 * sym.a[0]);
    CHECK(std::abs(sym.a[3]) < 1e-8 * sym.a[0]);
  }

  TEST_CASE("lsq_center finds the stationary point") {
    const auto p = sample([](double x) { return 1.0 + std::cos(2 * kPi * (x - 1e-3)); }, -0.5, 1.0 / 64, 65);
    CHECK(std::abs(lsq_center(p, 0.0, 0.25) - 1e-3) < 1e-6);
    const auto convex = sample([](double x) { return x * x; }, -0.5, 1.0 / 64, 65);
    CHECK(lsq_center(convex, 0.1, 0.25) == 0.1);
  }

  TEST_CASE("center method names") {
    CHECK(parse_center_method("lsq") == CenterMethod::lsq);
    CHECK(to_string(CenterMethod::centroid) == "centroid");
    CHECK_THROWS_AS(parse_center_method("median"), InvalidArgument);
  }

  TEST_CASE("analyze_windows marks windows leaving the grid") {
    const auto p = sample([](double x) { return 1.0 + std::cos(2 * kPi * x); }, -2.0, 1.0 / 64, 257);
    const auto recs = analyze_windows(p, {{0, 0.0, 0.25}, {2, 2.0, 0.25}}, AnalysisOptions{});
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].usable);
    CHECK(std::abs(recs[0].skewness) < 1e-12);
    CHECK_FALSE(recs[1].usable);
  }

  TEST_CASE("analyze_pattern gives one record per peak") {
    const auto p = sample([](double x) { return 1.0 + std::cos(2 * kPi * x); }, -2.3, 1.0 / 64, 300);
    const auto recs = analyze_pattern(p, AnalysisOptions{});
    CHECK(recs.size() == find_peaks(p, 0.05).size());
    for (const auto& r : recs) CHECK(std::isnan(r.imbalance_r));
  }

  TEST_CASE("calibration table lookup") {
    const CalibrationTable t(0.01, "conv", {{0, 0.1, 0.7}, {0, 0.3, 0.6}, {1, 0.2, 0.5}});
    CHECK(t.k(0, 0.1) == 0.7);
    CHECK(t.k(0, -0.3) == 0.6);
    CHECK(t.k(0, 0.2) == doctest::Approx(0.65));
    CHECK(t.k(1, 0.4) == 0.5);
    CHECK_THROWS_AS(t.k(2, 0.1), Underdetermined);
    CHECK(t.mean_k() == doctest::Approx(0.6));
  }

  TEST_CASE("estimate_theta round trip, null and degenerate input") {
    const CalibrationTable t(0.01, "conv", {{0, 0.1, 0.7}, {0, 0.2, 0.66}, {0, 0.3, 0.6}});
    std::vector<FringeRecord> recs;
    for (double r : {0.1, 0.2, 0.3}) recs.push_back(record(0, 0.02 * t.k(0, r) * r, r));
    const auto est = estimate_theta(recs, t);
    CHECK(est.theta_hat == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(est.n_fringes == 3);

    std::mt19937_64 eng(1);
    std::normal_distribution<double> g(0.0, 1e-3);
    std::vector<FringeRecord> null;
    for (double r : {0.1, 0.2, 0.3}) null.push_back(record(0, g(eng), r, 1e-3));
    const auto e0 = estimate_theta(null, t);
    CHECK(std::abs(e0.theta_hat) < 2 * e0.std_error);
    CHECK(e0.std_error > 0.0);

    CHECK_THROWS_AS(estimate_theta({record(0, 0.0, 0.0), record(0, 0.0, 0.0)}, t), Degenerate);
    CHECK_THROWS_AS(estimate_theta({}, t), Underdetermined);
  }

  TEST_CASE("skewness null test") {
    const auto z = skewness_null_test(std::vector<double>(100, 0.0));
    CHECK(z.z_score == 0.0);
    CHECK_THROWS_AS(skewness_null_test(std::vector<double>(99, 0.0)), TooFewSamples);
    std::vector<double> s(400);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (i % 2 ? 1.0 : -1.0) + 0.1;
    const auto r = skewness_null_test(s);
    CHECK(r.mean == doctest::Approx(0.1));
    CHECK(r.z_score == doctest::Approx(0.1 / (r.std / 20.0)));
  }

  TEST_CASE("skewness is linear in theta at fixed imbalance") {
    const auto m = tsk_test::linear_model(1.2, 0.8, 1024, 1.0 / 64, -8.0, 2 * kPi);
    std::vector<double> ratio;
    for (double th : {0.01, 0.02, 0.04}) {
      const auto recs = analyze_windows(twopath::exact_probability(m, DeformationParams(1.0, th), 512), {{0, 0.0, 0.25}}, AnalysisOptions{});
      ratio.push_back(recs[0].skewness / th);
    }
    CHECK(ratio[2] / ratio[0] == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("balanced packets: no skewness at the central fringe") {
    const auto m = tsk_test::linear_model(1.0, 1.0, 1024, 1.0 / 64, -8.0, 2 * kPi);
    const auto recs = analyze_windows(twopath::exact_probability(m, DeformationParams(1.0, 0.05), 512), {{0, 0.0, 0.25}}, AnalysisOptions{});
    CHECK(std::abs(recs[0].skewness) < 1e-10);
  }
}
