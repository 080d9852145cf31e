#include <cmath>
#include <cstdio>
#include <complex>
#include <numbers>
#include <string>

#include "thetaskew/oracle.hpp"

namespace thetaskew::oracle {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::vector<fixtures::Record> regenerate_fixtures(const std::string& date) {
  std::vector<fixtures::Record> out;
  auto add = [&](std::string name, std::string inputs, double value, double err,
                 std::string op) {
    out.push_back({std::move(name), std::move(inputs), value, err, std::move(op), date});
  };

  // Phase unwrapping along chords.
  for (double step : {3.0, 4.0}) {
    std::vector<std::complex<double>> s;
    for (int k = 0; k < 16; ++k) s.push_back(std::polar(1.0, step * k));
    const auto ph = chord_unwrap(s, 0, 10);
    add(step == 3.0 ? "unwrap_step3_slope" : "unwrap_step4_slope",
        "psi[k]=exp(i*" + num(step) + "*k);k=0..15;anchor=0", ph[15] / 15.0, 1e-12,
        "chord_unwrap");
  }
  {
    const double q = 0.3, theta = 0.05, dx = 0.1;
    std::vector<std::complex<double>> s;
    for (int k = 0; k < 32; ++k)
      s.push_back(std::exp(std::complex<double>(theta, 1.0) * (k * dx * q)));
    const auto ph = chord_unwrap(s, 0, 10);
    const double slope = ph[31] / (31.0 * dx);
    add("decompose_action_slope", "psi=exp((theta+i)q x);q=0.3;theta=0.05;re_kappa=1",
        (1.0 + theta * theta) * slope, 1e-12, "chord_unwrap");
  }

  add("deformed_psi_i_theta0.1", "psi=i;theta=0.1",
      static_cast<double>(std::exp(-2.0L * 0.1L * std::numbers::pi_v<long double> / 2.0L)), 1e-15,
      "scalar_long_double");

  add("p0_example", "R1=1.2;R2=0.8;Delta=0.3", static_cast<double>(baseline(1.2L, 0.8L, 0.3L)),
      1e-15, "baseline_long_double");
  {
    const ld cf = closed_form(1.2L, 0.8L, 0.05L, 0.3L);
    const ld exact_diff = exact_intensity(1.2L, 0.8L, 0.05L, 0, 0.3L) -
                          exact_intensity(1.2L, 0.8L, 0.0L, 0, 0.3L);
    add("closed_form_example", "R1=1.2;R2=0.8;theta=0.05;Delta=0.3;re_kappa=1",
        static_cast<double>(cf), 1e-15, "closed_form_long_double");
    add("closed_form_example_exact_diff", "R1=1.2;R2=0.8;theta=0.05;Delta=0.3;re_kappa=1",
        static_cast<double>(exact_diff), static_cast<double>(std::abs(exact_diff - cf)),
        "exact_intensity");
  }

  // sigma^3 coefficient of the closed form, extracted numerically.
  auto closed_c3 = [](double r1, double r2, double theta) {
    SeriesResult res;
    ld t[6][6];
    ld h = 0.05L;
    auto f = [&](ld d) { return closed_form(r1, r2, theta, d); };
    for (int i = 0; i < 6; ++i, h /= 2.0L) {
      t[i][0] = (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h * h * h);
      ld factor = 4.0L;
      for (int j = 1; j <= i; ++j, factor *= 4.0L)
        t[i][j] = t[i][j - 1] + (t[i][j - 1] - t[i - 1][j - 1]) / (factor - 1.0L);
    }
    res.c[3] = static_cast<double>(t[5][5] / 6.0L);
    res.err[3] = static_cast<double>(std::abs(t[5][5] - t[4][4]) / 6.0L);
    return res;
  };
  {
    const auto s = closed_c3(2.0, 1.0, 0.1);
    add("cubic_coeff_2_1_0.1", "R1=2;R2=1;theta=0.1", s.c[3], s.err[3], "closed_form_richardson");
    const auto t = closed_c3(1.2, 0.8, 0.05);
    add("cubic_coeff_1.2_0.8_0.05", "R1=1.2;R2=0.8;theta=0.05", t.c[3], t.err[3],
        "closed_form_richardson");
  }

  {
    const std::complex<long double> kappa(1.0L, 0.1L);
    const auto f = std::exp(std::complex<long double>(0.0L, -1.0L) * 1.0L * 1.0L / kappa);
    add("eigen_factor_modulus", "E=1;t=1;re_kappa=1;theta=0.1", static_cast<double>(std::abs(f)),
        1e-15, "scalar_long_double");
  }

  {
    const auto m = refined_grid_moments([](double s) { return 1.0 + 0.1 * s * s * s; }, -1.0, 1.0,
                                        0.0, 16);
    add("poly_profile_mu2", "P=1+0.1 s^3;window=[-1,1];center=0", m.mu2, 1e-15,
        "refined_grid_moments");
    add("poly_profile_mu3", "P=1+0.1 s^3;window=[-1,1];center=0", m.mu3, 1e-15,
        "refined_grid_moments");
    add("poly_profile_skewness", "P=1+0.1 s^3;window=[-1,1];center=0", m.skewness,
        std::max(m.error, 1e-15), "refined_grid_moments");
  }

  // Series of the exact intensity at the central fringe.
  const std::pair<double, double> pairs[] = {{1.2, 0.8}, {2.0, 1.0}, {1.05, 0.95}};
  for (const auto& [r1, r2] : pairs)
    for (double theta : {0.01, 0.05}) {
      const auto s = series_delta_p(r1, r2, theta, 0);
      const std::string in =
          "R1=" + num(r1) + ";R2=" + num(r2) + ";theta=" + num(theta) + ";n=0";
      add("series_c3_" + num(r1) + "_" + num(r2) + "_" + num(theta), in, s.c[3], s.err[3],
          "series_delta_p");
    }

  {
    const auto rep = adjudicate_small_imbalance();
    const std::string in = "R0=1;eps=0.05;theta=0.01;Delta in [-pi/2,pi/2]";
    add("small_imbalance_bracket", in,
        rep.chosen == twopath::BracketConvention::full_phase ? 0.0 : 1.0, 0.0,
        "adjudicate_small_imbalance");
    add("small_imbalance_ratio", in, rep.ratio_full, 0.0, "adjudicate_small_imbalance");
    add("small_imbalance_cubic_limit", in, rep.cubic_limit, 1e-9, "adjudicate_small_imbalance");
    add("small_imbalance_rejected_mismatch_at_1", in, rep.rejected_mismatch_at_1, 0.0,
        "adjudicate_small_imbalance");
  }

  {
    // Binomial spread of one bin out of 100 equiprobable bins.
    const long double n = 1e6L, p = 0.01L;
    add("uniform_counts_5sigma", "n=1e6;bins=100", static_cast<double>(5.0L * std::sqrt(n * p * (1 - p))),
        0.0, "binomial_variance");
  }

  {
    // Visibility of cos(q x) after Gaussian averaging over the shift, by direct quadrature.
    const long double q = 2.0L * std::numbers::pi_v<long double> / 1.6L, sigma = 0.1L;
    long double acc = 0.0L, norm = 0.0L;
    const int n = 20001;
    for (int i = 0; i < n; ++i) {
      const long double d = -12.0L * sigma + 24.0L * sigma * i / (n - 1);
      const long double w = std::exp(-0.5L * d * d / (sigma * sigma));
      acc += w * std::cos(q * d);
      norm += w;
    }
    add("path_jitter_visibility", "Delta=q x;q=2pi/1.6;sigma_path=0.1",
        static_cast<double>(acc / norm), 1e-12, "gaussian_quadrature");
  }
  return out;
}

}  // namespace thetaskew::oracle
