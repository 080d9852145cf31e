#include "thetaskew/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "thetaskew/analysis.hpp"
#include "thetaskew/config.hpp"
#include "thetaskew/errors.hpp"
#include "thetaskew/fixtures.hpp"
#include "thetaskew/oracle.hpp"
#include "thetaskew/pipeline.hpp"
#include "thetaskew/solver.hpp"
#include "thetaskew/twopath.hpp"

namespace thetaskew::acceptance {

namespace {

constexpr double kPi = std::numbers::pi;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

const std::pair<double, double> kPairs[] = {{1.2, 0.8}, {2.0, 1.0}, {1.05, 0.95}};
const double kThetas[] = {0.01, 0.05};
constexpr double kSigmaFit = 0.3;

std::string num_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Shared detector-scale setup: 1024 nodes, 64 per fringe, 16 fringes.
std::string base_config(double theta, double imbalance) {
  return "[run]\nmode = analytic_two_packet\nseed = 20240611\n"
         "[deformation]\nre_kappa = 1\ntheta = " + fixtures::format_double(theta) +
         "\n[grid]\npoints = 1024\ndx = 0.015625\nx0 = -8\n"
         "[model]\nenvelope = flat\namplitude_mean = 1\nimbalance = " +
         fixtures::format_double(imbalance) +
         "\nmomentum1 = 6.283185307179586\nmomentum2 = 0\n";
}

const char* kNoise =
    "[noise]\nphase_jitter = 0.3\npath_jitter = 0.1\npsf_sigma = 0.1\nevents = 1000000\n";

Result named(int id, const char* name) {
  Result r;
  r.id = id;
  r.name = name;
  return r;
}

twopath::TwoPacketModel flat_model(double r1, double r2, std::size_t n, double dx, double x0,
                                   double q, double re_kappa = 1.0) {
  std::vector<double> a(n, r1), b(n, r2), s1(n), s2(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) s1[k] = re_kappa * q * (x0 + static_cast<double>(k) * dx);
  return {a, b, s1, s2, x0, dx};
}

// Model sampling Delta = 2 n pi + sigma on sigma in [-s, s].
twopath::TwoPacketModel window_model(double r1, double r2, int n, double s, std::size_t nodes) {
  const double dx = 2.0 * s / static_cast<double>(nodes - 1);
  std::vector<double> a(nodes, r1), b(nodes, r2), s1(nodes), s2(nodes, 0.0);
  for (std::size_t k = 0; k < nodes; ++k) s1[k] = 2.0 * n * kPi - s + static_cast<double>(k) * dx;
  return {a, b, s1, s2, -s, dx};
}

// ---------------------------------------------------------------------------------------

Result cubic_law(const Options& opt) {
  Result r = named(1, "cubic-coefficient law");
  const auto fx = fixtures::load(opt.fixtures_path);
  double worst = 0.0, fixture_drift = 0.0;
  for (const auto& [a, b] : kPairs)
    for (double th : kThetas) {
      const auto s = oracle::series_delta_p(a, b, th, 0);
      const double pred = twopath::cubic_coefficient(a, b, th);
      worst = std::max(worst, std::abs(s.c[3] / pred - 1.0));
      const std::string name = "series_c3_" + num_g(a) + "_" + num_g(b) + "_" + num_g(th);
      fixture_drift = std::max(fixture_drift, std::abs(fx.value(name) - s.c[3]) / std::abs(s.c[3]));
    }
  r.pass = worst < 0.01 && fixture_drift < 1e-9;
  r.detail = "max |c3/C3 - 1| = " + sci(worst) + " (tol 1e-2) over 6 cases; fixture drift " +
             sci(fixture_drift);
  return r;
}

Result no_distortion(const Options&) {
  Result r = named(2, "no linear/quadratic distortion");
  double worst_fo = 0.0, worst_full = 0.0;
  for (const auto& [a, b] : kPairs)
    for (double th : kThetas) {
      const auto full = oracle::series_delta_p(a, b, th, 0);
      const auto fo = oracle::series_delta_p_first_order(a, b, th, 0);
      const double scale = std::abs(full.c[3] * kSigmaFit);
      worst_fo = std::max({worst_fo, std::abs(fo.c[1]) / scale, std::abs(fo.c[2]) / scale});
      worst_full = std::max({worst_full, std::abs(full.c[1]) / scale, std::abs(full.c[2]) / scale});
    }

  // Peak positions at theta = 0.1 against theta = 0.
  const auto m = flat_model(1.2, 0.8, 1024, 1.0 / 64, -8.0, 2.0 * kPi);
  const DeformationParams p0(1.0, 0.0), p1(1.0, 0.1);
  const auto a0 = analysis::find_peaks(twopath::exact_probability(m, p0, 512), 0.05);
  const auto a1 = analysis::find_peaks(twopath::exact_probability(m, p1, 512), 0.05);
  double shift = 0.0, central_shift = 1.0;
  for (const auto& pk : a1) {
    double best = 1e300;
    for (const auto& q : a0) best = std::min(best, std::abs(q.x_peak - pk.x_peak));
    shift = std::max(shift, best);  // fringe spacing is 1
    central_shift = std::min(central_shift, std::abs(pk.x_peak));
  }

  // Curvature of the exact intensity at the central fringe, theta = 0.1.
  double curv = 0.0;
  for (const auto& [a, b] : kPairs) {
    const auto s = oracle::series_delta_p(a, b, 0.1, 0);
    curv = std::max(curv, std::abs(2.0 * s.c[2]) / (2.0 * a * b));
  }

  const bool pass_c = worst_fo < 1e-4;
  const bool pass_peak = shift < 1e-3 && a0.size() == a1.size();
  const bool pass_curv = curv < 1e-3;
  r.pass = pass_c && pass_peak && pass_curv;
  r.detail = "first-order |c1|,|c2| <= " + sci(worst_fo) + " x |c3 sigma_fit| (tol 1e-4" +
             std::string(pass_c ? ", ok" : ", FAIL") + "); peak shift " + sci(shift) +
             " spacings (tol 1e-3" + (pass_peak ? ", ok" : ", FAIL") + "); curvature change " +
             sci(curv) + " (tol 1e-3" + (pass_curv ? ", ok" : ", FAIL") + ")";
  r.notes.push_back("full c1, c2 (all orders in theta) reach " + sci(worst_full) +
                    " x |c3 sigma_fit|: c2 = theta^2 R1 R2 + O(theta^3) is second order");
  if (!pass_peak)
    r.notes.push_back("peaks at theta = 0.1: " + std::to_string(a1.size()) + " of " +
                      std::to_string(a0.size()) + " detected, central fringe moves " +
                      sci(central_shift) + " spacings; fringe n sits at x = n (1 + theta^2), "
                      "a second-order shift, and the outer fringes lose prominence");
  if (!pass_curv)
    r.notes.push_back("curvature change is theta^2 (0.01 at theta = 0.1), so the 1e-3 bound "
                      "cannot hold for the exact intensity; absence of quadratic terms holds "
                      "only at first order in theta");
  return r;
}

Result closed_form_validity(const Options&) {
  Result r = named(3, "closed-form validity");
  auto max_err = [](double th) {
    double worst = 0.0;
    for (int n = -2; n <= 2; ++n) {
      const auto m = window_model(1.2, 0.8, n, 0.5 * kPi - 1e-3, 401);
      const auto cf = twopath::delta_p_closed_form(m, DeformationParams(1.0, th));
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (cf.masked(k)) continue;
        const long double sigma = m.x(k);
        const long double exact = oracle::exact_intensity(1.2L, 0.8L, th, n, sigma) -
                                  oracle::exact_intensity(1.2L, 0.8L, 0.0L, n, sigma);
        worst = std::max(worst, static_cast<double>(std::abs(exact - static_cast<long double>(cf.values[k]))));
      }
    }
    return worst;
  };
  const double e1 = max_err(0.025), e2 = max_err(0.05);
  const double ratio = e2 / e1;
  r.pass = within(ratio, 3.5, 4.5);
  r.detail = "max error " + sci(e1) + " (theta 0.025), " + sci(e2) + " (theta 0.05), ratio " +
             sci(ratio) + " (want [3.5, 4.5]); fringes n = -2..2, |sigma| < pi/2";
  return r;
}

Result small_imbalance(const Options& opt) {
  Result r = named(4, "small-imbalance adjudication");
  const auto rep = oracle::adjudicate_small_imbalance();
  const auto fx = fixtures::load(opt.fixtures_path);
  const bool fixture_ok = fx.value("small_imbalance_bracket") ==
                          (rep.chosen == twopath::BracketConvention::full_phase ? 0.0 : 1.0);

  // Library expansion against the library closed form.
  auto rel = [](double eps) {
    const auto m = window_model(1.0 + eps, 1.0 - eps, 0, 0.5 * kPi, 401);
    const DeformationParams p(1.0, 0.01);
    const auto si = twopath::delta_p_small_imbalance(m, p, twopath::kAdoptedBracket).field;
    const auto cf = twopath::delta_p_closed_form(m, p);
    double d = 0.0, s = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      d = std::max(d, std::abs(si.values[k] - cf.values[k]));
      s = std::max(s, std::abs(cf.values[k]));
    }
    return d / s;
  };
  const double lib_ratio = rel(0.05) / rel(0.025);
  const double cubic = rep.cubic_limit / (2.0 / 3.0);
  const double c1_limit = twopath::cubic_coefficient(1.05, 0.95, 0.01) / (0.01 * 1.05 * 0.95 * 0.05);
  r.pass = rep.chosen == twopath::kAdoptedBracket && within(rep.ratio_full, 3.5, 4.5) &&
           within(lib_ratio, 3.5, 4.5) && std::abs(cubic - 1.0) < 0.01 &&
           std::abs(c1_limit / (2.0 / 3.0) - 1.0) < 1e-12 && fixture_ok;
  r.detail = std::string("bracket = ") +
             (rep.chosen == twopath::BracketConvention::full_phase ? "Delta" : "Delta/2") +
             "; error ratio on halving eps " + sci(rep.ratio_full) + " (oracle), " + sci(lib_ratio) +
             " (library); cubic limit " + sci(rep.cubic_limit) + " vs 2/3; rejected bracket mismatch at Delta=1 " +
             sci(rep.rejected_mismatch_at_1);
  return r;
}

Result skewness_scaling(const Options&) {
  Result r = named(5, "skewness scaling");
  auto cfg = config::parse(base_config(0.01, 0.1) +
                           "[sweep]\ntheta = 0.01, 0.02, 0.04\nimbalance = 0.1, 0.2, 0.3\norder = 0\n");
  const auto sw = pipeline::sweep(cfg);

  // The null is taken on the sweep observable (the central fringe); other orders are reported.
  double null_max = 0.0, null_all = 0.0;
  for (double th : {0.01, 0.02, 0.04}) {
    const DeformationParams p(1.0, th);
    const auto scene = pipeline::build_scene(cfg, p, 0.0);
    const auto meas = pipeline::measure(cfg, scene, p, cfg.noise, 1);
    for (const auto& rec : meas.records) {
      if (!rec.usable) continue;
      null_all = std::max(null_all, std::abs(rec.skewness));
      if (rec.order == cfg.sweep->order) null_max = std::max(null_max, std::abs(rec.skewness));
    }
  }
  const bool r2_ok = sw.fit.r2 > 0.999, dev_ok = sw.fit.max_rel_dev < 0.02, null_ok = null_max < 1e-10;
  r.pass = r2_ok && dev_ok && null_ok;
  r.detail = "central fringe: K = " + sci(sw.fit.k) + ", intercept " + sci(sw.fit.intercept) +
             ", R^2 = " + fixtures::format_double(sw.fit.r2).substr(0, 8) + " (tol > 0.999" +
             (r2_ok ? ", ok" : ", FAIL") + "), max per-point deviation " + sci(sw.fit.max_rel_dev) +
             " (tol 2e-2" + (dev_ok ? ", ok" : ", FAIL") + "); r = 0 max |S| " + sci(null_max) +
             " (tol 1e-10" + (null_ok ? ", ok" : ", FAIL") + ")";
  for (const auto& row : sw.rows)
    if (row.record.order == 0 && row.imbalance > 0.0 && row.theta == 0.01)
      r.notes.push_back("S/(theta r) at r = " + num_g(row.imbalance) + ": " +
                        sci(row.record.skewness / (row.theta * row.imbalance)));
  r.notes.push_back("r = 0 over all usable fringes: max |S| " + sci(null_all) +
                    " (the deformation unbalances the packets away from the central fringe)");
  if (!dev_ok)
    r.notes.push_back("S/(theta r) falls with r: the cubic term carries R1 R2 = R0^2 (1 - r^2) and "
                      "the fringe visibility (1 - r^2)/(1 + r^2), so S = K theta r holds to leading "
                      "order in r only");
  return r;
}

Result noise_null(const Options& opt) {
  Result r = named(6, "symmetric-noise null");
  auto cfg = config::parse(base_config(0.0, 0.2) + kNoise + "realizations = " +
                           std::to_string(opt.null_realizations) + "\n[analysis]\ncenter = lsq\n");
  const auto res = pipeline::null_test(cfg);
  double worst = 0.0;
  int fails = 0;
  for (const auto& row : res.rows) {
    worst = std::max(worst, std::abs(row.result.z_score));
    fails += row.pass ? 0 : 1;
  }
  r.pass = fails == 0;
  r.detail = std::to_string(res.rows.size()) + " fringes, N = " + std::to_string(res.realizations) +
             " realizations of 1e6 events, max |z| = " + sci(worst) + " (tol 3), " +
             std::to_string(fails) + " fringe(s) over";
  return r;
}

Result theta_round_trip(const Options& opt) {
  Result r = named(7, "theta round-trip");
  const double theta = 0.02;
  auto run = [&](bool noisy) {
    std::vector<analysis::FringeRecord> records;
    std::vector<analysis::CalibrationTable::Entry> entries;
    std::string conv;
    for (double imb : {0.1, 0.2, 0.3}) {
      std::string text = base_config(theta, imb) + "[analysis]\ncenter = lsq\n";
      if (noisy) text += std::string(kNoise) + "realizations = " + std::to_string(opt.noisy_realizations) + "\n";
      auto cfg = config::parse(text);
      cfg.override_seed(cfg.seed + static_cast<std::uint64_t>(imb * 1000));
      const auto scene = pipeline::build_scene(cfg, cfg.deformation, imb);
      const auto meas = pipeline::measure(cfg, scene, cfg.deformation, cfg.noise, cfg.realizations);
      records.insert(records.end(), meas.records.begin(), meas.records.end());
      const auto cal = pipeline::calibrate(cfg, imb);
      entries.insert(entries.end(), cal.entries().begin(), cal.entries().end());
      conv = cal.convention();
    }
    return analysis::estimate_theta(records, analysis::CalibrationTable(0.01, conv, entries));
  };
  const auto clean = run(false);
  const auto noisy = run(true);
  const double clean_rel = std::abs(clean.theta_hat - theta) / theta;
  const double noisy_z = std::abs(noisy.theta_hat - theta) / noisy.std_error;
  r.pass = clean_rel < 0.05 && noisy_z < 2.0;
  r.detail = "noiseless theta_hat = " + sci(clean.theta_hat) + " (rel err " + sci(clean_rel) +
             ", tol 5e-2, " + std::to_string(clean.n_fringes) + " fringes); noisy theta_hat = " +
             sci(noisy.theta_hat) + " +- " + sci(noisy.std_error) + " (" + sci(noisy_z) +
             " std errors, tol 2)";
  return r;
}

Result solver_validation(const Options&) {
  Result r = named(8, "solver validation");
  // (a) theta = 0 free Gaussian against the analytic dispersing packet.
  double gauss_err = 0.0;
  {
    const std::size_t n = 1024;
    const double dx = 60.0 / n, x0 = -30.0, s = 1.0, k0 = 2.0, t = 1.0, c0 = -5.0;
    std::vector<cplx> v(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = x0 + k * dx;
      v[k] = std::exp(cplx(-(x - c0) * (x - c0) / (4 * s * s), k0 * x));
    }
    solver::SolverConfig sc;
    sc.mass = 1.0;
    sc.dt = 1e-3;
    sc.n_steps = 1000;
    const auto out = solver::evolve(WaveField(v, x0, dx), sc, DeformationParams(1.0, 0.0)).final_field;
    const double st = s * std::sqrt(1.0 + std::pow(t / (2.0 * s * s), 2));
    std::vector<double> exact(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = x0 + k * dx - c0 - k0 * t;
      exact[k] = (s / st) * std::exp(-u * u / (2 * st * st));
    }
    // Central 90% of the mass.
    double total = 0.0;
    for (double e : exact) total += e;
    double acc = 0.0, peak = *std::max_element(exact.begin(), exact.end());
    for (std::size_t k = 0; k < n; ++k) {
      acc += exact[k];
      if (acc < 0.05 * total || acc > 0.95 * total) continue;
      gauss_err = std::max(gauss_err, std::abs(std::norm(out[k]) - exact[k]) / peak);
    }
  }
  // (b) single mode with complex kappa. A coarse grid keeps exp(theta k^2 t / 2m) of the
  // highest resolved wavenumber small, so roundoff in the empty modes stays negligible.
  double mode_err = 0.0;
  {
    const std::size_t n = 32;
    const double len = 20.0, dx = len / n, kk = 2 * kPi * 5 / len, t = 1.0, m = 1.0;
    const DeformationParams p(1.0, 0.1);
    std::vector<cplx> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = std::exp(cplx(0.0, kk * k * dx));
    solver::SolverConfig sc;
    sc.mass = m;
    sc.dt = 0.01;
    sc.n_steps = 100;
    const auto out = solver::evolve(WaveField(v, 0.0, dx), sc, p).final_field;
    const cplx omega = p.kappa() * kk * kk / (2 * m);
    const cplx factor = std::exp(cplx(0.0, -1.0) * omega * t);
    for (std::size_t k = 0; k < n; ++k) mode_err = std::max(mode_err, std::abs(out[k] - factor * v[k]) / std::abs(factor));
  }
  // (c) linearity with complex kappa and a harmonic potential.
  // The grid is kept coarse for the same reason as in (b): with theta > 0 the top
  // wavenumbers grow and would amplify roundoff well above 1e-12.
  double lin_err = 0.0;
  {
    const std::size_t n = 128;
    const double dx = 0.25, x0 = -16.0;
    std::mt19937_64 eng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    auto random_packet = [&] {
      const double c = g(eng), k0 = g(eng), w = 1.0 + 0.2 * std::abs(g(eng));
      std::vector<cplx> v(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double x = x0 + k * dx;
        v[k] = std::exp(cplx(-(x - c) * (x - c) / (4 * w * w), k0 * x));
      }
      return v;
    };
    const auto u = random_packet(), w = random_packet();
    const cplx a(0.7, -0.3), b(-1.1, 0.4);
    std::vector<cplx> sum(n);
    for (std::size_t k = 0; k < n; ++k) sum[k] = a * u[k] + b * w[k];
    solver::SolverConfig sc;
    sc.mass = 1.0;
    sc.dt = 5e-4;
    sc.n_steps = 1000;
    sc.potential.resize(n);
    for (std::size_t k = 0; k < n; ++k) sc.potential[k] = 0.5 * std::pow(x0 + k * dx, 2);
    const DeformationParams p(1.0, 0.05);
    const auto eu = solver::evolve(WaveField(u, x0, dx), sc, p).final_field;
    const auto ew = solver::evolve(WaveField(w, x0, dx), sc, p).final_field;
    const auto es = solver::evolve(WaveField(sum, x0, dx), sc, p).final_field;
    for (std::size_t k = 0; k < n; ++k)
      lin_err = std::max(lin_err, std::abs(es[k] - (a * eu[k] + b * ew[k])));
    lin_err /= es.max_abs();
  }
  // (d) theta = 0 norm drift over 10^4 periodic steps.
  double drift = 0.0;
  {
    const std::size_t n = 256;
    const double dx = 0.1, x0 = -12.8;
    std::vector<cplx> v(n);
    std::vector<double> pot(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = x0 + k * dx;
      v[k] = std::exp(cplx(-(x - 1.0) * (x - 1.0) / 2.0, 1.5 * x));
      pot[k] = 0.5 * x * x;
    }
    solver::SolverConfig sc;
    sc.mass = 1.0;
    sc.dt = 1e-3;
    sc.n_steps = 10000;
    sc.potential = pot;
    sc.trace_r2 = false;
    const auto rep = solver::evolve(WaveField(v, x0, dx), sc, DeformationParams(1.0, 0.0));
    drift = std::abs(rep.norm_trace.back().norm_psi / rep.norm_trace.front().norm_psi - 1.0);
  }
  const bool ok_a = gauss_err < 1e-6, ok_b = mode_err < 1e-6, ok_c = lin_err < 1e-12, ok_d = drift < 1e-8;
  r.pass = ok_a && ok_b && ok_c && ok_d;
  r.detail = "free Gaussian " + sci(gauss_err) + " (1e-6); single mode " + sci(mode_err) +
             " (1e-6); linearity " + sci(lin_err) + " (1e-12); norm drift " + sci(drift) + " (1e-8)";
  return r;
}

Result eigen_factor(const Options&) {
  Result r = named(9, "eigen-factor consistency");
  const std::size_t n = 128;
  const double dx = 0.25, x0 = -16.0, m = 1.0, w = 1.0;
  const DeformationParams p(1.0, 0.02);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = 0.5 * m * w * w * std::pow(x0 + k * dx, 2);
  double worst = 0.0;
  std::string energies;
  for (int level : {0, 1}) {
    const auto eig = oracle::discrete_eigenstate(n, dx, v, m, p.kappa(), p.kappa() * w * (level + 0.5));
    const double period = 2 * kPi / w;
    solver::SolverConfig sc;
    sc.mass = m;
    sc.potential = v;
    sc.n_steps = 40000;
    sc.dt = period / static_cast<double>(sc.n_steps);
    sc.trace_r2 = false;
    const auto out = solver::evolve(WaveField(eig.state, x0, dx), sc, p).final_field;
    const cplx f = solver::eigen_time_dependence(eig.energy, period, p);
    double scale = 0.0;
    for (const auto& z : eig.state) scale = std::max(scale, std::abs(z));
    for (std::size_t k = 0; k < n; ++k)
      worst = std::max(worst, std::abs(out[k] - f * eig.state[k]) / (std::abs(f) * scale));
    energies += (energies.empty() ? "" : ", ") + sci(eig.energy.real()) + (eig.energy.imag() < 0 ? "" : "+") +
                sci(eig.energy.imag()) + "i";
  }
  r.pass = worst < 1e-8;
  r.detail = "harmonic levels 0, 1 (E = " + energies + "), theta 0.02, one period: max relative error " +
             sci(worst) + " (tol 1e-8)";
  return r;
}

struct ContinuityNumbers {
  double residual = 0.0, diffusion = 0.0, mismatch = 0.0;
};

ContinuityNumbers continuity_at(double theta, std::size_t n, double dt) {
  const double len = 40.0, dx = len / n, x0 = -20.0, s = 1.0, k0 = 1.0, m = 1.0;
  const DeformationParams p(1.0, theta);
  std::vector<cplx> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = x0 + k * dx;
    v[k] = std::exp(cplx(-x * x / (4 * s * s), k0 * x));
  }
  const WaveField f0(v, x0, dx);
  solver::SolverConfig sc;
  sc.mass = m;
  sc.dt = dt;
  sc.n_steps = 1;
  sc.trace_r2 = false;
  const auto f1 = solver::evolve(f0, sc, p).final_field;
  solver::ResidualOptions ro;
  ro.mass = m;
  ro.anchor_index = n / 2;
  ro.zero_rel = 1e-4;
  const auto c = solver::continuity_residual(f0, f1, dt, ro, p);
  ContinuityNumbers out;
  for (std::size_t k = 0; k < n; ++k) {
    if (c.residual.masked(k)) continue;
    const double x = c.residual.x(k);
    if (std::abs(x) > 4.0) continue;  // packet core
    out.residual += c.residual.values[k] * c.residual.values[k] * dx;
    out.diffusion += c.diffusion.values[k] * c.diffusion.values[k] * dx;
    const double d = c.residual.values[k] - c.diffusion.values[k];
    out.mismatch += d * d * dx;
  }
  out.residual = std::sqrt(out.residual);
  out.diffusion = std::sqrt(out.diffusion);
  out.mismatch = std::sqrt(out.mismatch);
  return out;
}

Result continuity(const Options&) {
  Result r = named(10, "continuity diagnostics");
  const auto z1 = continuity_at(0.0, 512, 2e-3), z2 = continuity_at(0.0, 1024, 1e-3);
  const double rate = z1.residual / z2.residual;
  const auto t1 = continuity_at(0.05, 512, 2e-3);
  const double disc = z1.residual;
  const bool conv_ok = rate >= 3.5;
  const bool track_ok = t1.mismatch <= 2.0 * disc;
  r.pass = conv_ok && track_ok;
  r.detail = "theta 0: residual " + sci(z1.residual) + " -> " + sci(z2.residual) + " on halving dx, dt (ratio " +
             sci(rate) + ", want >= 3.5); theta 0.05: |residual - diffusion| " + sci(t1.mismatch) +
             " vs 2 x discretization " + sci(2.0 * disc) + "; residual " + sci(t1.residual) +
             ", diffusion term " + sci(t1.diffusion);
  r.notes.push_back("open question: with complex kappa the continuity residual does not vanish; it equals "
                    "-(2 Im kappa/m) R R'' (L2 " + sci(t1.diffusion) + " here, " +
                    sci(t1.diffusion / std::max(disc, 1e-300)) +
                    "x the discretization error), so d(R^2)/dt + div(R^2 v) = 0 as stated for the "
                    "deformed dynamics is not reproduced");
  return r;
}

Result invariances(const Options&) {
  Result r = named(11, "invariance suite");
  std::vector<std::string> failed;
  auto check = [&](const char* name, double value, double tol) {
    if (!(value <= tol)) failed.push_back(std::string(name) + "=" + sci(value));
  };
  const double th = 0.05;
  const DeformationParams p(1.0, th);
  const auto m = flat_model(1.2, 0.8, 1024, 1.0 / 64, -8.0, 2.0 * kPi);
  const auto field = twopath::build_field(m, p);
  const std::size_t anchor = 512;
  const auto base = twopath::exact_probability(m, p, anchor);
  analysis::AnalysisOptions o;
  std::vector<analysis::WindowHint> hints;
  for (int n = -5; n <= 5; ++n) hints.push_back({n, static_cast<double>(n), 0.25});
  const auto recs = analysis::analyze_windows(base, hints, o);
  auto max_change = [&](const std::vector<analysis::FringeRecord>& other, double sign) {
    double d = 0.0;
    for (std::size_t i = 0; i < recs.size(); ++i) d = std::max(d, std::abs(recs[i].skewness - sign * other[i].skewness));
    return d;
  };

  // Anchor covariance: the 2 pi branch shift rescales P by exp(-4 pi theta).
  {
    UnwrapOptions uo;
    uo.anchor_phase = twopath::model_anchor_phase(m, p, anchor) + 2 * kPi;
    const auto shifted = deformed_probability(field, p, anchor, uo);
    double rel = 0.0;
    const double f = std::exp(-4 * kPi * th);
    for (std::size_t k = 0; k < base.size(); ++k) rel = std::max(rel, std::abs(shifted[k] - f * base[k]) / (f * base[k]));
    check("anchor_factor", rel, 1e-12);
    check("anchor_skewness", max_change(analysis::analyze_windows(shifted, hints, o), 1.0), 1e-10);
    const auto other = twopath::exact_probability(m, p, anchor + 200);
    check("anchor_node_skewness", max_change(analysis::analyze_windows(other, hints, o), 1.0), 1e-10);
  }
  check("scale", max_change(analysis::analyze_windows(base.scaled(7.0), hints, o), 1.0), 1e-10);
  {
    // Rigid translation by 37 nodes, windows moving along.
    const std::size_t sh = 37;
    std::vector<double> v(base.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = base[(k + base.size() - sh) % base.size()];
    std::vector<analysis::WindowHint> moved = hints;
    for (auto& h : moved) h.x_center += sh * base.dx();
    check("translation", max_change(analysis::analyze_windows(ProbabilityField(v, base.x0(), base.dx()), moved, o), 1.0), 1e-10);
  }
  {
    // Mirror about x = 0 (node 512): x -> -x.
    std::vector<double> v(base.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::size_t j = 1024 - k;
      v[k] = j < base.size() ? base[j] : base[0];
    }
    std::vector<analysis::WindowHint> mirrored;
    for (auto it = hints.rbegin(); it != hints.rend(); ++it) mirrored.push_back({-it->order, -it->x_center, it->half_width});
    auto mrec = analysis::analyze_windows(ProbabilityField(v, base.x0(), base.dx()), mirrored, o);
    std::reverse(mrec.begin(), mrec.end());
    check("parity", max_change(mrec, -1.0), 1e-10);
  }
  {
    const auto bal = flat_model(1.0, 1.0, 1024, 1.0 / 64, -8.0, 2.0 * kPi);
    double worst = 0.0, central = 0.0;
    for (const auto& rec : analysis::analyze_windows(twopath::exact_probability(bal, p, anchor), hints, o)) {
      worst = std::max(worst, std::abs(rec.skewness));
      if (rec.order == 0) central = std::abs(rec.skewness);
    }
    check("balance_zero", worst, 1e-10);
    if (worst > 1e-10)
      r.notes.push_back("balance: |S| = " + sci(central) + " at the central fringe, up to " +
                        sci(worst) + " at |n| <= 5; exp(i S/kappa) gives the packets moduli "
                        "R exp(theta S / |kappa|^2), a local imbalance that grows with n");
  }
  {
    // S(theta)/theta at the central fringe, r = 0.2.
    std::vector<double> ratio;
    for (double t : {0.01, 0.02, 0.04}) {
      const DeformationParams q(1.0, t);
      const auto rr = analysis::analyze_windows(twopath::exact_probability(m, q, anchor), {{0, 0.0, 0.25}}, o);
      ratio.push_back(rr[0].skewness / t);
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    check("theta_linearity", (*hi - *lo) / std::abs(*hi), 0.01);
  }
  {
    // Round trip and R^2 = P on random smooth fields.
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double rt = 0.0, r2 = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 128;
      const double a0 = u(eng), a1 = u(eng), b0 = u(eng), b1 = u(eng), tt = 0.5 * u(eng);
      std::vector<cplx> v(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double x = k / 16.0;
        v[k] = (1.5 + 0.5 * std::sin(a0 * x + b0)) * std::exp(cplx(0.0, 2.0 * std::sin(a1 * x) + 3.0 * b1 * x));
      }
      const WaveField f(v, 0.0, 1.0 / 16);
      const DeformationParams q(1.3, tt);
      const auto pa = decompose(f, q, n / 2);
      const auto back = recompose(pa, q);
      const auto pr = deformed_probability(f, q, n / 2);
      for (std::size_t k = 0; k < n; ++k) {
        rt = std::max(rt, std::abs(back[k] - f[k]) / std::abs(f[k]));
        r2 = std::max(r2, std::abs(pa.amplitude[k] * pa.amplitude[k] - pr[k]) / pr[k]);
      }
    }
    check("round_trip", rt, 1e-12);
    check("r2_equals_p", r2, 1e-12);
  }
  {
    const auto p0 = twopath::baseline_p0(m, p);
    const auto a = analysis::find_peaks(base, 0.05), b = analysis::find_peaks(p0, 0.05);
    double worst = a.size() == b.size() ? 0.0 : 1.0, central = 1.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) worst = std::max(worst, std::abs(a[i].x_peak - b[i].x_peak));
    for (const auto& pk : a) central = std::min(central, std::abs(pk.x_peak));
    check("peak_theta_independence", worst, 1e-3);
    if (worst > 1e-3)
      r.notes.push_back("peaks: central fringe moves " + sci(central) + " spacings; fringe n sits at "
                        "x = n (1 + theta^2) because the phase is S / (|kappa|^2 / re_kappa), so "
                        "outer fringes move by n theta^2");
    double pmin = 0.0;
    for (double v : base.values()) pmin = std::min(pmin, v);
    check("positivity", -pmin, 0.0);
  }
  r.pass = failed.empty();
  r.detail = "anchor, scale, translation, parity, balance, theta-linearity, round-trip, R^2 = P, peak "
             "position, positivity: ";
  if (failed.empty()) {
    r.detail += "all within tolerance";
  } else {
    for (std::size_t i = 0; i < failed.size(); ++i) r.detail += (i ? ", " : "failed ") + failed[i];
  }
  return r;
}

}  // namespace

std::string default_fixtures_path() {
#ifdef THETASKEW_FIXTURES
  return THETASKEW_FIXTURES;
#else
  return "fixtures/derived_constants.csv";
#endif
}

std::vector<int> all_criteria() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}; }

bool is_slow(int id) { return id == 6; }

Result run(int id, const Options& options) {
  Options opt = options;
  if (opt.fixtures_path.empty()) opt.fixtures_path = default_fixtures_path();
  const auto start = std::chrono::steady_clock::now();
  Result r;
  try {
    switch (id) {
      case 1: r = cubic_law(opt); break;
      case 2: r = no_distortion(opt); break;
      case 3: r = closed_form_validity(opt); break;
      case 4: r = small_imbalance(opt); break;
      case 5: r = skewness_scaling(opt); break;
      case 6: r = noise_null(opt); break;
      case 7: r = theta_round_trip(opt); break;
      case 8: r = solver_validation(opt); break;
      case 9: r = eigen_factor(opt); break;
      case 10: r = continuity(opt); break;
      case 11: r = invariances(opt); break;
      default: throw InvalidArgument("no acceptance criterion " + std::to_string(id));
    }
  } catch (const std::exception& e) {
    r.id = id;
    if (r.name.empty()) r.name = "criterion " + std::to_string(id);
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string format(const Result& r) {
  char t[32];
  std::snprintf(t, sizeof t, "%.1fs", r.seconds);
  std::string out = std::string(r.pass ? "[PASS] " : "[FAIL] ") + std::to_string(r.id) + " " + r.name +
                    ": " + r.detail + " [" + t + "]";
  for (const auto& n : r.notes) out += "\n       note: " + n;
  return out;
}

}  // namespace thetaskew::acceptance
