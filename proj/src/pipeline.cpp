#include "thetaskew/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "thetaskew/errors.hpp"
#include "thetaskew/fixtures.hpp"
#include "thetaskew/noise.hpp"
#include "thetaskew/rng.hpp"
#include "thetaskew/solver.hpp"

namespace thetaskew::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using analysis::FringeRecord;
using fixtures::format_double;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kOverlapRel = 1e-3;

std::string fmt(double v) { return format_double(v); }

// First and last node where both envelopes exceed kOverlapRel of their peak.
std::pair<double, double> overlap_region(std::span<const double> a, std::span<const double> b,
                                         const Grid& g) {
  const double ma = *std::max_element(a.begin(), a.end());
  const double mb = *std::max_element(b.begin(), b.end());
  std::size_t first = g.size, last = 0;
  for (std::size_t k = 0; k < g.size; ++k)
    if (a[k] >= kOverlapRel * ma && b[k] >= kOverlapRel * mb) {
      first = std::min(first, k);
      last = k;
    }
  if (first >= last) throw NoFringe("the two packets do not overlap on the grid");
  return {g.x(first), g.x(last)};
}

double detector_margin(const config::RunConfig& cfg) {
  return 6.0 * cfg.noise.psf_sigma + 5.0 * cfg.noise.path_jitter_sigma + 4.0 * cfg.grid.dx;
}

solver::SolverConfig solver_config(const config::RunConfig& cfg) {
  const auto& s = *cfg.solver;
  solver::SolverConfig sc;
  sc.mass = s.mass;
  sc.dt = s.dt;
  sc.n_steps = s.steps;
  sc.boundary = s.boundary;
  sc.trace_stride = s.trace_stride;
  if (s.potential == config::Potential::harmonic) {
    const auto g = cfg.grid.grid();
    sc.potential.resize(g.size);
    for (std::size_t k = 0; k < g.size; ++k)
      sc.potential[k] = 0.5 * s.mass * s.omega * s.omega * g.x(k) * g.x(k);
  }
  return sc;
}

WaveField gaussian_packet(const config::GridSpec& gs, double amplitude, double center, double width,
                          double momentum, double offset) {
  std::vector<cplx> v(gs.points);
  const auto g = gs.grid();
  for (std::size_t k = 0; k < gs.points; ++k) {
    const double u = (g.x(k) - center) / width;
    v[k] = amplitude * std::exp(cplx(-0.25 * u * u, momentum * g.x(k) + offset));
  }
  return WaveField(std::move(v), gs.x0, gs.dx);
}

std::size_t argmax_abs(const WaveField& f) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < f.size(); ++k)
    if (std::abs(f[k]) > std::abs(f[best])) best = k;
  return best;
}

double local_imbalance(const twopath::TwoPacketModel& m, double x) {
  const auto g = m.grid();
  const double a = twopath::TwoPacketModel::interpolate(m.r1(), g, x);
  const double b = twopath::TwoPacketModel::interpolate(m.r2(), g, x);
  return a + b > 0.0 ? (a - b) / (a + b) : kNaN;
}

bool noise_active(const noise::NoiseConfig& n) {
  return !n.jitter_free() || n.events_per_shot > 0;
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::string& header, std::initializer_list<const char*> cols)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << header;
    bool first = true;
    for (const char* c : cols) {
      out_ << (first ? "" : ",") << fixtures::csv_quote(c);
      first = false;
    }
    out_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << fixtures::csv_quote(cells[i]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json record_json(const FringeRecord& r) {
  return {{"order", r.order},
          {"x_peak", finite_or_null(r.x_peak)},
          {"skewness", finite_or_null(r.skewness)},
          {"skewness_err", finite_or_null(r.skewness_err)},
          {"imbalance_r", finite_or_null(r.imbalance_r)},
          {"usable", r.usable}};
}

void write_records(const fs::path& path, const std::string& header,
                   const std::vector<FringeRecord>& records) {
  CsvFile f(path, header,
            {"order", "x_peak", "window_lo", "window_hi", "mu2", "mu3", "skewness", "skewness_err",
             "a0", "a1", "a2", "a3", "imbalance_r", "mask_fraction", "usable"});
  for (const auto& r : records)
    f.row({std::to_string(r.order), fmt(r.x_peak), fmt(r.window.lo), fmt(r.window.hi), fmt(r.mu2),
           fmt(r.mu3), fmt(r.skewness), fmt(r.skewness_err), fmt(r.poly_fit[0]), fmt(r.poly_fit[1]),
           fmt(r.poly_fit[2]), fmt(r.poly_fit[3]), fmt(r.imbalance_r), fmt(r.mask_fraction),
           r.usable ? "1" : "0"});
}

// Two-column window profiles, normalized to unit mass, one file per usable fringe.
void write_profiles(const fs::path& dir, const std::string& header, const ProbabilityField& p,
                    const std::vector<FringeRecord>& records) {
  fs::create_directories(dir);
  for (const auto& r : records) {
    if (!r.usable) continue;
    double mass = 0.0;
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < p.size(); ++k)
      if (p.x(k) >= r.window.lo && p.x(k) <= r.window.hi) {
        nodes.push_back(k);
        mass += p[k] * p.dx();
      }
    if (!(mass > 0.0)) continue;
    char name[32];
    std::snprintf(name, sizeof name, "fringe_%+03d.dat", r.order);
    std::ofstream out(dir / name, std::ios::binary);
    out << header << "# dx_from_peak normalized_intensity\n";
    for (std::size_t k : nodes) out << fmt(p.x(k) - r.x_peak) << ' ' << fmt(p[k] / mass) << '\n';
  }
}

void write_pattern(const fs::path& path, const std::string& header, const ProbabilityField& p,
                   const ProbabilityField* p0) {
  CsvFile f(path, header, {"x", "p", "p0", "mask"});
  for (std::size_t k = 0; k < p.size(); ++k)
    f.row({fmt(p.x(k)), fmt(p[k]), p0 ? fmt((*p0)[k]) : fmt(kNaN), p.masked(k) ? "1" : "0"});
}

json base_summary(const config::RunConfig& cfg, const std::string& command) {
  return {{"tool", "thetaskew"},
          {"version", kToolVersion},
          {"command", command},
          {"config_hash", cfg.hash()},
          {"fixtures_version", fixtures::kVersion},
          {"modules", kModuleVersions},
          {"mode", config::to_string(cfg.mode)},
          {"theta", cfg.deformation.theta()},
          {"re_kappa", cfg.deformation.re_kappa()},
          {"seed", cfg.seed}};
}

double l2_unmasked(const SignedField& f, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (!f.masked(k) && f.x(k) >= lo && f.x(k) <= hi) acc += f.values[k] * f.values[k] * f.dx;
  return std::sqrt(acc);
}

}  // namespace

std::string file_header(const std::string& config_hash) {
  return std::string("# thetaskew ") + kToolVersion + "\n# config_hash=" + config_hash +
         "\n# fixtures_version=" + std::to_string(fixtures::kVersion) + "\n# modules=" +
         kModuleVersions + "\n";
}

Scene build_scene(const config::RunConfig& cfg, const DeformationParams& params, double imbalance) {
  const auto& m = cfg.model;
  const auto g = cfg.grid.grid();
  const double a1 = m.amplitude_mean * (1.0 + imbalance);
  const double a2 = m.amplitude_mean * (1.0 - imbalance);
  const double rk = params.re_kappa();

  std::vector<double> r1(g.size), r2(g.size), s1(g.size), s2(g.size);
  std::optional<WaveField> evolved;
  std::vector<solver::NormSample> trace;
  double linearity = 0.0;

  if (cfg.mode == config::Mode::analytic_two_packet) {
    for (std::size_t k = 0; k < g.size; ++k) {
      const double x = g.x(k);
      double e1 = 1.0, e2 = 1.0;
      if (m.envelope == config::Envelope::gaussian) {
        const double u1 = (x - m.center1) / m.width1, u2 = (x - m.center2) / m.width2;
        e1 = std::exp(-0.25 * u1 * u1);
        e2 = std::exp(-0.25 * u2 * u2);
      }
      r1[k] = a1 * e1;
      r2[k] = a2 * e2;
      s1[k] = rk * (m.momentum1 * x + m.offset1);
      s2[k] = rk * (m.momentum2 * x + m.offset2);
    }
  } else {
    auto sc = solver_config(cfg);
    try {
      sc.validate(g.size, params);
    } catch (const InvalidArgument& e) {
      throw ConfigError("solver", 0, e.what());
    }
    const auto p1 = gaussian_packet(cfg.grid, a1, m.center1, m.width1, m.momentum1, m.offset1);
    const auto p2 = gaussian_packet(cfg.grid, a2, m.center2, m.width2, m.momentum2, m.offset2);
    std::vector<cplx> sum(g.size);
    for (std::size_t k = 0; k < g.size; ++k) sum[k] = p1[k] + p2[k];

    auto quiet = sc;
    quiet.trace_r2 = false;
    quiet.trace_stride = 0;
    const auto e1 = solver::evolve(p1, quiet, params).final_field;
    const auto e2 = solver::evolve(p2, quiet, params).final_field;
    auto es = solver::evolve(WaveField(sum, g.x0, g.dx), sc, params);
    trace = std::move(es.norm_trace);
    double err = 0.0, scale = es.final_field.max_abs();
    for (std::size_t k = 0; k < g.size; ++k)
      err = std::max(err, std::abs(es.final_field[k] - (e1[k] + e2[k])));
    linearity = scale > 0.0 ? err / scale : err;
    evolved = es.final_field;

    const auto d1 = decompose(e1, params, argmax_abs(e1));
    const auto d2 = decompose(e2, params, argmax_abs(e2));
    r1 = d1.amplitude;
    r2 = d2.amplitude;
    s1 = d1.action;
    s2 = d2.action;
  }

  twopath::TwoPacketModel model(std::move(r1), std::move(r2), std::move(s1), std::move(s2), g.x0, g.dx);
  auto [lo, hi] = overlap_region(model.r1(), model.r2(), g);
  const double margin = detector_margin(cfg);
  lo = std::max(lo, g.x0 + margin);
  hi = std::min(hi, g.x_max() - margin);
  if (cfg.analysis.region_lo) lo = std::max(lo, *cfg.analysis.region_lo);
  if (cfg.analysis.region_hi) hi = std::min(hi, *cfg.analysis.region_hi);
  if (!(hi > lo)) throw NoFringe("empty analysis region after detector margins");

  Scene scene{std::move(model), g.nearest(0.5 * (lo + hi)), lo, hi, std::move(trace), linearity,
              std::move(evolved)};
  return scene;
}

std::vector<twopath::FringeLocation> model_fringes(const Scene& scene,
                                                   const DeformationParams& params,
                                                   const config::AnalysisSpec& spec) {
  twopath::FringeOptions fo;
  fo.sigma_max = spec.sigma_max;
  auto all = twopath::fringe_locations(scene.model, params, scene.region_lo, scene.region_hi, fo);
  double widest = 0.0;
  for (const auto& f : all) widest = std::max(widest, std::min(f.x_center - f.x_lo, f.x_hi - f.x_center));
  std::vector<twopath::FringeLocation> out;
  for (const auto& f : all)
    if (std::min(f.x_center - f.x_lo, f.x_hi - f.x_center) >= 0.5 * widest) out.push_back(f);
  if (out.empty()) throw NoFringe("no complete fringe window inside the analysis region");
  return out;
}

double registration_shift(const ProbabilityField& p,
                          const std::vector<twopath::FringeLocation>& fringes) {
  std::vector<double> shifts;
  for (const auto& f : fringes) {
    if (!(std::abs(f.slope) > 0.0)) continue;
    const double half = std::numbers::pi / std::abs(f.slope);
    const double lo = std::max(p.x0(), f.x_center - half);
    const double hi = std::min(p.x(p.size() - 1), f.x_center + half);
    std::size_t best = p.size();
    double best_v = -1.0;
    for (std::size_t k = p.grid().nearest(lo); k < p.size() && p.x(k) <= hi; ++k) {
      // Five-point running mean suppresses single-bin counting noise.
      double acc = 0.0;
      int used = 0;
      for (int j = -2; j <= 2; ++j) {
        const auto i = static_cast<std::ptrdiff_t>(k) + j;
        if (i < 0 || i >= static_cast<std::ptrdiff_t>(p.size())) continue;
        acc += p[static_cast<std::size_t>(i)];
        ++used;
      }
      const double v = acc / used;
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    if (best < p.size()) shifts.push_back(p.x(best) - f.x_center);
  }
  if (shifts.empty()) return 0.0;
  std::sort(shifts.begin(), shifts.end());
  const std::size_t n = shifts.size();
  return n % 2 ? shifts[n / 2] : 0.5 * (shifts[n / 2 - 1] + shifts[n / 2]);
}

std::vector<FringeRecord> analyze_once(const ProbabilityField& p, const Scene& scene,
                                       const std::vector<twopath::FringeLocation>& fringes,
                                       const config::AnalysisSpec& spec, double shift) {
  const auto options = spec.options();
  std::vector<analysis::WindowHint> hints;
  if (spec.windows == config::WindowSource::model) {
    for (const auto& f : fringes)
      hints.push_back({f.order, f.x_center + shift, std::min(f.x_center - f.x_lo, f.x_hi - f.x_center)});
  } else {
    const auto peaks = analysis::find_peaks(p, options.min_prominence);
    for (const auto& f : fringes) {
      const double c = f.x_center + shift;
      const double tol = 0.5 * std::numbers::pi / std::max(std::abs(f.slope), 1e-300);
      const analysis::Peak* best = nullptr;
      for (const auto& pk : peaks)
        if (std::abs(pk.x_peak - c) < tol && (!best || std::abs(pk.x_peak - c) < std::abs(best->x_peak - c)))
          best = &pk;
      if (best) hints.push_back({f.order, best->x_peak, best->window.half_width()});
    }
  }
  auto records = analysis::analyze_windows(p, hints, options);
  for (auto& r : records) r.imbalance_r = local_imbalance(scene.model, r.x_peak);
  return records;
}

Measurement measure(const config::RunConfig& cfg, const Scene& scene,
                    const DeformationParams& params, const noise::NoiseConfig& ncfg,
                    long long realizations) {
  const bool active = noise_active(ncfg);
  const long long n = active ? realizations : 1;
  const auto fringes = model_fringes(scene, params, cfg.analysis);

  std::vector<std::vector<FringeRecord>> per(static_cast<std::size_t>(n));
  std::optional<ProbabilityField> first;
  std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    try {
      auto p = noise::realization(scene.model, params, ncfg, scene.anchor, static_cast<std::uint64_t>(i));
      const double shift = active ? registration_shift(p, fringes) : 0.0;
      per[static_cast<std::size_t>(i)] = analyze_once(p, scene, fringes, cfg.analysis, shift);
      if (i == 0) first.emplace(std::move(p));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error("realization failed: " + e);

  Measurement out{*first, {}, {}, n};
  if (n == 1) {
    out.records = per[0];
    for (const auto& r : out.records)
      if (r.usable) out.samples[r.order].push_back(r.skewness);
    return out;
  }

  struct Acc {
    FringeRecord sum;
    std::vector<double> s;
  };
  std::map<int, Acc> acc;
  for (const auto& recs : per)
    for (const auto& r : recs) {
      auto [it, inserted] = acc.try_emplace(r.order);
      auto& a = it->second;
      if (inserted) {
        a.sum.order = r.order;
        a.sum.imbalance_r = 0.0;
      }
      if (!r.usable) continue;
      a.s.push_back(r.skewness);
      a.sum.x_peak += r.x_peak;
      a.sum.window.lo += r.window.lo;
      a.sum.window.hi += r.window.hi;
      a.sum.mu2 += r.mu2;
      a.sum.mu3 += r.mu3;
      for (int j = 0; j < 4; ++j) a.sum.poly_fit[static_cast<std::size_t>(j)] += r.poly_fit[static_cast<std::size_t>(j)];
      a.sum.imbalance_r += r.imbalance_r;
      a.sum.mask_fraction += r.mask_fraction;
    }
  for (auto& [order, a] : acc) {
    FringeRecord r = a.sum;
    const auto m = static_cast<double>(a.s.size());
    if (a.s.size() < 2) {
      r.x_peak = r.mu2 = r.mu3 = r.skewness = r.skewness_err = kNaN;
      r.usable = false;
      out.records.push_back(r);
      continue;
    }
    double mean = 0.0;
    for (double v : a.s) mean += v;
    mean /= m;
    double var = 0.0;
    for (double v : a.s) var += (v - mean) * (v - mean);
    var /= (m - 1.0);
    r.x_peak /= m;
    r.window.lo /= m;
    r.window.hi /= m;
    r.mu2 /= m;
    r.mu3 /= m;
    for (auto& c : r.poly_fit) c /= m;
    r.imbalance_r /= m;
    r.mask_fraction /= m;
    r.skewness = mean;
    r.skewness_err = std::sqrt(var / m);
    r.usable = m >= 0.9 * static_cast<double>(n);
    out.records.push_back(r);
    out.samples[order] = std::move(a.s);
  }
  return out;
}

std::string convention(const config::RunConfig& cfg) {
  const auto& a = cfg.analysis;
  return std::string("windows=") + (a.windows == config::WindowSource::model ? "model" : "peaks") +
         ";sigma_max=" + fmt(a.sigma_max) + ";center=" + analysis::to_string(a.center) +
         ";linear_background=" + (a.linear_background ? "true" : "false") +
         ";psf_sigma=" + fmt(cfg.noise.psf_sigma) + ";symmetric";
}

analysis::CalibrationTable calibrate(const config::RunConfig& cfg, double imbalance) {
  const auto params = cfg.deformation.with_theta(cfg.theta_cal);
  const auto scene = build_scene(cfg, params, imbalance);
  noise::NoiseConfig clean;
  clean.psf_sigma = cfg.noise.psf_sigma;
  clean.seed = cfg.noise.seed;
  const auto meas = measure(cfg, scene, params, clean, 1);
  std::vector<analysis::CalibrationTable::Entry> entries;
  for (const auto& r : meas.records) {
    if (!r.usable || !std::isfinite(r.imbalance_r) || std::abs(r.imbalance_r) < 1e-12) continue;
    entries.push_back({r.order, std::abs(r.imbalance_r),
                       r.skewness / (cfg.theta_cal * std::abs(r.imbalance_r))});
  }
  return analysis::CalibrationTable(cfg.theta_cal, convention(cfg), std::move(entries));
}

SimulateResult simulate(const config::RunConfig& cfg) {
  const auto& params = cfg.deformation;
  auto scene = build_scene(cfg, params, cfg.model.imbalance);
  auto meas = measure(cfg, scene, params, cfg.noise, cfg.realizations);
  SimulateResult res{std::move(scene), std::move(meas), {}, {}, {}, {}, {}};
  const Scene& sc = res.scene;

  try {
    res.calibration = calibrate(cfg, cfg.model.imbalance);
    res.estimate = analysis::estimate_theta(res.measurement.records, res.calibration);
  } catch (const Error& e) {
    res.estimate_error = e.what();
  }

  // Invariant checks on the noiseless pattern of the same scene.
  const auto fringes = model_fringes(sc, params, cfg.analysis);
  const auto exact = twopath::exact_probability(sc.model, params, sc.anchor);
  double pmin = exact[0];
  for (double v : exact.values()) pmin = std::min(pmin, v);
  res.checks.push_back({"positivity_min_p", pmin, 0.0, pmin >= 0.0});

  const auto base = analyze_once(exact, sc, fringes, cfg.analysis, 0.0);
  auto max_skew_change = [&](const std::vector<FringeRecord>& other) {
    double d = 0.0;
    for (std::size_t i = 0; i < base.size() && i < other.size(); ++i)
      if (base[i].usable && other[i].usable) d = std::max(d, std::abs(base[i].skewness - other[i].skewness));
    return d;
  };
  {
    const double d = max_skew_change(analyze_once(exact.scaled(7.0), sc, fringes, cfg.analysis, 0.0));
    res.checks.push_back({"scale_invariance_skewness", d, 1e-10, d <= 1e-10});
  }
  {
    UnwrapOptions uo;
    uo.anchor_phase = twopath::model_anchor_phase(sc.model, params, sc.anchor) + 2.0 * std::numbers::pi;
    const auto shifted = deformed_probability(twopath::build_field(sc.model, params), params, sc.anchor, uo);
    const double d = max_skew_change(analyze_once(shifted, sc, fringes, cfg.analysis, 0.0));
    res.checks.push_back({"anchor_covariance_skewness", d, 1e-10, d <= 1e-10});
  }
  {
    double worst = 0.0;
    try {
      const auto p0 = twopath::baseline_p0(sc.model, params);
      const auto a = analysis::find_peaks(exact, cfg.analysis.min_prominence);
      const auto b = analysis::find_peaks(p0, cfg.analysis.min_prominence);
      for (const auto& f : fringes) {
        const double period = 2.0 * std::numbers::pi / std::abs(f.slope);
        auto nearest = [&](const std::vector<analysis::Peak>& v) {
          double best = kNaN;
          for (const auto& pk : v)
            if (!(std::abs(pk.x_peak - f.x_center) >= std::abs(best - f.x_center))) best = pk.x_peak;
          return best;
        };
        const double xa = nearest(a), xb = nearest(b);
        // A fringe whose maximum is missing from either pattern has no shift to measure.
        if (!(std::abs(xa - f.x_center) < 0.5 * period && std::abs(xb - f.x_center) < 0.5 * period)) continue;
        worst = std::max(worst, std::abs(xa - xb) / period);
      }
    } catch (const Error&) {
      worst = kNaN;
    }
    res.checks.push_back({"peak_shift_fringe_spacings", worst, 1e-3, worst < 1e-3});
  }
  if (sc.evolved) {
    res.checks.push_back({"solver_linearity", sc.linearity_error, 1e-12, sc.linearity_error <= 1e-12});
    const auto direct = deformed_probability(*sc.evolved, params, sc.anchor,
                                             {1e-14, twopath::model_anchor_phase(sc.model, params, sc.anchor)});
    double d = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < exact.size(); ++k)
      if (exact.x(k) >= sc.region_lo && exact.x(k) <= sc.region_hi) {
        d = std::max(d, std::abs(direct[k] - exact[k]));
        scale = std::max(scale, exact[k]);
      }
    const double rel = scale > 0.0 ? d / scale : d;
    res.checks.push_back({"evolved_vs_model_pattern", rel, 1e-10, rel <= 1e-10});

    auto one = solver_config(cfg);
    one.n_steps = 1;
    one.trace_r2 = false;
    const auto next = solver::evolve(*sc.evolved, one, params).final_field;
    solver::ResidualOptions ro;
    ro.mass = cfg.solver->mass;
    ro.potential = one.potential;
    ro.anchor_index = sc.anchor;
    ro.zero_rel = 1e-3;
    res.continuity = solver::continuity_residual(*sc.evolved, next, cfg.solver->dt, ro, params);
  }
  return res;
}

void write_simulate(const SimulateResult& res, const config::RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const auto header = file_header(cfg.hash());
  const auto& sc = res.scene;
  const auto p0 = twopath::baseline_p0(sc.model, cfg.deformation);
  write_pattern(out / "pattern.csv", header, res.measurement.pattern, &p0);
  write_records(out / "fringes.csv", header, res.measurement.records);
  write_profiles(out / "fringes", header, res.measurement.pattern, res.measurement.records);
  {
    CsvFile f(out / "calibration.csv", header + "# theta_cal=" + fmt(res.calibration.theta_cal()) +
                                           "\n# convention=" + res.calibration.convention() + "\n",
              {"order", "r", "k"});
    for (const auto& e : res.calibration.entries()) f.row({std::to_string(e.order), fmt(e.r), fmt(e.k)});
  }
  {
    CsvFile f(out / "estimate.csv", header,
              {"theta_hat", "std_error", "n_fringes", "calibration_K", "residual_chi2", "error"});
    if (res.estimate)
      f.row({fmt(res.estimate->theta_hat), fmt(res.estimate->std_error),
             std::to_string(res.estimate->n_fringes), fmt(res.estimate->calibration_K),
             fmt(res.estimate->residual_chi2), ""});
    else
      f.row({fmt(kNaN), fmt(kNaN), "0", fmt(kNaN), fmt(kNaN), res.estimate_error});
  }
  if (!sc.norm_trace.empty()) {
    CsvFile f(out / "norm_trace.csv", header, {"t", "norm_psi", "norm_r2"});
    for (const auto& s : sc.norm_trace) f.row({fmt(s.t), fmt(s.norm_psi), fmt(s.norm_r2)});
  }

  json j = base_summary(cfg, "simulate");
  j["realizations"] = res.measurement.realizations;
  j["region"] = {sc.region_lo, sc.region_hi};
  std::size_t usable = 0;
  json recs = json::array();
  for (const auto& r : res.measurement.records) {
    usable += r.usable ? 1 : 0;
    recs.push_back(record_json(r));
  }
  j["fringes"] = {{"total", res.measurement.records.size()}, {"usable", usable}, {"records", recs}};
  j["calibration"] = {{"theta_cal", res.calibration.theta_cal()},
                      {"convention", res.calibration.convention()},
                      {"entries", res.calibration.entries().size()}};
  if (res.estimate)
    j["estimate"] = {{"theta_hat", res.estimate->theta_hat},
                     {"std_error", res.estimate->std_error},
                     {"n_fringes", res.estimate->n_fringes},
                     {"calibration_K", res.estimate->calibration_K},
                     {"residual_chi2", res.estimate->residual_chi2}};
  else
    j["estimate"] = {{"error", res.estimate_error}};
  json checks = json::array();
  bool all = true;
  for (const auto& c : res.checks) {
    checks.push_back({{"name", c.name}, {"value", finite_or_null(c.value)}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    all = all && c.pass;
  }
  j["checks"] = checks;
  j["checks_pass"] = all;
  if (res.continuity) {
    const auto& c = *res.continuity;
    std::vector<double> diff(c.residual.values.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = c.residual.values[k] - c.diffusion.values[k];
    SignedField d{diff, c.residual.mask, c.residual.x0, c.residual.dx};
    j["continuity"] = {
        {"residual_l2", l2_unmasked(c.residual, sc.region_lo, sc.region_hi)},
        {"diffusion_term_l2", l2_unmasked(c.diffusion, sc.region_lo, sc.region_hi)},
        {"residual_minus_diffusion_l2", l2_unmasked(d, sc.region_lo, sc.region_hi)},
        {"note",
         "with complex kappa the continuity residual tracks -(2 Im kappa/m) R R'' instead of "
         "vanishing; probability conservation without that term is not reproduced"}};
  }
  write_json(out / "summary.json", j);
}

SweepFit fit_scaling(const std::vector<double>& t, const std::vector<double>& s, int order) {
  SweepFit fit;
  fit.order = order;
  fit.points = t.size();
  if (t.size() < 2) throw Underdetermined("scaling fit needs at least two sweep points");
  double mt = 0.0, ms = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    ms += s[i];
  }
  mt /= static_cast<double>(t.size());
  ms /= static_cast<double>(t.size());
  double stt = 0.0, sts = 0.0, sss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sts += (t[i] - mt) * (s[i] - ms);
    sss += (s[i] - ms) * (s[i] - ms);
  }
  if (!(stt > 0.0)) {
    if (mt != 0.0) throw Degenerate("scaling fit: every theta r is identical");
    // A null sweep: only the magnitude of S is reported.
    fit.k = fit.intercept = fit.r2 = fit.max_rel_dev = kNaN;
    for (double v : s) fit.max_null_abs = std::max(fit.max_null_abs, std::abs(v));
    return fit;
  }
  fit.k = sts / stt;
  fit.intercept = ms - fit.k * mt;
  double ssr = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = s[i] - fit.intercept - fit.k * t[i];
    ssr += e * e;
  }
  fit.r2 = sss > 0.0 ? 1.0 - ssr / sss : 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 0.0)
      fit.max_null_abs = std::max(fit.max_null_abs, std::abs(s[i]));
    else
      fit.max_rel_dev = std::max(fit.max_rel_dev, std::abs(s[i] / t[i] - fit.k) / std::abs(fit.k));
  }
  return fit;
}

SweepResult sweep(const config::RunConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep", 0, "sweep needs a [sweep] section with theta and imbalance lists");
  const auto& sw = *cfg.sweep;
  std::vector<std::pair<double, double>> points;
  for (double th : sw.theta)
    for (double r : sw.imbalance) points.emplace_back(th, r);

  std::vector<std::vector<FringeRecord>> per(points.size());
  std::vector<std::string> errors(points.size());
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const auto [th, r] = points[static_cast<std::size_t>(i)];
      const auto params = cfg.deformation.with_theta(th);
      const auto scene = build_scene(cfg, params, r);
      auto ncfg = cfg.noise;
      ncfg.seed = rng::stream_seed(cfg.seed, rng::Domain::misc, static_cast<std::uint64_t>(i));
      per[static_cast<std::size_t>(i)] = measure(cfg, scene, params, ncfg, cfg.realizations).records;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error("sweep point " + std::to_string(i) + ": " + errors[i]);

  SweepResult res;
  std::vector<double> t, s;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (const auto& r : per[i]) {
      res.rows.push_back({i, points[i].first, points[i].second, r});
      if (r.order == sw.order && r.usable) {
        t.push_back(points[i].first * points[i].second);
        s.push_back(r.skewness);
      }
    }
  if (t.size() != points.size())
    throw Error("sweep: fringe order " + std::to_string(sw.order) + " is not usable at every point");
  res.fit = fit_scaling(t, s, sw.order);
  return res;
}

void write_sweep(const SweepResult& res, const config::RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const auto header = file_header(cfg.hash());
  {
    CsvFile f(out / "sweep.csv", header,
              {"point", "theta", "imbalance", "order", "x_peak", "skewness", "skewness_err",
               "imbalance_r", "usable"});
    for (const auto& row : res.rows)
      f.row({std::to_string(row.point), fmt(row.theta), fmt(row.imbalance), std::to_string(row.record.order),
             fmt(row.record.x_peak), fmt(row.record.skewness), fmt(row.record.skewness_err),
             fmt(row.record.imbalance_r), row.record.usable ? "1" : "0"});
  }
  {
    CsvFile f(out / "sweep_fit.csv", header,
              {"order", "k", "intercept", "r2", "max_rel_dev", "max_null_abs", "points"});
    const auto& ft = res.fit;
    f.row({std::to_string(ft.order), fmt(ft.k), fmt(ft.intercept), fmt(ft.r2), fmt(ft.max_rel_dev),
           fmt(ft.max_null_abs), std::to_string(ft.points)});
  }
  // One fringe table per sweep point.
  fs::create_directories(out / "points");
  for (std::size_t i = 0, first = 0; first < res.rows.size(); ++i) {
    std::vector<FringeRecord> recs;
    std::size_t last = first;
    for (; last < res.rows.size() && res.rows[last].point == res.rows[first].point; ++last)
      recs.push_back(res.rows[last].record);
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu.csv", res.rows[first].point);
    write_records(out / "points" / name, header, recs);
    first = last;
  }
  json j = base_summary(cfg, "sweep");
  j["fit"] = {{"order", res.fit.order},       {"k", finite_or_null(res.fit.k)},
              {"intercept", finite_or_null(res.fit.intercept)}, {"r2", finite_or_null(res.fit.r2)},
              {"max_rel_dev", finite_or_null(res.fit.max_rel_dev)}, {"max_null_abs", res.fit.max_null_abs},
              {"points", res.fit.points}};
  auto check = [](const char* name, double v, double tol, bool pass) {
    return json{{"name", name}, {"value", finite_or_null(v)}, {"tolerance", tol}, {"pass", pass}};
  };
  j["checks"] = json::array();
  if (std::isfinite(res.fit.k)) {
    j["checks"].push_back(check("scaling_r2", res.fit.r2, 0.999, res.fit.r2 > 0.999));
    j["checks"].push_back(check("scaling_max_rel_dev", res.fit.max_rel_dev, 0.02, res.fit.max_rel_dev < 0.02));
  }
  j["checks"].push_back(check("null_max_abs_skewness", res.fit.max_null_abs, 1e-10, res.fit.max_null_abs < 1e-10));
  write_json(out / "summary.json", j);
}

NullResult null_test(const config::RunConfig& cfg) {
  if (cfg.realizations < 100)
    throw ConfigError("noise.realizations", 0, "null-test needs at least 100 realizations");
  const auto& params = cfg.deformation;
  const auto scene = build_scene(cfg, params, cfg.model.imbalance);
  const auto meas = measure(cfg, scene, params, cfg.noise, cfg.realizations);
  NullResult res;
  res.realizations = meas.realizations;
  for (const auto& [order, samples] : meas.samples) {
    if (samples.size() < 100) continue;
    const auto t = analysis::skewness_null_test(samples);
    res.rows.push_back({order, t, std::abs(t.z_score) < 3.0});
  }
  if (res.rows.empty()) throw TooFewSamples("null-test: no fringe has 100 usable samples");
  return res;
}

void write_null_test(const NullResult& res, const config::RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const auto header = file_header(cfg.hash());
  CsvFile f(out / "null_test.csv", header, {"order", "n", "mean", "std", "z", "pass"});
  json rows = json::array();
  bool all = true;
  for (const auto& r : res.rows) {
    f.row({std::to_string(r.order), std::to_string(r.result.n), fmt(r.result.mean), fmt(r.result.std),
           fmt(r.result.z_score), r.pass ? "1" : "0"});
    rows.push_back({{"order", r.order}, {"mean", r.result.mean}, {"std", r.result.std},
                    {"z", r.result.z_score}, {"pass", r.pass}});
    all = all && r.pass;
  }
  json j = base_summary(cfg, "null-test");
  j["realizations"] = res.realizations;
  j["fringes"] = rows;
  j["checks_pass"] = all;
  write_json(out / "summary.json", j);
}

ProbabilityField read_pattern(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read pattern file " + path.string());
  std::string line;
  int col_x = -1, col_p = -1;
  std::vector<double> xs, ps;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty() && item.back() == '\r') item.pop_back();
      if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = item.substr(1, item.size() - 2);
      out.push_back(item);
    }
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto cells = split(line);
    if (col_x < 0) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "x") col_x = static_cast<int>(i);
        if (cells[i] == "p") col_p = static_cast<int>(i);
      }
      if (col_x < 0 || col_p < 0) throw InvalidArgument("pattern file needs columns x and p");
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max(col_x, col_p));
    if (cells.size() <= need) throw InvalidArgument("short row in pattern file: " + line);
    xs.push_back(std::stod(cells[static_cast<std::size_t>(col_x)]));
    ps.push_back(std::stod(cells[static_cast<std::size_t>(col_p)]));
  }
  if (xs.size() < WaveField::kMinSamples) throw InvalidArgument("pattern file has fewer than 8 rows");
  const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  for (std::size_t k = 0; k < xs.size(); ++k)
    if (std::abs(xs[k] - (xs.front() + static_cast<double>(k) * dx)) > 1e-9 * std::abs(dx))
      throw InvalidArgument("pattern file grid is not uniform at row " + std::to_string(k));
  return ProbabilityField(std::move(ps), xs.front(), dx);
}

std::vector<FringeRecord> analyze_file(const ProbabilityField& p, const config::AnalysisSpec& spec) {
  return analysis::analyze_pattern(p, spec.options());
}

void write_analysis(const std::vector<FringeRecord>& records, const ProbabilityField& p,
                    const std::string& config_hash, const fs::path& out) {
  fs::create_directories(out);
  const auto header = file_header(config_hash);
  write_records(out / "fringes.csv", header, records);
  write_profiles(out / "fringes", header, p, records);
  json j = {{"tool", "thetaskew"},          {"version", kToolVersion},
            {"command", "analyze"},          {"config_hash", config_hash},
            {"fixtures_version", fixtures::kVersion}, {"modules", kModuleVersions}};
  json recs = json::array();
  std::size_t usable = 0;
  for (const auto& r : records) {
    recs.push_back(record_json(r));
    usable += r.usable ? 1 : 0;
  }
  j["fringes"] = {{"total", records.size()}, {"usable", usable}, {"records", recs}};
  write_json(out / "summary.json", j);
}

}  // namespace thetaskew::pipeline
