#include "thetaskew/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>

#include "thetaskew/errors.hpp"

namespace thetaskew::analysis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// P at arbitrary x by linear interpolation between nodes.
double interp(const ProbabilityField& p, double x) {
  const double u = (x - p.x0()) / p.dx();
  const auto n = static_cast<std::ptrdiff_t>(p.size());
  auto i = static_cast<std::ptrdiff_t>(std::floor(u));
  i = std::clamp<std::ptrdiff_t>(i, 0, n - 2);
  const double t = u - static_cast<double>(i);
  return (1.0 - t) * p[static_cast<std::size_t>(i)] + t * p[static_cast<std::size_t>(i + 1)];
}

bool inside_grid(const ProbabilityField& p, const Window& w) {
  const double tol = 1e-9 * p.dx();
  return w.lo >= p.x0() - tol && w.hi <= p.x(p.size() - 1) + tol && w.hi > w.lo;
}

// Node range [first, last] strictly inside (lo, hi).
std::pair<std::size_t, std::size_t> inner_nodes(const ProbabilityField& p, double lo, double hi) {
  const double tol = 1e-12 * p.dx();
  auto first = static_cast<std::ptrdiff_t>(std::floor((lo - p.x0()) / p.dx())) + 1;
  auto last = static_cast<std::ptrdiff_t>(std::ceil((hi - p.x0()) / p.dx())) - 1;
  first = std::max<std::ptrdiff_t>(first, 0);
  last = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(p.size()) - 1);
  // A node that coincides with an edge is represented by the edge itself.
  if (first <= last && std::abs(p.x(static_cast<std::size_t>(first)) - lo) <= tol) ++first;
  if (first <= last && std::abs(p.x(static_cast<std::size_t>(last)) - hi) <= tol) --last;
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last + 1)};
}

template <class ValueAt>
Moments moments_impl(const ProbabilityField& p, double center, const Window& w, ValueAt value) {
  if (!inside_grid(p, w)) throw EmptyWindow("local_moments: window outside the grid");
  std::vector<double> xs, ps;
  xs.push_back(w.lo);
  ps.push_back(value(w.lo, std::nullopt));
  const auto [first, end] = inner_nodes(p, w.lo, w.hi);
  for (std::size_t k = first; k < end; ++k) {
    xs.push_back(p.x(k));
    ps.push_back(value(p.x(k), k));
  }
  xs.push_back(w.hi);
  ps.push_back(value(w.hi, std::nullopt));

  double m[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
    const double h = xs[j + 1] - xs[j];
    const double da = xs[j] - center, db = xs[j + 1] - center;
    double fa = ps[j], fb = ps[j + 1];
    for (int q = 0; q < 4; ++q) {
      m[q] += 0.5 * h * (fa + fb);
      fa *= da;
      fb *= db;
    }
  }
  if (!(m[0] > 0.0)) throw EmptyWindow("local_moments: no mass in window");
  Moments out;
  out.mass = m[0];
  out.mean = m[1] / m[0];
  out.mu2 = m[2] / m[0];
  out.mu3 = m[3] / m[0];
  out.skewness = out.mu2 > 0.0 ? out.mu3 / std::pow(out.mu2, 1.5) : kNaN;
  return out;
}

struct PolyFit {
  Eigen::VectorXd b;  // coefficients in u = (x - center) / h
  double condition = 0.0;
  std::size_t samples = 0;
};

PolyFit fit_scaled(const ProbabilityField& p, double center, double h, int degree) {
  const auto [first, end] = inner_nodes(p, center - h, center + h);
  std::vector<std::size_t> nodes;
  for (std::size_t k = first; k < end; ++k) nodes.push_back(k);
  // Include nodes lying exactly on the edges.
  const std::size_t lo_node = p.grid().nearest(center - h), hi_node = p.grid().nearest(center + h);
  if (std::abs(p.x(lo_node) - (center - h)) <= 1e-12 * p.dx() &&
      (nodes.empty() || lo_node < nodes.front()))
    nodes.insert(nodes.begin(), lo_node);
  if (std::abs(p.x(hi_node) - (center + h)) <= 1e-12 * p.dx() &&
      (nodes.empty() || hi_node > nodes.back()))
    nodes.push_back(hi_node);

  PolyFit out;
  out.samples = nodes.size();
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  if (nodes.size() < static_cast<std::size_t>(cols)) return out;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(nodes.size()), cols);
  Eigen::VectorXd y(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double u = (p.x(nodes[i]) - center) / h;
    double pw = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      a(static_cast<Eigen::Index>(i), j) = pw;
      pw *= u;
    }
    y(static_cast<Eigen::Index>(i)) = p[nodes[i]];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  const double ratio = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
  out.condition = ratio * ratio;
  out.b = a.colPivHouseholderQr().solve(y);
  return out;
}

double refine_parabola(const ProbabilityField& p, std::size_t i) {
  if (i == 0 || i + 1 >= p.size()) return p.x(i);
  const double ym = p[i - 1], y0 = p[i], yp = p[i + 1];
  const double denom = ym - 2.0 * y0 + yp;
  if (!(denom < 0.0)) return p.x(i);
  const double off = 0.5 * (ym - yp) / denom;
  return p.x(i) + std::clamp(off, -0.5, 0.5) * p.dx();
}

std::size_t argmax_in(const ProbabilityField& p, double lo, double hi) {
  const std::size_t a = p.grid().nearest(lo), b = p.grid().nearest(hi);
  std::size_t best = a;
  for (std::size_t k = a; k <= b; ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

}  // namespace

std::vector<Peak> find_peaks(const ProbabilityField& p, double min_prominence) {
  const std::size_t n = p.size();
  double pmax = 0.0;
  for (double v : p.values()) pmax = std::max(pmax, v);
  const double threshold = min_prominence * pmax;

  struct Candidate {
    std::size_t index;
    std::size_t left_limit, right_limit;  // extent of the prominence bases
    double prominence;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 1; i + 1 < n;) {
    if (!(p[i] > p[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && p[j + 1] == p[i]) ++j;
    if (j + 1 >= n || !(p[j + 1] < p[i])) {
      i = j + 1;
      continue;
    }
    const std::size_t peak = (i + j) / 2;
    std::size_t l = i;
    double lmin = p[i];
    while (l > 0 && !(p[l - 1] > p[peak])) lmin = std::min(lmin, p[--l]);
    std::size_t r = j;
    double rmin = p[j];
    while (r + 1 < n && !(p[r + 1] > p[peak])) rmin = std::min(rmin, p[++r]);
    const double prom = p[peak] - std::max(lmin, rmin);
    if (prom >= threshold && prom > 0.0) cands.push_back({peak, l, r, prom});
    i = j + 1;
  }
  if (cands.empty()) throw NoPeaks("find_peaks: no peak above the prominence threshold");

  std::vector<Peak> out;
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const auto& cd = cands[c];
    const std::size_t lo_end = c > 0 ? std::max(cands[c - 1].index, cd.left_limit) : cd.left_limit;
    const std::size_t hi_end =
        c + 1 < cands.size() ? std::min(cands[c + 1].index, cd.right_limit) : cd.right_limit;
    std::size_t lmin = cd.index, rmin = cd.index;
    for (std::size_t k = lo_end; k < cd.index; ++k)
      if (p[k] < p[lmin] || lmin == cd.index) lmin = k;
    for (std::size_t k = cd.index + 1; k <= hi_end; ++k)
      if (p[k] < p[rmin] || rmin == cd.index) rmin = k;
    Peak pk;
    pk.index = cd.index;
    pk.prominence = cd.prominence;
    pk.x_peak = refine_parabola(p, cd.index);
    const double half = std::min(pk.x_peak - p.x(lmin), p.x(rmin) - pk.x_peak);
    if (!(half > 0.0)) continue;
    pk.window = {pk.x_peak - half, pk.x_peak + half};
    out.push_back(pk);
  }
  if (out.empty()) throw NoPeaks("find_peaks: no peak with a usable window");
  return out;
}

Moments local_moments(const ProbabilityField& p, double center, const Window& window) {
  return moments_impl(p, center, window, [&](double x, std::optional<std::size_t> k) {
    return k ? p[*k] : interp(p, x);
  });
}

Moments local_moments_linear_background(const ProbabilityField& p, double center,
                                        const Window& window) {
  if (!inside_grid(p, window)) throw EmptyWindow("local_moments: window outside the grid");
  const double pl = interp(p, window.lo), ph = interp(p, window.hi);
  const double slope = (ph - pl) / (window.hi - window.lo);
  return moments_impl(p, center, window, [&](double x, std::optional<std::size_t> k) {
    const double v = k ? p[*k] : interp(p, x);
    return v - (pl + slope * (x - window.lo));
  });
}

CubicFit fit_local_cubic(const ProbabilityField& p, double center, double halfwidth) {
  if (!(halfwidth > 0.0)) throw InvalidArgument("fit_local_cubic: halfwidth must be > 0");
  const auto fit = fit_scaled(p, center, halfwidth, 3);
  if (fit.samples < 12)
    throw TooFewSamples("fit_local_cubic: needs >= 12 samples, got " +
                        std::to_string(fit.samples));
  if (!(fit.condition <= 1e10))
    throw IllConditioned("fit_local_cubic: condition number " + std::to_string(fit.condition));
  CubicFit out;
  out.condition = fit.condition;
  out.samples = fit.samples;
  double scale = 1.0;
  for (int j = 0; j < 4; ++j) {
    out.a[static_cast<std::size_t>(j)] = fit.b(j) / scale;
    scale *= halfwidth;
  }
  return out;
}

CenterMethod parse_center_method(const std::string& name) {
  if (name == "peak") return CenterMethod::peak;
  if (name == "lsq") return CenterMethod::lsq;
  if (name == "centroid") return CenterMethod::centroid;
  throw InvalidArgument("unknown center method '" + name + "' (peak, lsq, centroid)");
}

std::string to_string(CenterMethod m) {
  switch (m) {
    case CenterMethod::peak: return "peak";
    case CenterMethod::lsq: return "lsq";
    case CenterMethod::centroid: return "centroid";
  }
  return "peak";
}

double lsq_center(const ProbabilityField& p, double guess, double half_width) {
  // Quartic on a node set symmetric about the nearest node, so even residuals cannot
  // leak into the odd coefficients; the center is the stationary point near that node.
  const double h = 0.5 * half_width;
  const auto m = static_cast<std::ptrdiff_t>(std::floor(h / p.dx() + 1e-9));
  const auto n = static_cast<std::ptrdiff_t>(p.size());
  if (m < 3) return guess;
  const double scale = static_cast<double>(m) * p.dx();
  auto k0 = static_cast<std::ptrdiff_t>(p.grid().nearest(guess));
  double c = guess;
  for (int it = 0; it < 10; ++it) {
    if (k0 - m < 0 || k0 + m >= n) return guess;
    Eigen::MatrixXd a(2 * m + 1, 5);
    Eigen::VectorXd y(2 * m + 1);
    for (std::ptrdiff_t j = -m; j <= m; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(m);
      double pw = 1.0;
      for (int q = 0; q < 5; ++q, pw *= u) a(j + m, q) = pw;
      y(j + m) = p[static_cast<std::size_t>(k0 + j)];
    }
    const Eigen::VectorXd b = a.colPivHouseholderQr().solve(y);
    if (!(b(2) < 0.0)) return guess;
    double u = -b(1) / (2.0 * b(2));
    for (int newton = 0; newton < 20; ++newton) {
      const double d1 = b(1) + 2 * b(2) * u + 3 * b(3) * u * u + 4 * b(4) * u * u * u;
      const double d2 = 2 * b(2) + 6 * b(3) * u + 12 * b(4) * u * u;
      if (!(d2 < 0.0)) break;
      const double step = d1 / d2;
      u -= step;
      if (std::abs(step) < 1e-15) break;
    }
    if (!(std::abs(u) < 1.0)) return guess;
    c = p.x(static_cast<std::size_t>(k0)) + u * scale;
    const auto k1 = static_cast<std::ptrdiff_t>(p.grid().nearest(c));
    if (k1 == k0) break;
    k0 = k1;
  }
  return c;
}

std::vector<FringeRecord> analyze_windows(const ProbabilityField& p,
                                          const std::vector<WindowHint>& hints,
                                          const AnalysisOptions& options) {
  std::vector<FringeRecord> out(hints.size());
  const auto n = static_cast<std::int64_t>(hints.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& hint = hints[static_cast<std::size_t>(i)];
    auto& rec = out[static_cast<std::size_t>(i)];
    rec.order = hint.order;
    const double h = hint.half_width;
    rec.mu2 = rec.mu3 = rec.skewness = kNaN;
    rec.poly_fit.fill(kNaN);
    const Window search{std::max(p.x0(), hint.x_center - 0.5 * h),
                        std::min(p.x(p.size() - 1), hint.x_center + 0.5 * h)};
    if (!(h > 0.0) || !(search.hi > search.lo)) {
      rec.x_peak = hint.x_center;
      rec.window = {hint.x_center - h, hint.x_center + h};
      continue;
    }
    double c = refine_parabola(p, argmax_in(p, search.lo, search.hi));
    if (options.center == CenterMethod::lsq) {
      c = lsq_center(p, c, h);
    } else if (options.center == CenterMethod::centroid) {
      for (int it = 0; it < 50; ++it) {
        const Window w{c - h, c + h};
        if (!inside_grid(p, w)) break;
        const double shift = local_moments(p, c, w).mean;
        c += shift;
        if (std::abs(shift) < 1e-12 * p.dx()) break;
      }
    }
    rec.x_peak = c;
    rec.window = {c - h, c + h};
    if (!inside_grid(p, rec.window)) continue;

    const auto [first, end] = inner_nodes(p, rec.window.lo, rec.window.hi);
    std::size_t masked = 0;
    for (std::size_t k = first; k < end; ++k) masked += p.masked(k) ? 1 : 0;
    rec.mask_fraction = end > first ? static_cast<double>(masked) / static_cast<double>(end - first) : 1.0;
    try {
      const auto m = options.linear_background
                         ? local_moments_linear_background(p, c, rec.window)
                         : local_moments(p, c, rec.window);
      rec.mu2 = m.mu2;
      rec.mu3 = m.mu3;
      rec.skewness = m.skewness;
    } catch (const EmptyWindow&) {
      continue;
    }
    try {
      rec.poly_fit = fit_local_cubic(p, c, options.fit_halfwidth * h).a;
    } catch (const Error&) {
      // Fit failures leave NaN coefficients; the moments are still valid.
    }
    rec.usable = rec.mask_fraction < 0.1 && rec.mu2 > 0.0 && std::isfinite(rec.skewness);
  }
  return out;
}

std::vector<FringeRecord> analyze_pattern(const ProbabilityField& p,
                                          const AnalysisOptions& options) {
  const auto peaks = find_peaks(p, options.min_prominence);
  std::size_t top = 0;
  for (std::size_t i = 1; i < peaks.size(); ++i)
    if (p[peaks[i].index] > p[peaks[top].index]) top = i;
  std::vector<WindowHint> hints;
  for (std::size_t i = 0; i < peaks.size(); ++i)
    hints.push_back({static_cast<int>(i) - static_cast<int>(top), peaks[i].x_peak,
                     peaks[i].window.half_width()});
  return analyze_windows(p, hints, options);
}

CalibrationTable::CalibrationTable(double theta_cal, std::string convention,
                                   std::vector<Entry> entries)
    : theta_cal_(theta_cal), convention_(std::move(convention)), entries_(std::move(entries)) {
  if (!(theta_cal != 0.0) || !std::isfinite(theta_cal))
    throw InvalidArgument("CalibrationTable: theta_cal must be nonzero");
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.order != b.order ? a.order < b.order : a.r < b.r;
  });
}

double CalibrationTable::k(int order, double r) const {
  const double ar = std::abs(r);
  std::vector<Entry> same;
  for (const auto& e : entries_)
    if (e.order == order && std::isfinite(e.k)) same.push_back(e);
  if (same.empty())
    throw Underdetermined("calibration has no entry for fringe order " + std::to_string(order));
  for (const auto& e : same)
    if (std::abs(std::abs(e.r) - ar) <= 1e-12) return e.k;
  if (same.size() == 1) return same.front().k;
  std::sort(same.begin(), same.end(),
            [](const Entry& a, const Entry& b) { return std::abs(a.r) < std::abs(b.r); });
  if (ar <= std::abs(same.front().r)) return same.front().k;
  if (ar >= std::abs(same.back().r)) return same.back().k;
  for (std::size_t i = 0; i + 1 < same.size(); ++i) {
    const double r0 = std::abs(same[i].r), r1 = std::abs(same[i + 1].r);
    if (ar >= r0 && ar <= r1) {
      const double t = (ar - r0) / (r1 - r0);
      return (1.0 - t) * same[i].k + t * same[i + 1].k;
    }
  }
  return same.back().k;
}

double CalibrationTable::mean_k() const {
  double s = 0.0;
  std::size_t c = 0;
  for (const auto& e : entries_)
    if (std::isfinite(e.k)) {
      s += e.k;
      ++c;
    }
  return c ? s / static_cast<double>(c) : kNaN;
}

ThetaEstimate estimate_theta(const std::vector<FringeRecord>& records,
                             const CalibrationTable& calibration) {
  std::vector<const FringeRecord*> used;
  bool weighted = true;
  bool any_r = false;
  for (const auto& rec : records) {
    if (!rec.usable || !std::isfinite(rec.imbalance_r) || !std::isfinite(rec.skewness)) continue;
    if (std::abs(rec.imbalance_r) > 1e-12) any_r = true;
    if (!(rec.skewness_err > 0.0)) weighted = false;
    used.push_back(&rec);
  }
  if (used.empty()) throw Underdetermined("estimate_theta: no usable records with known r");
  if (!any_r) throw Degenerate("estimate_theta: all imbalances are zero; skewness vanishes");
  if (calibration.empty()) throw Underdetermined("estimate_theta: calibration table is empty");

  struct Row {
    double x, s, w, k;
  };
  std::vector<Row> rows;
  for (const auto* rec : used) {
    const double k = calibration.k(rec->order, rec->imbalance_r);
    const double w = weighted ? 1.0 / (rec->skewness_err * rec->skewness_err) : 1.0;
    rows.push_back({k * rec->imbalance_r, rec->skewness, w, k});
  }
  double sxx = 0.0, sxy = 0.0, ksum = 0.0;
  for (const auto& r : rows) {
    sxx += r.w * r.x * r.x;
    sxy += r.w * r.x * r.s;
    ksum += r.k;
  }
  if (!(sxx > 0.0)) throw Degenerate("estimate_theta: no leverage (all K r = 0)");
  ThetaEstimate est;
  est.theta_hat = sxy / sxx;
  for (const auto& r : rows) {
    const double res = r.s - est.theta_hat * r.x;
    est.residual_chi2 += r.w * res * res;
  }
  est.n_fringes = static_cast<int>(rows.size());
  est.calibration_K = ksum / static_cast<double>(rows.size());
  const double dof = static_cast<double>(rows.size()) - 1.0;
  double se = 0.0;
  if (weighted) {
    se = std::sqrt(1.0 / sxx);
    if (dof > 0.0) se *= std::max(1.0, std::sqrt(est.residual_chi2 / dof));
  } else if (dof > 0.0) {
    se = std::sqrt(est.residual_chi2 / dof / sxx);
  }
  // Noiseless fits can have a zero residual; the floor keeps the error positive.
  est.std_error = std::max(se, 1e-12);
  return est;
}

NullTestResult skewness_null_test(const std::vector<double>& samples) {
  if (samples.size() < 100)
    throw TooFewSamples("skewness_null_test: needs >= 100 samples, got " +
                        std::to_string(samples.size()));
  NullTestResult out;
  out.n = samples.size();
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  out.mean = mean;
  out.std = std::max(std::sqrt(ss / (n - 1.0)), 1e-30);
  out.z_score = mean / (out.std / std::sqrt(n));
  return out;
}

}  // namespace thetaskew::analysis
