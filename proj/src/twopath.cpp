#include "thetaskew/twopath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "thetaskew/errors.hpp"
#include "thetaskew/kernels.hpp"

namespace thetaskew::twopath {

namespace {

constexpr double kPi = std::numbers::pi;

bool near_tan_pole(double delta, double tol) {
  // Delta/2 near an odd multiple of pi/2.
  const double t = delta / (2.0 * kPi) - 0.5;
  return std::abs(t - std::round(t)) * kPi < tol;
}

SignedField make_signed(const TwoPacketModel& model) {
  SignedField f;
  f.values.assign(model.size(), 0.0);
  f.mask.assign(model.size(), 0);
  f.x0 = model.x0();
  f.dx = model.dx();
  return f;
}

}  // namespace

TwoPacketModel::TwoPacketModel(std::vector<double> r1, std::vector<double> r2,
                               std::vector<double> s1, std::vector<double> s2, double x0,
                               double dx)
    : r1_(std::move(r1)), r2_(std::move(r2)), s1_(std::move(s1)), s2_(std::move(s2)), x0_(x0),
      dx_(dx) {
  const std::size_t n = r1_.size();
  if (r2_.size() != n || s1_.size() != n || s2_.size() != n)
    throw InvalidArgument("TwoPacketModel: R1, R2, S1, S2 must share one grid");
  if (n < WaveField::kMinSamples)
    throw InvalidArgument("TwoPacketModel: needs at least 8 grid points");
  if (!(dx_ > 0.0) || !std::isfinite(dx_) || !std::isfinite(x0_))
    throw InvalidArgument("TwoPacketModel: invalid grid");
  for (std::size_t k = 0; k < n; ++k) {
    if (!(r1_[k] >= 0.0) || !(r2_[k] >= 0.0) || !std::isfinite(r1_[k]) || !std::isfinite(r2_[k]))
      throw InvalidArgument("TwoPacketModel: envelopes must be finite and >= 0 (index " +
                            std::to_string(k) + ")");
    if (!std::isfinite(s1_[k]) || !std::isfinite(s2_[k]))
      throw InvalidArgument("TwoPacketModel: non-finite action at index " + std::to_string(k));
  }
}

double TwoPacketModel::imbalance(std::size_t k) const noexcept {
  const double sum = r1_[k] + r2_[k];
  if (!(sum > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (r1_[k] - r2_[k]) / sum;
}

double TwoPacketModel::interpolate(std::span<const double> seq, const Grid& grid, double x) {
  const auto n = static_cast<std::ptrdiff_t>(seq.size());
  const double u = (x - grid.x0) / grid.dx;
  auto i = static_cast<std::ptrdiff_t>(std::floor(u));
  i = std::clamp<std::ptrdiff_t>(i, 1, n - 3);
  const double t = u - static_cast<double>(i);
  const double p0 = seq[i - 1], p1 = seq[i], p2 = seq[i + 1], p3 = seq[i + 2];
  // Lagrange basis on nodes -1, 0, 1, 2.
  const double l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3;
}

TwoPacketModel TwoPacketModel::with_action_offsets(double ds1, double ds2) const {
  auto s1 = s1_;
  auto s2 = s2_;
  for (auto& v : s1) v += ds1;
  for (auto& v : s2) v += ds2;
  return {r1_, r2_, std::move(s1), std::move(s2), x0_, dx_};
}

WaveField build_field(const TwoPacketModel& model, const DeformationParams& params) {
  std::vector<cplx> psi(model.size());
  kernels::two_packet_field(model.r1(), model.r2(), model.s1(), model.s2(), params.kappa(), psi);
  return {std::move(psi), model.x0(), model.dx()};
}

double model_anchor_phase(const TwoPacketModel& model, const DeformationParams& params,
                          std::size_t k) {
  const double th = params.theta();
  const double scale = params.re_kappa() * (1.0 + th * th);
  const double a1 = model.s1()[k] / scale;
  const double a2 = model.s2()[k] / scale;
  const double mean = 0.5 * (a1 + a2);
  const double half = 0.5 * (a1 - a2);
  const cplx w{th, 1.0};
  const cplx chi = model.r1()[k] * std::exp(w * half) + model.r2()[k] * std::exp(-w * half);
  return mean + std::arg(chi);
}

ProbabilityField exact_probability(const TwoPacketModel& model, const DeformationParams& params,
                                   std::size_t anchor_index) {
  const auto field = build_field(model, params);
  UnwrapOptions opts;
  opts.anchor_phase = model_anchor_phase(model, params, anchor_index);
  return deformed_probability(field, params, anchor_index, opts);
}

ProbabilityField baseline_p0(const TwoPacketModel& model, const DeformationParams& params) {
  std::vector<double> p(model.size());
  const double rk = params.re_kappa();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double r1 = model.r1()[k], r2 = model.r2()[k];
    const double delta = model.relative_phase(k, rk);
    // Clamp tiny negative roundoff at perfectly dark points.
    p[k] = std::max(0.0, r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * std::cos(delta));
  }
  return {std::move(p), model.x0(), model.dx()};
}

FirstOrderCorrection delta_p_first_order(const TwoPacketModel& model,
                                         const DeformationParams& params, double tol_pole) {
  FirstOrderCorrection out{make_signed(model), make_signed(model), make_signed(model)};
  const double rk = params.re_kappa();
  const double th = params.theta();
  for (std::size_t k = 0; k < model.size(); ++k) {
    const double r1 = model.r1()[k], r2 = model.r2()[k];
    const double s1 = model.s1()[k], s2 = model.s2()[k];
    const double delta = (s1 - s2) / rk;
    const double p0 = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * std::cos(delta);
    const double linear = 2.0 * th / rk * (r1 * r1 * s1 + r2 * r2 * s2 + r1 * r2 * (s1 + s2) * std::cos(delta));
    out.linear_part.values[k] = linear;
    if (!(r1 + r2 > 0.0) || near_tan_pole(delta, tol_pole)) {
      out.phase_part.mask[k] = out.total.mask[k] = 1;
      continue;
    }
    const double r = (r1 - r2) / (r1 + r2);
    const double arg0 = (s1 + s2) / (2.0 * rk) + std::atan(r * std::tan(0.5 * delta));
    out.phase_part.values[k] = -2.0 * th * p0 * arg0;
    out.total.values[k] = out.phase_part.values[k] + linear;
  }
  return out;
}

SignedField delta_p_closed_form(const TwoPacketModel& model, const DeformationParams& params,
                                double tol_pole) {
  auto out = make_signed(model);
  const double rk = params.re_kappa();
  const double th = params.theta();
  for (std::size_t k = 0; k < model.size(); ++k) {
    const double r1 = model.r1()[k], r2 = model.r2()[k];
    const double delta = model.relative_phase(k, rk);
    if (!(r1 + r2 > 0.0) || near_tan_pole(delta, tol_pole)) {
      out.mask[k] = 1;
      continue;
    }
    const double p0 = r1 * r1 + r2 * r2 + 2.0 * r1 * r2 * std::cos(delta);
    const double r = (r1 - r2) / (r1 + r2);
    out.values[k] =
        th * (r1 * r1 - r2 * r2) * delta - 2.0 * th * p0 * std::atan(r * std::tan(0.5 * delta));
  }
  return out;
}

SmallImbalanceResult delta_p_small_imbalance(const TwoPacketModel& model,
                                             const DeformationParams& params,
                                             BracketConvention bracket) {
  SmallImbalanceResult out{make_signed(model)};
  const double rk = params.re_kappa();
  const double th = params.theta();
  for (std::size_t k = 0; k < model.size(); ++k) {
    const double r0 = 0.5 * (model.r1()[k] + model.r2()[k]);
    const double eps = 0.5 * (model.r1()[k] - model.r2()[k]);
    if (!(r0 > 0.0)) {
      out.field.mask[k] = 1;
      continue;
    }
    out.max_relative_imbalance = std::max(out.max_relative_imbalance, std::abs(eps) / r0);
    const double delta = model.relative_phase(k, rk);
    const double a = bracket == BracketConvention::full_phase ? delta : 0.5 * delta;
    out.field.values[k] = 4.0 * th * r0 * eps * (a - std::sin(a));
  }
  out.large_imbalance = out.max_relative_imbalance >= 0.2;
  return out;
}

double cubic_coefficient(double r1, double r2, double theta) {
  if (!(r1 + r2 > 0.0)) throw Degenerate("cubic_coefficient: R1 + R2 must be positive");
  return 2.0 / 3.0 * theta * r1 * r2 * (r1 - r2) / (r1 + r2);
}

double fringe_offset(int n, double r1, double r2, double theta) noexcept {
  return 2.0 * static_cast<double>(n) * kPi * theta * (r1 * r1 - r2 * r2);
}

namespace {

struct DeltaCurve {
  std::vector<double> delta;
  Grid grid;
  double operator()(double x) const { return TwoPacketModel::interpolate(delta, grid, x); }
  double at(std::size_t k) const { return delta[k]; }
};

// Root of f(x) = curve(x) - level in [a, b], f(a) and f(b) of opposite sign (or zero).
double bisect(const DeltaCurve& curve, double level, double a, double b, double tol) {
  double fa = curve(a) - level;
  if (fa == 0.0) return a;
  double fb = curve(b) - level;
  if (fb == 0.0) return b;
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = curve(m) - level;
    if (fm == 0.0) return m;
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Walk outward from x_c (direction +1 / -1) until |Delta - level| reaches target or the
// region edge is hit. Returns the window edge.
double window_edge(const DeltaCurve& curve, double level, double target, double x_c, int dir,
                   double x_lo, double x_hi, double tol) {
  const double dx = curve.grid.dx;
  double prev = x_c;
  for (;;) {
    double next = prev + dir * dx;
    if (dir > 0 && next >= x_hi) next = x_hi;
    if (dir < 0 && next <= x_lo) next = x_lo;
    const double dev = std::abs(curve(next) - level);
    if (dev >= target) {
      const double side = curve(next) - level > 0.0 ? 1.0 : -1.0;
      const double a = std::min(prev, next), b = std::max(prev, next);
      return bisect(curve, level + side * target, a, b, tol);
    }
    if (next == x_hi || next == x_lo) return next;
    prev = next;
  }
}

}  // namespace

std::vector<FringeLocation> fringe_locations(const TwoPacketModel& model,
                                             const DeformationParams& params, double x_lo,
                                             double x_hi, const FringeOptions& options) {
  const Grid grid = model.grid();
  x_lo = std::max(x_lo, grid.x0);
  x_hi = std::min(x_hi, grid.x_max());
  if (!(x_hi > x_lo)) throw NoFringe("fringe_locations: empty region");

  DeltaCurve curve;
  curve.grid = grid;
  curve.delta.resize(model.size());
  for (std::size_t k = 0; k < model.size(); ++k)
    curve.delta[k] = model.relative_phase(k, params.re_kappa());

  const double tol = options.root_tol_rel * grid.dx;
  const double target = std::min(options.sigma_max, kPi);
  std::vector<FringeLocation> out;

  // Scan sub-intervals of the region aligned to the grid.
  std::vector<double> nodes{x_lo};
  for (std::size_t k = 0; k < grid.size; ++k) {
    const double x = grid.x(k);
    if (x > x_lo && x < x_hi) nodes.push_back(x);
  }
  nodes.push_back(x_hi);

  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i], b = nodes[i + 1];
    const double da = curve(a), db = curve(b);
    const double lo = std::min(da, db), hi = std::max(da, db);
    const int n_first = static_cast<int>(std::ceil(lo / (2.0 * kPi)));
    const int n_last = static_cast<int>(std::floor(hi / (2.0 * kPi)));
    for (int n = n_first; n <= n_last; ++n) {
      const double level = 2.0 * kPi * n;
      // A root sitting exactly on the right node belongs to the next interval.
      if (db == level && i + 2 < nodes.size()) continue;
      FringeLocation loc;
      loc.order = n;
      loc.x_center = bisect(curve, level, a, b, tol);
      const double h = 1e-3 * grid.dx;
      loc.slope = (curve(loc.x_center + h) - curve(loc.x_center - h)) / (2.0 * h);
      loc.x_lo = window_edge(curve, level, target, loc.x_center, -1, x_lo, x_hi, tol);
      loc.x_hi = window_edge(curve, level, target, loc.x_center, +1, x_lo, x_hi, tol);
      out.push_back(loc);
    }
  }
  if (out.empty()) throw NoFringe("fringe_locations: no bright-fringe condition met in region");
  return out;
}

}  // namespace thetaskew::twopath
