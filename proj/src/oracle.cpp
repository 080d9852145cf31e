#include "thetaskew/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thetaskew/errors.hpp"

namespace thetaskew::oracle {

namespace {

constexpr ld kPi = std::numbers::pi_v<long double>;

struct Psi {
  ld re, im;
};

Psi two_path(ld r1, ld r2, ld theta, ld delta) {
  const ld a = delta / (1.0L + theta * theta);
  const ld e = std::exp(theta * a);
  return {r1 * e * std::cos(a) + r2, r1 * e * std::sin(a)};
}

// Neumaier-compensated sum.
class Sum {
 public:
  void add(ld v) {
    const ld t = s_ + v;
    c_ += std::abs(s_) >= std::abs(v) ? (s_ - t) + v : (v - t) + s_;
    s_ = t;
  }
  ld value() const { return s_ + c_; }

 private:
  ld s_ = 0.0L, c_ = 0.0L;
};

struct Stencil {
  std::vector<std::pair<int, ld>> taps;  // (offset in h, weight)
  ld denom;                              // multiplies h^order
  int order;
};

const Stencil& stencil(int order) {
  static const std::array<Stencil, 6> s = {{
      {{{0, 1.0L}}, 1.0L, 0},
      {{{1, 1.0L}, {-1, -1.0L}}, 2.0L, 1},
      {{{1, 1.0L}, {0, -2.0L}, {-1, 1.0L}}, 1.0L, 2},
      {{{2, 1.0L}, {1, -2.0L}, {-1, 2.0L}, {-2, -1.0L}}, 2.0L, 3},
      {{{2, 1.0L}, {1, -4.0L}, {0, 6.0L}, {-1, -4.0L}, {-2, 1.0L}}, 1.0L, 4},
      {{{3, 1.0L}, {2, -4.0L}, {1, 5.0L}, {-1, -5.0L}, {-2, 4.0L}, {-3, -1.0L}}, 2.0L, 5},
  }};
  return s[static_cast<std::size_t>(order)];
}

struct Extrapolated {
  ld value;
  ld error;
};

// Richardson extrapolation of an estimate whose error is a series in h^2.
Extrapolated richardson(const std::function<ld(ld)>& estimate, ld h0, int levels) {
  std::vector<std::vector<ld>> t(static_cast<std::size_t>(levels));
  Extrapolated best{0.0L, INFINITY};
  ld h = h0;
  for (int i = 0; i < levels; ++i, h /= 2.0L) {
    auto& row = t[static_cast<std::size_t>(i)];
    row.push_back(estimate(h));
    ld factor = 4.0L;
    for (int j = 1; j <= i; ++j, factor *= 4.0L) {
      const ld prev = t[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
      row.push_back(row[static_cast<std::size_t>(j - 1)] +
                    (row[static_cast<std::size_t>(j - 1)] - prev) / (factor - 1.0L));
    }
    if (i >= 1) {
      const ld err = std::abs(row.back() - t[static_cast<std::size_t>(i - 1)].back());
      if (err < best.error) best = {row.back(), err};
    }
  }
  return best;
}

Extrapolated derivative(const std::function<ld(ld)>& f, int order, ld h0, int levels) {
  const auto& st = stencil(order);
  if (order == 0) return {f(0.0L), 0.0L};
  return richardson(
      [&](ld h) {
        Sum s;
        for (const auto& [off, w] : st.taps) s.add(w * f(static_cast<ld>(off) * h));
        return s.value() / (st.denom * std::pow(h, static_cast<ld>(order)));
      },
      h0, levels);
}

ld factorial(int n) {
  ld f = 1.0L;
  for (int i = 2; i <= n; ++i) f *= static_cast<ld>(i);
  return f;
}

bool accept(double c, double err) { return err < 1e-6 * std::abs(c) || std::abs(c) < 1e-10; }

}  // namespace

ld baseline(ld r1, ld r2, ld delta) { return r1 * r1 + r2 * r2 + 2.0L * r1 * r2 * std::cos(delta); }

ld closed_form(ld r1, ld r2, ld theta, ld delta) {
  const ld r = (r1 - r2) / (r1 + r2);
  return theta * (r1 * r1 - r2 * r2) * delta -
         2.0L * theta * baseline(r1, r2, delta) * std::atan(r * std::tan(delta / 2.0L));
}

ld exact_intensity(ld r1, ld r2, ld theta, int n, ld sigma) {
  const ld center = 2.0L * kPi * static_cast<ld>(n);
  const Psi p0 = two_path(r1, r2, theta, center);
  const Psi p = two_path(r1, r2, theta, center + sigma);
  const ld arg0 = std::atan2(p0.im, p0.re);
  const ld m = std::round((kPi * static_cast<ld>(n) - arg0) / kPi);
  // arg(p * conj(p0)), the small continuous increment away from the center.
  const ld inc = std::atan2(p.im * p0.re - p.re * p0.im, p.re * p0.re + p.im * p0.im);
  const ld phi = arg0 + m * kPi + inc;
  return (p.re * p.re + p.im * p.im) * std::exp(-2.0L * theta * phi);
}

SeriesResult series_delta_p(double r1, double r2, double theta, int n_fringe) {
  if (!(r1 + r2 > 0.0)) throw Degenerate("series_delta_p: R1 + R2 must be positive");
  const ld center = 2.0L * kPi * static_cast<ld>(n_fringe);
  auto f = [&](ld sigma) {
    return exact_intensity(r1, r2, theta, n_fringe, sigma) - baseline(r1, r2, center + sigma);
  };
  SeriesResult out;
  for (int j = 0; j < 6; ++j) {
    const auto d = derivative(f, j, 0.4L, 9);
    const ld fj = factorial(j);
    out.c[static_cast<std::size_t>(j)] = static_cast<double>(d.value / fj);
    out.err[static_cast<std::size_t>(j)] = static_cast<double>(d.error / fj);
    out.accepted[static_cast<std::size_t>(j)] =
        accept(out.c[static_cast<std::size_t>(j)], out.err[static_cast<std::size_t>(j)]);
  }
  for (int j = 0; j < 4; ++j)
    if (!out.accepted[static_cast<std::size_t>(j)])
      throw PrecisionLoss("series_delta_p: coefficient c" + std::to_string(j) +
                          " did not converge (err " +
                          std::to_string(out.err[static_cast<std::size_t>(j)]) + ")");
  return out;
}

SeriesResult series_delta_p_first_order(double r1, double r2, double theta, int n_fringe) {
  if (!(theta != 0.0)) throw InvalidArgument("series_delta_p_first_order: theta must be nonzero");
  SeriesResult out;
  for (int j = 0; j < 6; ++j) {
    ld worst_series_err = 0.0L;
    auto slope = [&](ld t) {
      const auto plus = series_delta_p(r1, r2, static_cast<double>(t), n_fringe);
      const auto minus = series_delta_p(r1, r2, static_cast<double>(-t), n_fringe);
      const auto jj = static_cast<std::size_t>(j);
      worst_series_err = std::max<ld>(worst_series_err, (plus.err[jj] + minus.err[jj]) / (2.0L * t));
      return (static_cast<ld>(plus.c[jj]) - static_cast<ld>(minus.c[jj])) / (2.0L * t);
    };
    const auto d = richardson(slope, static_cast<ld>(std::abs(theta)), 4);
    const auto jj = static_cast<std::size_t>(j);
    out.c[jj] = static_cast<double>(d.value * theta);
    out.err[jj] = static_cast<double>((d.error + worst_series_err) * std::abs(theta));
    out.accepted[jj] = accept(out.c[jj], out.err[jj]);
  }
  return out;
}

BracketReport adjudicate_small_imbalance() {
  const ld r0 = 1.0L, eps = 0.05L, theta = 0.01L;
  auto bracket = [&](twopath::BracketConvention b, ld e, ld delta) {
    const ld a = b == twopath::BracketConvention::full_phase ? delta : delta / 2.0L;
    return 4.0L * theta * r0 * e * (a - std::sin(a));
  };
  auto rel_err = [&](twopath::BracketConvention b, ld e) {
    ld worst = 0.0L, scale = 0.0L;
    constexpr int kPoints = 2001;
    for (int i = 0; i < kPoints; ++i) {
      const ld delta = -kPi / 2.0L + kPi * static_cast<ld>(i) / (kPoints - 1);
      const ld cf = closed_form(r0 + e, r0 - e, theta, delta);
      worst = std::max(worst, std::abs(bracket(b, e, delta) - cf));
      scale = std::max(scale, std::abs(cf));
    }
    return worst / scale;
  };
  using BC = twopath::BracketConvention;
  BracketReport rep;
  rep.rel_err_full = static_cast<double>(rel_err(BC::full_phase, eps));
  rep.rel_err_full_half = static_cast<double>(rel_err(BC::full_phase, eps / 2.0L));
  rep.rel_err_half = static_cast<double>(rel_err(BC::half_phase, eps));
  rep.rel_err_half_half = static_cast<double>(rel_err(BC::half_phase, eps / 2.0L));
  rep.ratio_full = rep.rel_err_full / rep.rel_err_full_half;
  rep.ratio_half = rep.rel_err_half / rep.rel_err_half_half;
  auto scales = [](double ratio) { return ratio >= 3.5 && ratio <= 4.5; };
  const bool full_ok = scales(rep.ratio_full), half_ok = scales(rep.ratio_half);
  if (!full_ok && !half_ok)
    throw Inconclusive("adjudicate_small_imbalance: neither bracket scales as eps^2");
  if (full_ok && (!half_ok || rep.rel_err_full <= rep.rel_err_half))
    rep.chosen = BC::full_phase;
  else
    rep.chosen = BC::half_phase;
  const BC rejected = rep.chosen == BC::full_phase ? BC::half_phase : BC::full_phase;
  const ld cf1 = closed_form(r0 + eps, r0 - eps, theta, 1.0L);
  rep.rejected_mismatch_at_1 =
      static_cast<double>(std::abs(bracket(rejected, eps, 1.0L) - cf1) / std::abs(cf1));
  const auto d3 = derivative([&](ld d) { return bracket(rep.chosen, eps, d); }, 3, 0.4L, 9);
  rep.cubic_limit = static_cast<double>(d3.value / 6.0L / (theta * r0 * r0 * (eps / r0)));
  return rep;
}

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<ld>& x, std::vector<ld>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0L);
  w.assign(static_cast<std::size_t>(n), 0.0L);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    ld z = std::cos(kPi * (static_cast<ld>(i) + 0.75L) / (static_cast<ld>(n) + 0.5L));
    ld dp = 0.0L;
    for (int it = 0; it < 100; ++it) {
      ld p0 = 1.0L, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const ld p2 = ((2.0L * k - 1.0L) * z * p1 - (k - 1.0L) * p0) / static_cast<ld>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0L;
      dp = static_cast<ld>(n) * (z * p1 - p0) / (z * z - 1.0L);
      const ld dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-19L) break;
    }
    const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(n - 1 - i);
    x[a] = -z;
    x[b] = z;
    w[a] = w[b] = 2.0L / ((1.0L - z * z) * dp * dp);
  }
}

QuadratureMoments gl_moments(const std::function<double(double)>& p, double lo, double hi,
                             double center, int nodes) {
  std::vector<ld> x, w;
  gauss_legendre(nodes, x, w);
  const ld half = (static_cast<ld>(hi) - lo) / 2.0L, mid = (static_cast<ld>(hi) + lo) / 2.0L;
  Sum m[4];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const ld xv = mid + half * x[i];
    const ld d = xv - center;
    const ld f = w[i] * half * static_cast<ld>(p(static_cast<double>(xv)));
    m[0].add(f);
    m[1].add(f * d);
    m[2].add(f * d * d);
    m[3].add(f * d * d * d);
  }
  QuadratureMoments out;
  const ld mu2 = m[2].value() / m[0].value(), mu3 = m[3].value() / m[0].value();
  out.mu2 = static_cast<double>(mu2);
  out.mu3 = static_cast<double>(mu3);
  out.skewness = static_cast<double>(mu3 / std::pow(mu2, 1.5L));
  return out;
}

}  // namespace

QuadratureMoments refined_grid_moments(const std::function<double(double)>& p, double lo,
                                       double hi, double center, int nodes) {
  if (nodes < 2) throw InvalidArgument("refined_grid_moments: needs >= 2 nodes");
  const auto coarse = gl_moments(p, lo, hi, center, nodes);
  auto fine = gl_moments(p, lo, hi, center, 2 * nodes);
  fine.error = std::abs(fine.skewness - coarse.skewness);
  return fine;
}

std::vector<double> chord_unwrap(const std::vector<std::complex<double>>& samples,
                                 std::size_t anchor, int refine) {
  using C = std::complex<ld>;
  const std::size_t n = samples.size();
  if (anchor >= n) throw InvalidArgument("chord_unwrap: anchor out of range");
  std::vector<ld> phase(n, 0.0L);
  phase[anchor] = std::arg(C(samples[anchor]));
  auto sweep = [&](std::size_t from, std::size_t to) {
    const C a(samples[from]), b(samples[to]);
    ld acc = 0.0L;
    C prev = a;
    for (int j = 1; j <= refine; ++j) {
      const C z = a + (b - a) * (static_cast<ld>(j) / refine);
      acc += std::arg(z * std::conj(prev));
      prev = z;
    }
    phase[to] = phase[from] + acc;
  };
  for (std::size_t k = anchor + 1; k < n; ++k) sweep(k - 1, k);
  for (std::size_t k = anchor; k-- > 0;) sweep(k + 1, k);
  return {phase.begin(), phase.end()};
}

Eigenstate discrete_eigenstate(std::size_t n, double dx, const std::vector<double>& v,
                               double mass, std::complex<double> kappa,
                               std::complex<double> target) {
  if (v.size() != n) throw InvalidArgument("discrete_eigenstate: potential size mismatch");
  using C = std::complex<double>;
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(ni, ni);
  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  const C pref = kappa * kappa / (2.0 * mass * static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const long long jj = static_cast<long long>(j) <= static_cast<long long>(n / 2)
                             ? static_cast<long long>(j)
                             : static_cast<long long>(j) - static_cast<long long>(n);
    const double k = base * static_cast<double>(jj);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const double arg = k * dx * (static_cast<double>(a) - static_cast<double>(b));
        h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            pref * k * k * C(std::cos(arg), std::sin(arg));
      }
  }
  for (std::size_t a = 0; a < n; ++a)
    h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += v[a];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) throw Error("discrete_eigenstate: eigensolver failed");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ni; ++i)
    if (std::abs(es.eigenvalues()(i) - target) < std::abs(es.eigenvalues()(best) - target)) best = i;
  Eigen::VectorXcd vec = es.eigenvectors().col(best);
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < ni; ++i)
    if (std::abs(vec(i)) > std::abs(vec(imax))) imax = i;
  const C scale = std::abs(vec(imax)) / vec(imax);
  Eigenstate out;
  out.energy = es.eigenvalues()(best);
  out.state.resize(n);
  for (std::size_t a = 0; a < n; ++a)
    out.state[a] = vec(static_cast<Eigen::Index>(a)) * scale / std::abs(vec(imax));
  return out;
}

}  // namespace thetaskew::oracle
