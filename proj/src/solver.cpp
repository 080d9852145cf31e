#include "thetaskew/solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "thetaskew/errors.hpp"
#include "thetaskew/kernels.hpp"

namespace thetaskew::solver {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftBuffer {
 public:
  explicit FftBuffer(std::size_t n) : n_(n) {
    data_ = fftw_alloc_complex(n);
    if (!data_) throw Error("fftw_alloc_complex failed");
    std::lock_guard lock(planner_mutex());
    const int ni = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(ni, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(ni, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftBuffer() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(data_);
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  std::span<cplx> span() noexcept { return {reinterpret_cast<cplx*>(data_), n_}; }
  void forward() { fftw_execute(forward_); }
  // Unnormalized; the caller folds 1/n into its multiplier.
  void backward() { fftw_execute(backward_); }

 private:
  std::size_t n_;
  fftw_complex* data_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

std::size_t argmax_abs(std::span<const cplx> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (std::abs(v[k]) > std::abs(v[best])) best = k;
  return best;
}

double norm_r2(std::span<const cplx> psi, double x0, double dx, std::size_t anchor,
               double anchor_phase, const DeformationParams& params) {
  const WaveField f(std::vector<cplx>(psi.begin(), psi.end()), x0, dx);
  UnwrapOptions opts;
  opts.anchor_phase = anchor_phase;
  const auto p = deformed_probability(f, params, anchor, opts);
  double s = 0.0;
  for (double v : p.values()) s += v;
  return s * dx;
}

}  // namespace

void SolverConfig::validate(std::size_t grid_size, const DeformationParams& params) const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("solver: mass must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("solver: dt must be > 0");
  if (n_steps < 1) throw InvalidArgument("solver: n_steps must be >= 1");
  if (trace_stride < 0) throw InvalidArgument("solver: trace_stride must be >= 0");
  if (!potential.empty() && potential.size() != grid_size)
    throw InvalidArgument("solver: potential must match the grid size");
  double vmax = 0.0;
  for (double v : potential) {
    if (!std::isfinite(v)) throw InvalidArgument("solver: non-finite potential");
    vmax = std::max(vmax, std::abs(v));
  }
  if (dt * vmax / params.re_kappa() >= 0.1)
    throw InvalidArgument("solver: dt * max|V| / re_kappa must be < 0.1, got " +
                          std::to_string(dt * vmax / params.re_kappa()));
  if (boundary.kind == BoundaryKind::absorbing_ramp) {
    if (!(boundary.width > 0.0) || !(boundary.strength >= 0.0))
      throw InvalidArgument("solver: absorbing ramp needs width > 0 and strength >= 0");
  }
}

std::vector<double> wavenumbers(std::size_t n, double dx) {
  std::vector<double> k(n);
  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<long long>(j);
    const long long folded = j <= n / 2 ? jj : jj - static_cast<long long>(n);
    k[j] = base * static_cast<double>(folded);
  }
  return k;
}

EvolutionReport evolve(const WaveField& initial, const SolverConfig& cfg,
                       const DeformationParams& params) {
  const std::size_t n = initial.size();
  cfg.validate(n, params);
  const std::size_t np = next_pow2(n);
  const double dx = initial.dx();
  const cplx kappa = params.kappa();
  const cplx i{0.0, 1.0};

  // Half-step potential factor, with the absorbing ramp folded in as damping.
  std::vector<cplx> half_v(np, cplx{1.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    const double v = cfg.potential.empty() ? 0.0 : cfg.potential[k];
    double damp = 0.0;
    if (cfg.boundary.kind == BoundaryKind::absorbing_ramp) {
      const double x = initial.x(k);
      const double depth = std::max(initial.x0() + cfg.boundary.width - x,
                                    x - (initial.x(n - 1) - cfg.boundary.width));
      if (depth > 0.0) {
        const double s = std::min(1.0, depth / cfg.boundary.width);
        damp = cfg.boundary.strength * s * s;
      }
    }
    half_v[k] = std::exp(-i * v * cfg.dt / (2.0 * kappa) - damp * cfg.dt / 2.0);
  }
  const auto kk = wavenumbers(np, dx);
  std::vector<cplx> kinetic(np);
  const double inv_n = 1.0 / static_cast<double>(np);
  for (std::size_t j = 0; j < np; ++j)
    kinetic[j] = inv_n * std::exp(-i * kappa * kk[j] * kk[j] * cfg.dt / (2.0 * cfg.mass));

  FftBuffer buf(np);
  auto psi = buf.span();
  std::fill(psi.begin(), psi.end(), cplx{});
  std::copy(initial.samples().begin(), initial.samples().end(), psi.begin());

  const double guard = kOverflowGuard * initial.max_abs();
  const std::size_t anchor = argmax_abs(initial.samples());
  double anchor_phase = std::arg(initial[anchor]);
  cplx anchor_prev = initial[anchor];

  EvolutionReport report{initial, {}};
  auto record = [&](long long step) {
    NormSample s;
    s.t = static_cast<double>(step) * cfg.dt;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += std::norm(psi[k]);
    s.norm_psi = acc * dx;
    s.norm_r2 = std::numeric_limits<double>::quiet_NaN();
    if (cfg.trace_r2 && std::abs(psi[anchor]) > 0.0)
      s.norm_r2 = norm_r2(psi.first(n), initial.x0(), dx, anchor, anchor_phase, params);
    report.norm_trace.push_back(s);
  };
  record(0);

  for (long long step = 1; step <= cfg.n_steps; ++step) {
    kernels::multiply_inplace(psi, half_v);
    buf.forward();
    kernels::multiply_inplace(psi, kinetic);
    buf.backward();
    kernels::multiply_inplace(psi, half_v);

    if (max_abs(psi) > guard || !std::isfinite(std::abs(psi[anchor])))
      throw Instability("solver: field exceeded the overflow guard at step " +
                        std::to_string(step) + "; band-limit the initial data or reduce theta");
    // Follow the anchor phase every step so the R^2 trace stays on one branch.
    anchor_phase += std::arg(psi[anchor] * std::conj(anchor_prev));
    anchor_prev = psi[anchor];
    const bool last = step == cfg.n_steps;
    if (last || (cfg.trace_stride > 0 && step % cfg.trace_stride == 0)) record(step);
  }

  report.final_field =
      WaveField(std::vector<cplx>(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(n)),
                initial.x0(), dx);
  return report;
}

cplx eigen_time_dependence(cplx energy, double t, const DeformationParams& params) {
  return std::exp(cplx{0.0, -1.0} * energy * t / params.kappa());
}

namespace {

struct Snapshot {
  std::vector<double> r, s;
  Mask mask;
};

// Both snapshots decomposed on one branch, continuous in time at the anchor.
std::pair<Snapshot, Snapshot> decompose_pair(const WaveField& a, const WaveField& b,
                                             const ResidualOptions& options,
                                             const DeformationParams& params) {
  if (a.size() != b.size() || a.dx() != b.dx() || a.x0() != b.x0())
    throw InvalidArgument("residual: snapshots must share one grid");
  const std::size_t anchor = options.anchor_index;
  if (anchor >= a.size()) throw InvalidArgument("residual: anchor index out of range");
  const auto pa = decompose(a, params, anchor);
  UnwrapOptions ob;
  ob.anchor_phase = pa.action[anchor] / (params.re_kappa() * (1.0 + params.theta() * params.theta())) +
                    std::arg(b[anchor] * std::conj(a[anchor]));
  const auto pb = decompose(b, params, anchor, ob);

  auto to_snapshot = [&](const PhaseAmplitudeField& pf) {
    Snapshot s{pf.amplitude, pf.action, pf.mask};
    double rmax = 0.0;
    for (double v : s.r) rmax = std::max(rmax, v);
    for (std::size_t k = 0; k < s.r.size(); ++k)
      if (s.r[k] < options.zero_rel * rmax) s.mask[k] = 1;
    return s;
  };
  return {to_snapshot(pa), to_snapshot(pb)};
}

double d1(const std::vector<double>& f, std::size_t k, double dx) {
  return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * dx);
}

double d2(const std::vector<double>& f, std::size_t k, double dx) {
  return (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]) /
         (12.0 * dx * dx);
}

bool stencil_masked(const Snapshot& a, const Snapshot& b, std::size_t k) {
  for (std::size_t j = k - 2; j <= k + 2; ++j)
    if (a.mask[j] || b.mask[j]) return true;
  return false;
}

}  // namespace

ContinuityResidual continuity_residual(const WaveField& field_t, const WaveField& field_t_plus,
                                       double dt, const ResidualOptions& options,
                                       const DeformationParams& params) {
  if (!(dt > 0.0)) throw InvalidArgument("continuity_residual: dt must be > 0");
  if (!(options.mass > 0.0)) throw InvalidArgument("continuity_residual: mass must be > 0");
  const auto [a, b] = decompose_pair(field_t, field_t_plus, options, params);
  const std::size_t n = field_t.size();
  const double dx = field_t.dx();
  const double m = options.mass;

  ContinuityResidual out;
  for (SignedField* f : {&out.residual, &out.diffusion}) {
    f->values.assign(n, 0.0);
    f->mask.assign(n, 1);
    f->x0 = field_t.x0();
    f->dx = dx;
  }
  std::vector<double> rho_a(n), rho_b(n);
  for (std::size_t k = 0; k < n; ++k) {
    rho_a[k] = a.r[k] * a.r[k];
    rho_b[k] = b.r[k] * b.r[k];
  }
  auto flux_div = [&](const std::vector<double>& rho, const Snapshot& s, std::size_t k) {
    return (d1(rho, k, dx) * d1(s.s, k, dx) + rho[k] * d2(s.s, k, dx)) / m;
  };
  auto diffusion = [&](const Snapshot& s, std::size_t k) {
    return -2.0 * params.im_kappa() / m * s.r[k] * d2(s.r, k, dx);
  };
  for (std::size_t k = 2; k + 2 < n; ++k) {
    if (stencil_masked(a, b, k)) continue;
    const double drho = (rho_b[k] - rho_a[k]) / dt;
    out.residual.values[k] = drho + 0.5 * (flux_div(rho_a, a, k) + flux_div(rho_b, b, k));
    out.diffusion.values[k] = 0.5 * (diffusion(a, k) + diffusion(b, k));
    out.residual.mask[k] = out.diffusion.mask[k] = 0;
  }
  return out;
}

HjResidual hj_residual(const WaveField& field_t, const WaveField& field_t_plus, double dt,
                       const ResidualOptions& options, const DeformationParams& params) {
  if (!(dt > 0.0)) throw InvalidArgument("hj_residual: dt must be > 0");
  if (!(options.mass > 0.0)) throw InvalidArgument("hj_residual: mass must be > 0");
  const std::size_t n = field_t.size();
  if (!options.potential.empty() && options.potential.size() != n)
    throw InvalidArgument("hj_residual: potential must match the grid size");
  const auto [a, b] = decompose_pair(field_t, field_t_plus, options, params);
  const double dx = field_t.dx();
  const double m = options.mass;
  const cplx kappa2 = params.kappa() * params.kappa();

  auto spatial = [&](const Snapshot& s, std::size_t k) -> cplx {
    const double sp = d1(s.s, k, dx);
    const double v = options.potential.empty() ? 0.0 : options.potential[k];
    const cplx q = -kappa2 * d2(s.r, k, dx) / (2.0 * m * s.r[k]);
    return sp * sp / (2.0 * m) + v + q;
  };
  HjResidual out;
  double re2 = 0.0, im2 = 0.0;
  for (std::size_t k = 2; k + 2 < n; ++k) {
    if (stencil_masked(a, b, k)) continue;
    const cplx res = (b.s[k] - a.s[k]) / dt + 0.5 * (spatial(a, k) + spatial(b, k));
    re2 += res.real() * res.real();
    im2 += res.imag() * res.imag();
    ++out.evaluated;
  }
  out.real_l2 = std::sqrt(re2 * dx);
  out.imag_l2 = std::sqrt(im2 * dx);
  return out;
}

}  // namespace thetaskew::solver
