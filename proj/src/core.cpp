#include "thetaskew/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "thetaskew/errors.hpp"
#include "thetaskew/kernels.hpp"

namespace thetaskew {

namespace {

void check_grid(double x0, double dx, std::size_t n, std::size_t min_size, const char* what) {
  if (n < min_size)
    throw InvalidArgument(std::string(what) + ": needs at least " + std::to_string(min_size) +
                          " samples, got " + std::to_string(n));
  if (!(dx > 0.0) || !std::isfinite(dx))
    throw InvalidArgument(std::string(what) + ": grid spacing must be positive and finite");
  if (!std::isfinite(x0)) throw InvalidArgument(std::string(what) + ": x0 must be finite");
}

}  // namespace

DeformationParams::DeformationParams(double re_kappa, double theta)
    : re_kappa_(re_kappa), theta_(theta) {
  if (!(re_kappa > 0.0) || !std::isfinite(re_kappa))
    throw InvalidArgument("re_kappa must be positive and finite");
  if (!std::isfinite(theta) || !(std::abs(theta) < 1.0))
    throw InvalidArgument("theta must satisfy |theta| < 1 (perturbative regime), got " +
                          std::to_string(theta));
}

std::size_t Grid::nearest(double xv) const noexcept {
  const double k = std::round((xv - x0) / dx);
  if (!(k > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(k), size - 1);
}

WaveField::WaveField(std::vector<cplx> samples, double x0, double dx)
    : samples_(std::move(samples)), x0_(x0), dx_(dx) {
  check_grid(x0_, dx_, samples_.size(), kMinSamples, "WaveField");
  for (std::size_t k = 0; k < samples_.size(); ++k)
    if (!std::isfinite(samples_[k].real()) || !std::isfinite(samples_[k].imag()))
      throw InvalidArgument("WaveField: non-finite sample at index " + std::to_string(k));
}

double WaveField::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& s : samples_) m = std::max(m, std::abs(s));
  return m;
}

void PhaseAmplitudeField::validate() const {
  check_grid(x0, dx, amplitude.size(), WaveField::kMinSamples, "PhaseAmplitudeField");
  if (action.size() != amplitude.size())
    throw InvalidArgument("PhaseAmplitudeField: amplitude/action size mismatch");
  if (!mask.empty() && mask.size() != amplitude.size())
    throw InvalidArgument("PhaseAmplitudeField: mask size mismatch");
  for (std::size_t k = 0; k < amplitude.size(); ++k) {
    if (!(amplitude[k] >= 0.0) || !std::isfinite(amplitude[k]))
      throw InvalidArgument("PhaseAmplitudeField: amplitude must be >= 0 at index " +
                            std::to_string(k));
    if (!std::isfinite(action[k]))
      throw InvalidArgument("PhaseAmplitudeField: non-finite action at index " +
                            std::to_string(k));
  }
}

ProbabilityField::ProbabilityField(std::vector<double> values, double x0, double dx, Mask mask)
    : values_(std::move(values)), x0_(x0), dx_(dx), mask_(std::move(mask)) {
  check_grid(x0_, dx_, values_.size(), 3, "ProbabilityField");
  if (!mask_.empty() && mask_.size() != values_.size())
    throw InvalidArgument("ProbabilityField: mask size mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (!(values_[k] >= 0.0) || !std::isfinite(values_[k]))
      throw InvalidArgument("ProbabilityField: value must be finite and >= 0 at index " +
                            std::to_string(k));
}

ProbabilityField ProbabilityField::scaled(double c) const {
  std::vector<double> v(values_.begin(), values_.end());
  for (auto& e : v) e *= c;
  return {std::move(v), x0_, dx_, mask_};
}

double wrap_to_pi(double angle) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, two_pi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

MaskedPhase unwrap_phase_masked(const WaveField& field, std::size_t anchor_index,
                                const UnwrapOptions& options) {
  const std::size_t n = field.size();
  if (anchor_index >= n) throw InvalidArgument("unwrap_phase: anchor index out of range");
  const auto psi = field.samples();
  const double threshold = options.zero_rel * field.max_abs();

  MaskedPhase out;
  out.phase.assign(n, 0.0);
  out.mask.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k)
    if (!(std::abs(psi[k]) >= threshold) || std::abs(psi[k]) == 0.0) out.mask[k] = 1;
  if (out.mask[anchor_index]) throw ZeroAmplitude(anchor_index);

  double anchor = std::arg(psi[anchor_index]);
  if (options.anchor_phase) {
    const double mismatch = wrap_to_pi(*options.anchor_phase - anchor);
    if (std::abs(mismatch) > 1e-6)
      throw InvalidArgument("unwrap_phase: anchor_phase is not congruent to arg psi[anchor]");
    anchor = *options.anchor_phase;
  }
  out.phase[anchor_index] = anchor;

  std::size_t last = anchor_index;
  for (std::size_t k = anchor_index + 1; k < n; ++k) {
    if (out.mask[k]) {
      out.phase[k] = out.phase[last];
      continue;
    }
    out.phase[k] = out.phase[last] + std::arg(psi[k] * std::conj(psi[last]));
    last = k;
  }
  last = anchor_index;
  for (std::size_t k = anchor_index; k-- > 0;) {
    if (out.mask[k]) {
      out.phase[k] = out.phase[last];
      continue;
    }
    out.phase[k] = out.phase[last] + std::arg(psi[k] * std::conj(psi[last]));
    last = k;
  }
  return out;
}

std::vector<double> unwrap_phase(const WaveField& field, std::size_t anchor_index,
                                 const UnwrapOptions& options) {
  auto masked = unwrap_phase_masked(field, anchor_index, options);
  // Report the node closest to the anchor, scanning right then left.
  for (std::size_t k = anchor_index; k < field.size(); ++k)
    if (masked.mask[k]) throw ZeroAmplitude(k);
  for (std::size_t k = anchor_index; k-- > 0;)
    if (masked.mask[k]) throw ZeroAmplitude(k);
  return std::move(masked.phase);
}

ProbabilityField deformed_probability(const WaveField& field, const DeformationParams& params,
                                      std::size_t anchor_index, const UnwrapOptions& options) {
  const auto psi = field.samples();
  std::vector<double> values(field.size());
  if (params.theta() == 0.0) {
    for (std::size_t k = 0; k < psi.size(); ++k) values[k] = std::norm(psi[k]);
    return {std::move(values), field.x0(), field.dx()};
  }
  auto phase = unwrap_phase_masked(field, anchor_index, options);
  kernels::deformed_intensity(psi, phase.phase, params.theta(), values);
  for (std::size_t k = 0; k < psi.size(); ++k)
    if (phase.mask[k]) values[k] = std::norm(psi[k]);
  return {std::move(values), field.x0(), field.dx(), std::move(phase.mask)};
}

PhaseAmplitudeField decompose(const WaveField& field, const DeformationParams& params,
                              std::size_t anchor_index, const UnwrapOptions& options) {
  auto phase = unwrap_phase_masked(field, anchor_index, options);
  const double theta = params.theta();
  const double action_scale = params.re_kappa() * (1.0 + theta * theta);
  PhaseAmplitudeField pa;
  pa.x0 = field.x0();
  pa.dx = field.dx();
  pa.amplitude.resize(field.size());
  pa.action.resize(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    const double phi = phase.phase[k];
    pa.action[k] = action_scale * phi;
    pa.amplitude[k] =
        phase.mask[k] ? std::abs(field[k]) : std::abs(field[k]) * std::exp(-theta * phi);
  }
  pa.mask = std::move(phase.mask);
  return pa;
}

WaveField recompose(const PhaseAmplitudeField& pa, const DeformationParams& params) {
  pa.validate();
  const cplx i_over_kappa = cplx{0.0, 1.0} / params.kappa();
  std::vector<cplx> psi(pa.amplitude.size());
  for (std::size_t k = 0; k < psi.size(); ++k)
    psi[k] = pa.amplitude[k] * std::exp(pa.action[k] * i_over_kappa);
  return {std::move(psi), pa.x0, pa.dx};
}

}  // namespace thetaskew
