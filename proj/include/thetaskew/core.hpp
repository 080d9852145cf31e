#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace thetaskew {

using cplx = std::complex<double>;
using Mask = std::vector<std::uint8_t>;

/// Phase-action scale kappa = re_kappa (1 + i theta).
class DeformationParams {
 public:
  /// Throws InvalidArgument unless re_kappa > 0 and |theta| < 1.
  DeformationParams(double re_kappa, double theta);

  double re_kappa() const noexcept { return re_kappa_; }
  double theta() const noexcept { return theta_; }
  double im_kappa() const noexcept { return re_kappa_ * theta_; }
  cplx kappa() const noexcept { return {re_kappa_, re_kappa_ * theta_}; }

  DeformationParams with_theta(double theta) const { return {re_kappa_, theta}; }

 private:
  double re_kappa_;
  double theta_;
};

/// Uniform 1D grid: x_k = x0 + k dx.
struct Grid {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t size = 0;

  double x(std::size_t k) const noexcept { return x0 + static_cast<double>(k) * dx; }
  double x_max() const noexcept { return x(size - 1); }
  /// Nearest grid index to x, clamped to the grid.
  std::size_t nearest(double xv) const noexcept;
};

/// Complex amplitude psi sampled on a uniform grid.
class WaveField {
 public:
  static constexpr std::size_t kMinSamples = 8;

  WaveField(std::vector<cplx> samples, double x0, double dx);

  std::span<const cplx> samples() const noexcept { return samples_; }
  const cplx& operator[](std::size_t k) const noexcept { return samples_[k]; }
  std::size_t size() const noexcept { return samples_.size(); }
  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t k) const noexcept { return x0_ + static_cast<double>(k) * dx_; }
  Grid grid() const noexcept { return {x0_, dx_, samples_.size()}; }
  double max_abs() const noexcept;

 private:
  std::vector<cplx> samples_;
  double x0_;
  double dx_;
};

/// psi = R exp(i S / kappa). mask[k] != 0 marks nodes where the phase was undefined.
struct PhaseAmplitudeField {
  std::vector<double> amplitude;
  std::vector<double> action;
  Mask mask;
  double x0 = 0.0;
  double dx = 1.0;

  Grid grid() const noexcept { return {x0, dx, amplitude.size()}; }
  void validate() const;
};

/// Nonnegative intensity on a grid. An empty mask means nothing is masked.
class ProbabilityField {
 public:
  ProbabilityField(std::vector<double> values, double x0, double dx, Mask mask = {});

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  std::size_t size() const noexcept { return values_.size(); }
  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t k) const noexcept { return x0_ + static_cast<double>(k) * dx_; }
  Grid grid() const noexcept { return {x0_, dx_, values_.size()}; }
  const Mask& mask() const noexcept { return mask_; }
  bool masked(std::size_t k) const noexcept { return !mask_.empty() && mask_[k] != 0; }

  ProbabilityField scaled(double c) const;

 private:
  std::vector<double> values_;
  double x0_;
  double dx_;
  Mask mask_;
};

/// Signed real field (first-order corrections and the like).
struct SignedField {
  std::vector<double> values;
  Mask mask;
  double x0 = 0.0;
  double dx = 1.0;

  double x(std::size_t k) const noexcept { return x0 + static_cast<double>(k) * dx; }
  bool masked(std::size_t k) const noexcept { return !mask.empty() && mask[k] != 0; }
};

struct UnwrapOptions {
  /// Zero threshold relative to max |psi|.
  double zero_rel = 1e-14;
  /// Phase assigned at the anchor. Defaults to the principal arg; an explicit value
  /// must be congruent to arg psi[anchor] modulo 2 pi.
  std::optional<double> anchor_phase;
};

struct MaskedPhase {
  std::vector<double> phase;
  Mask mask;
};

/// Principal value of an angle, in (-pi, pi].
double wrap_to_pi(double angle) noexcept;

/// Unwrapped phase anchored at anchor_index. Throws ZeroAmplitude at the first
/// node (scanning outward from the anchor) whose amplitude is below threshold.
std::vector<double> unwrap_phase(const WaveField& field, std::size_t anchor_index,
                                 const UnwrapOptions& options = {});

/// Same as unwrap_phase but masks near-zero nodes instead of throwing; increments
/// are taken between consecutive unmasked nodes. Throws ZeroAmplitude only if the
/// anchor itself is a node.
MaskedPhase unwrap_phase_masked(const WaveField& field, std::size_t anchor_index,
                                const UnwrapOptions& options = {});

/// P = |psi|^2 exp(-2 theta phi). Masked nodes receive |psi|^2 and a mask flag.
ProbabilityField deformed_probability(const WaveField& field, const DeformationParams& params,
                                      std::size_t anchor_index, const UnwrapOptions& options = {});

/// S = re_kappa (1 + theta^2) phi, R = |psi| exp(-theta phi).
PhaseAmplitudeField decompose(const WaveField& field, const DeformationParams& params,
                              std::size_t anchor_index, const UnwrapOptions& options = {});

/// psi = R exp(i S / kappa) with complex kappa.
WaveField recompose(const PhaseAmplitudeField& pa, const DeformationParams& params);

}  // namespace thetaskew
