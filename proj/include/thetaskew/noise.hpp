#pragma once

#include <cstdint>
#include <vector>

#include "thetaskew/core.hpp"
#include "thetaskew/twopath.hpp"

namespace thetaskew::noise {

struct NoiseConfig {
  double phase_jitter_sigma = 0.0;  // radians, global phase per shot
  double path_jitter_sigma = 0.0;   // length units, relative path per shot
  double psf_sigma = 0.0;           // length units, detector blur
  long long shots = 1;
  long long events_per_shot = 0;  // 0: no event sampling
  std::uint64_t seed = 0;

  void validate() const;
  bool jitter_free() const noexcept { return phase_jitter_sigma == 0.0 && path_jitter_sigma == 0.0; }
};

/// Mean |dDelta/dx| of the model; converts a path jitter in length units to an
/// action shift of S1.
double fringe_wavenumber(const twopath::TwoPacketModel& model, const DeformationParams& params);

/// Gaussian kernel sampled at the grid spacing, truncated at 6 sigma, unit sum.
/// A zero width gives the identity kernel {1}.
std::vector<double> gaussian_kernel(double sigma, double dx);

ProbabilityField apply_psf(const ProbabilityField& p, double psf_sigma);

/// One jittered deformed pattern (no PSF). Draws come from the stream of `shot_index`.
ProbabilityField jittered_pattern(const twopath::TwoPacketModel& model,
                                  const DeformationParams& params, const NoiseConfig& cfg,
                                  std::size_t anchor_index, std::uint64_t shot_index);

/// Mean of `cfg.shots` jittered patterns, then the PSF.
ProbabilityField ensemble_pattern(const twopath::TwoPacketModel& model,
                                  const DeformationParams& params, const NoiseConfig& cfg,
                                  std::size_t anchor_index);

/// Multinomial draw of n_events over the bins of P, by sequential binomials.
/// Throws EmptyDistribution when sum P dx is not positive.
std::vector<std::uint64_t> sample_shots(const ProbabilityField& p, std::uint64_t n_events,
                                        std::uint64_t seed);

/// Counts normalized to a density: counts[k] / (n_events dx).
ProbabilityField histogram_to_field(const std::vector<std::uint64_t>& counts, double x0,
                                    double dx);

/// One detector realization: the mean of `shots` jittered patterns (shot indices
/// realization_index * shots + s), the PSF, and event sampling when events_per_shot > 0,
/// all keyed by realization_index. Serial inside.
ProbabilityField realization(const twopath::TwoPacketModel& model, const DeformationParams& params,
                             const NoiseConfig& cfg, std::size_t anchor_index,
                             std::uint64_t realization_index);

}  // namespace thetaskew::noise
