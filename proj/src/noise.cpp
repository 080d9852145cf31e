#include "thetaskew/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "thetaskew/errors.hpp"
#include "thetaskew/kernels.hpp"
#include "thetaskew/rng.hpp"

namespace thetaskew::noise {

void NoiseConfig::validate() const {
  if (!(phase_jitter_sigma >= 0.0) || !(path_jitter_sigma >= 0.0) || !(psf_sigma >= 0.0))
    throw InvalidArgument("noise: sigmas must be >= 0");
  if (shots < 1) throw InvalidArgument("noise: shots must be >= 1");
  if (events_per_shot < 0) throw InvalidArgument("noise: events_per_shot must be >= 0");
}

double fringe_wavenumber(const twopath::TwoPacketModel& model, const DeformationParams& params) {
  const std::size_t n = model.size();
  const double span = model.dx() * static_cast<double>(n - 1);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k)
    total += std::abs(model.relative_phase(k + 1, params.re_kappa()) -
                      model.relative_phase(k, params.re_kappa()));
  return total / span;
}

std::vector<double> gaussian_kernel(double sigma, double dx) {
  if (!(sigma > 0.0)) return {1.0};
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(6.0 * sigma / dx));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (std::ptrdiff_t j = -half; j <= half; ++j) {
    const double u = static_cast<double>(j) * dx / sigma;
    const double v = std::exp(-0.5 * u * u);
    k[static_cast<std::size_t>(j + half)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

ProbabilityField apply_psf(const ProbabilityField& p, double psf_sigma) {
  if (!(psf_sigma > 0.0)) return p;
  const auto kernel = gaussian_kernel(psf_sigma, p.dx());
  std::vector<double> out(p.size());
  kernels::convolve(p.values(), kernel, out);
  for (auto& v : out) v = std::max(v, 0.0);
  return {std::move(out), p.x0(), p.dx(), p.mask()};
}

ProbabilityField jittered_pattern(const twopath::TwoPacketModel& model,
                                  const DeformationParams& params, const NoiseConfig& cfg,
                                  std::size_t anchor_index, std::uint64_t shot_index) {
  if (cfg.jitter_free()) return twopath::exact_probability(model, params, anchor_index);
  auto eng = rng::make_engine(cfg.seed, rng::Domain::jitter, shot_index);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double phase = cfg.phase_jitter_sigma * gauss(eng);
  const double path = cfg.path_jitter_sigma * gauss(eng);
  const double rk = params.re_kappa();
  const double q = cfg.path_jitter_sigma > 0.0 ? fringe_wavenumber(model, params) : 0.0;
  const auto shifted = model.with_action_offsets(rk * (phase + q * path), rk * phase);
  return twopath::exact_probability(shifted, params, anchor_index);
}

ProbabilityField ensemble_pattern(const twopath::TwoPacketModel& model,
                                  const DeformationParams& params, const NoiseConfig& cfg,
                                  std::size_t anchor_index) {
  cfg.validate();
  const std::size_t n = model.size();
  std::vector<double> acc(n, 0.0);
  const auto shots = static_cast<std::int64_t>(cfg.shots);
  if (cfg.jitter_free()) {
    const auto p = twopath::exact_probability(model, params, anchor_index);
    acc.assign(p.values().begin(), p.values().end());
  } else {
    // Blocks of shots computed in parallel, summed in shot order.
    constexpr std::int64_t kBlock = 64;
    std::vector<std::vector<double>> block(kBlock);
    for (std::int64_t start = 0; start < shots; start += kBlock) {
      const std::int64_t count = std::min(kBlock, shots - start);
#pragma omp parallel for schedule(static)
      for (std::int64_t j = 0; j < count; ++j) {
        const auto p = jittered_pattern(model, params, cfg, anchor_index,
                                        static_cast<std::uint64_t>(start + j));
        block[static_cast<std::size_t>(j)].assign(p.values().begin(), p.values().end());
      }
      for (std::int64_t j = 0; j < count; ++j)
        kernels::accumulate_serial(acc, block[static_cast<std::size_t>(j)]);
    }
    for (auto& v : acc) v /= static_cast<double>(shots);
  }
  return apply_psf(ProbabilityField(std::move(acc), model.x0(), model.dx()), cfg.psf_sigma);
}

std::vector<std::uint64_t> sample_shots(const ProbabilityField& p, std::uint64_t n_events,
                                        std::uint64_t seed) {
  double total = 0.0;
  for (double v : p.values()) total += v;
  if (!(total > 0.0) || !std::isfinite(total))
    throw EmptyDistribution("sample_shots: distribution has no mass");
  std::vector<std::uint64_t> counts(p.size(), 0);
  rng::Engine eng(seed);
  std::uint64_t remaining = n_events;
  double mass_left = total;
  for (std::size_t k = 0; k < p.size() && remaining > 0; ++k) {
    const double pk = p[k];
    if (pk <= 0.0) continue;
    if (k + 1 == p.size() || pk >= mass_left) {
      counts[k] = remaining;
      remaining = 0;
      break;
    }
    std::binomial_distribution<std::uint64_t> draw(remaining, std::min(1.0, pk / mass_left));
    counts[k] = draw(eng);
    remaining -= counts[k];
    mass_left -= pk;
  }
  // Roundoff in mass_left can leave events unassigned; the last positive bin takes them.
  if (remaining > 0) {
    for (std::size_t k = p.size(); k-- > 0;)
      if (p[k] > 0.0) {
        counts[k] += remaining;
        break;
      }
  }
  return counts;
}

ProbabilityField histogram_to_field(const std::vector<std::uint64_t>& counts, double x0,
                                    double dx) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw EmptyDistribution("histogram_to_field: no events");
  std::vector<double> v(counts.size());
  const double scale = 1.0 / (static_cast<double>(total) * dx);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(counts[k]) * scale;
  return {std::move(v), x0, dx};
}

ProbabilityField realization(const twopath::TwoPacketModel& model, const DeformationParams& params,
                             const NoiseConfig& cfg, std::size_t anchor_index,
                             std::uint64_t realization_index) {
  cfg.validate();
  ProbabilityField mean = jittered_pattern(model, params, cfg, anchor_index,
                                           realization_index * static_cast<std::uint64_t>(cfg.shots));
  if (cfg.shots > 1 && !cfg.jitter_free()) {
    std::vector<double> acc(mean.values().begin(), mean.values().end());
    for (long long s = 1; s < cfg.shots; ++s) {
      const auto p = jittered_pattern(model, params, cfg, anchor_index,
                                      realization_index * static_cast<std::uint64_t>(cfg.shots) +
                                          static_cast<std::uint64_t>(s));
      kernels::accumulate_serial(acc, p.values());
    }
    for (auto& v : acc) v /= static_cast<double>(cfg.shots);
    mean = ProbabilityField(std::move(acc), model.x0(), model.dx());
  }
  const auto pattern = apply_psf(mean, cfg.psf_sigma);
  if (cfg.events_per_shot <= 0) return pattern;
  const auto counts =
      sample_shots(pattern, static_cast<std::uint64_t>(cfg.events_per_shot),
                   rng::stream_seed(cfg.seed, rng::Domain::events, realization_index));
  return histogram_to_field(counts, pattern.x0(), pattern.dx());
}

}  // namespace thetaskew::noise
