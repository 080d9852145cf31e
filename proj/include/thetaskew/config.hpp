#pragma once

// Strict run configuration: `key = value` lines grouped under [section] headers, '#' or
// ';' comments, comma-separated lists. Unknown sections, unknown keys, duplicates and
// unparsable values are rejected with the offending line.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thetaskew/analysis.hpp"
#include "thetaskew/core.hpp"
#include "thetaskew/noise.hpp"
#include "thetaskew/solver.hpp"

namespace thetaskew::config {

enum class Mode { analytic_two_packet, solver_two_packet };
enum class Envelope { flat, gaussian };
enum class WindowSource { model, peaks };
enum class Potential { free, harmonic };

struct GridSpec {
  std::size_t points = 0;
  double dx = 0.0;
  double x0 = 0.0;

  Grid grid() const noexcept { return {x0, dx, points}; }
};

/// Packet j has amplitude A_j, wavenumber k_j and action offset o_j:
/// R_j = A_j (times a Gaussian of width w_j about c_j for gaussian envelopes),
/// S_j = re_kappa (k_j x + o_j). A_1,2 = amplitude_mean (1 +- imbalance).
struct ModelSpec {
  Envelope envelope = Envelope::flat;
  double amplitude_mean = 0.0;
  double imbalance = 0.0;
  double momentum1 = 0.0;
  double momentum2 = 0.0;
  double offset1 = 0.0;
  double offset2 = 0.0;
  double center1 = 0.0;
  double center2 = 0.0;
  double width1 = 0.0;
  double width2 = 0.0;
};

struct SolverSpec {
  double mass = 0.0;
  double dt = 0.0;
  long long steps = 0;
  Potential potential = Potential::free;
  double omega = 0.0;  // harmonic frequency
  solver::Boundary boundary;
  long long trace_stride = 0;
};

struct AnalysisSpec {
  double sigma_max = 1.5707963267948966;
  double fit_halfwidth = 0.5;
  double min_prominence = 0.05;
  analysis::CenterMethod center = analysis::CenterMethod::peak;
  bool linear_background = false;
  WindowSource windows = WindowSource::model;
  std::optional<double> region_lo;
  std::optional<double> region_hi;

  analysis::AnalysisOptions options() const {
    return {min_prominence, fit_halfwidth, center, linear_background};
  }
};

struct SweepSpec {
  std::vector<double> theta;
  std::vector<double> imbalance;
  int order = 0;  // fringe order used for the scaling fit
};

struct RunConfig {
  Mode mode = Mode::analytic_two_packet;
  std::uint64_t seed = 0;
  DeformationParams deformation{1.0, 0.0};
  GridSpec grid;
  ModelSpec model;
  std::optional<SolverSpec> solver;
  noise::NoiseConfig noise;
  long long realizations = 1;
  AnalysisSpec analysis;
  double theta_cal = 0.01;
  std::optional<SweepSpec> sweep;
  std::string text;  // source text, for the hash

  /// FNV-1a over the source text and the effective seed, as 16 hex digits.
  std::string hash() const;
  /// Replaces the seed everywhere it is used.
  void override_seed(std::uint64_t seed);
};

/// Throws ConfigError naming the key and line.
RunConfig parse(std::string_view text);
RunConfig load(const std::string& path);

std::string to_string(Mode m);
std::string to_string(Envelope e);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;

}  // namespace thetaskew::config
