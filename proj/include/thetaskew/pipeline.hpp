#pragma once

// Config-driven runs: build a two-packet scene (analytic or evolved), produce detector
// patterns, analyze fringe windows, calibrate K, estimate theta, and write the artifacts.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thetaskew/analysis.hpp"
#include "thetaskew/config.hpp"
#include "thetaskew/twopath.hpp"

namespace thetaskew::pipeline {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kModuleVersions =
    "core=1;twopath=1;solver=1;analysis=1;noise=1;oracle=1;cli=1";

struct Scene {
  twopath::TwoPacketModel model;
  std::size_t anchor = 0;  // unwrap anchor of every pattern in the run
  double region_lo = 0.0;  // fringes are searched here
  double region_hi = 0.0;
  std::vector<solver::NormSample> norm_trace;  // solver mode: trace of psi1 + psi2
  double linearity_error = 0.0;                // solver mode: |evolve(sum) - sum of evolves|
  std::optional<WaveField> evolved;            // solver mode: final psi1 + psi2
};

/// Two packets with amplitudes amplitude_mean (1 +- imbalance). In solver mode the packets
/// are evolved separately, decomposed, and the region is where both exceed 1e-3 of their
/// peak. Throws ConfigError for solver settings that fail validation.
Scene build_scene(const config::RunConfig& cfg, const DeformationParams& params, double imbalance);

/// Fringe locations inside the scene region whose window half-width is at least half of
/// the widest one (edge fringes clipped by the region are dropped).
std::vector<twopath::FringeLocation> model_fringes(const Scene& scene,
                                                   const DeformationParams& params,
                                                   const config::AnalysisSpec& spec);

/// Median offset between the discrete maxima of p and the model fringe centers, each
/// searched within half a fringe period. Re-registers jittered data before windowing.
double registration_shift(const ProbabilityField& p,
                          const std::vector<twopath::FringeLocation>& fringes);

/// Fringe records of one pattern, windowed from the model (shifted by `shift`) or from
/// detected peaks matched to model orders. imbalance_r is filled from the model.
std::vector<analysis::FringeRecord> analyze_once(const ProbabilityField& p, const Scene& scene,
                                                 const std::vector<twopath::FringeLocation>& fringes,
                                                 const config::AnalysisSpec& spec, double shift);

struct Measurement {
  ProbabilityField pattern;                      // the first realization
  std::vector<analysis::FringeRecord> records;   // per order; means over realizations
  std::map<int, std::vector<double>> samples;    // usable skewness values per order
  long long realizations = 1;
};

/// Detector realizations (noise::realization) analyzed one by one. Without jitter or
/// event sampling a single realization is used. Records aggregate the usable values of
/// each order: means, skewness_err = std/sqrt(n), usable when n >= 0.9 N.
Measurement measure(const config::RunConfig& cfg, const Scene& scene,
                    const DeformationParams& params, const noise::NoiseConfig& noise,
                    long long realizations);

/// Window convention string stored with a calibration.
std::string convention(const config::RunConfig& cfg);

/// K = S / (theta_cal r) per usable fringe, from a jitter-free, event-free run at theta_cal
/// with the same detector PSF and analysis settings.
analysis::CalibrationTable calibrate(const config::RunConfig& cfg, double imbalance);

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct SimulateResult {
  Scene scene;
  Measurement measurement;
  analysis::CalibrationTable calibration;
  std::optional<analysis::ThetaEstimate> estimate;
  std::string estimate_error;
  std::vector<Check> checks;
  std::optional<solver::ContinuityResidual> continuity;  // solver mode, last step
};

SimulateResult simulate(const config::RunConfig& cfg);
void write_simulate(const SimulateResult& result, const config::RunConfig& cfg,
                    const std::filesystem::path& out);

struct SweepRow {
  std::size_t point = 0;
  double theta = 0.0;
  double imbalance = 0.0;
  analysis::FringeRecord record;
};

struct SweepFit {
  int order = 0;
  double k = 0.0;          // slope of S against theta r
  double intercept = 0.0;
  double r2 = 0.0;
  double max_rel_dev = 0.0;  // max |S/(theta r) - K| / |K| over theta r != 0
  double max_null_abs = 0.0; // max |S| over points with theta r == 0
  std::size_t points = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepFit fit;
};

/// Every (theta, imbalance) pair of the sweep axes, one measurement each, with its own
/// RNG stream. The fit uses the records of sweep.order. Throws ConfigError without axes.
SweepResult sweep(const config::RunConfig& cfg);
void write_sweep(const SweepResult& result, const config::RunConfig& cfg,
                 const std::filesystem::path& out);

/// Ordinary least squares S = K t + b with R^2 and the per-point spread of S/t.
SweepFit fit_scaling(const std::vector<double>& t, const std::vector<double>& s, int order);

struct NullRow {
  int order = 0;
  analysis::NullTestResult result;
  bool pass = false;  // |z| < 3
};

struct NullResult {
  std::vector<NullRow> rows;
  long long realizations = 0;
};

/// Per-fringe skewness_null_test over cfg.realizations detector realizations at the
/// configured theta and imbalance.
NullResult null_test(const config::RunConfig& cfg);
void write_null_test(const NullResult& result, const config::RunConfig& cfg,
                     const std::filesystem::path& out);

/// Reads a pattern CSV (columns x and p; '#' lines skipped).
ProbabilityField read_pattern(const std::filesystem::path& path);

/// Peak-based records for a pattern with no model (imbalance_r is NaN).
std::vector<analysis::FringeRecord> analyze_file(const ProbabilityField& p,
                                                 const config::AnalysisSpec& spec);
void write_analysis(const std::vector<analysis::FringeRecord>& records, const ProbabilityField& p,
                    const std::string& config_hash, const std::filesystem::path& out);

/// Comment lines opening every output file.
std::string file_header(const std::string& config_hash);

}  // namespace thetaskew::pipeline
