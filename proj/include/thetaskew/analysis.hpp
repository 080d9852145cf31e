#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "thetaskew/core.hpp"

namespace thetaskew::analysis {

struct Window {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const noexcept { return 0.5 * (hi - lo); }
};

struct Peak {
  double x_peak = 0.0;
  std::size_t index = 0;  // discrete argmax
  double prominence = 0.0;
  Window window;          // symmetrized about x_peak
};

/// Local maxima with prominence >= min_prominence * max(P). Peaks are refined by a parabola
/// through the three samples around the discrete maximum; windows reach the nearest local
/// minimum on each side and are then cut to the shorter half-width. Throws NoPeaks.
std::vector<Peak> find_peaks(const ProbabilityField& p, double min_prominence);

struct Moments {
  double mass = 0.0;  // integral of P over the window
  double mean = 0.0;  // first moment of delta x
  double mu2 = 0.0;
  double mu3 = 0.0;
  double skewness = 0.0;
};

/// Window-normalized central moments about `center` by the trapezoid rule on the grid nodes
/// inside the window plus the two fractional edges (P linearly interpolated there).
/// Throws EmptyWindow when the window is outside the grid or holds no mass.
Moments local_moments(const ProbabilityField& p, double center, const Window& window);

/// local_moments after subtracting the straight line through P at the two window edges.
Moments local_moments_linear_background(const ProbabilityField& p, double center,
                                        const Window& window);

struct CubicFit {
  std::array<double, 4> a{};  // P ~ a0 + a1 dx + a2 dx^2 + a3 dx^3, dx = x - center
  double condition = 0.0;     // condition number of the normal system
  std::size_t samples = 0;
};

/// Least squares cubic over |x - center| <= halfwidth using a basis scaled to [-1, 1].
/// Throws TooFewSamples below 12 samples and IllConditioned above a normal-system
/// condition number of 1e10.
CubicFit fit_local_cubic(const ProbabilityField& p, double center, double halfwidth);

/// a3 in units of sigma^3, given the local slope dDelta/dx.
inline double a3_in_sigma_units(const CubicFit& fit, double slope) {
  return fit.a[3] / (slope * slope * slope);
}

enum class CenterMethod { peak, lsq, centroid };

CenterMethod parse_center_method(const std::string& name);
std::string to_string(CenterMethod m);

/// Least-squares quartic over the inner half of the window on nodes symmetric about the
/// node nearest the center; returns its stationary point. Falls back to `guess` when the
/// fit is not concave or the stencil leaves the grid.
double lsq_center(const ProbabilityField& p, double guess, double half_width);

struct FringeRecord {
  int order = 0;  // fringe order n when the model is known
  double x_peak = 0.0;
  Window window;
  double mu2 = 0.0;
  double mu3 = 0.0;
  double skewness = 0.0;
  std::array<double, 4> poly_fit{};
  double imbalance_r = std::numeric_limits<double>::quiet_NaN();
  double mask_fraction = 0.0;
  bool usable = false;
  double skewness_err = 0.0;  // ensemble standard error when known, else 0
};

struct AnalysisOptions {
  double min_prominence = 0.05;
  double fit_halfwidth = 0.5;  // fraction of the window half-width
  CenterMethod center = CenterMethod::peak;
  bool linear_background = false;
};

/// A fringe window proposed by the model: center guess, half-width, order.
struct WindowHint {
  int order = 0;
  double x_center = 0.0;
  double half_width = 0.0;
};

/// Records for explicit window hints. The center is measured inside the hint, the
/// window is re-centered on it with the hint's half-width, and records whose window
/// leaves the grid are marked unusable.
std::vector<FringeRecord> analyze_windows(const ProbabilityField& p,
                                          const std::vector<WindowHint>& hints,
                                          const AnalysisOptions& options);

/// Records for every peak found by find_peaks.
std::vector<FringeRecord> analyze_pattern(const ProbabilityField& p,
                                          const AnalysisOptions& options);

/// K(r) per fringe order, from a pipeline run at theta_cal.
class CalibrationTable {
 public:
  struct Entry {
    int order = 0;
    double r = 0.0;
    double k = 0.0;
  };

  CalibrationTable() = default;
  CalibrationTable(double theta_cal, std::string convention, std::vector<Entry> entries);

  double theta_cal() const noexcept { return theta_cal_; }
  const std::string& convention() const noexcept { return convention_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  /// K for (order, |r|): exact r match, else linear interpolation in |r| among entries of
  /// the same order, else the mean K of that order. Throws Underdetermined if the order
  /// was never calibrated.
  double k(int order, double r) const;

  /// Mean K over all entries.
  double mean_k() const;

 private:
  double theta_cal_ = 0.0;
  std::string convention_;
  std::vector<Entry> entries_;
};

struct ThetaEstimate {
  double theta_hat = 0.0;
  double std_error = 0.0;
  int n_fringes = 0;
  double calibration_K = 0.0;  // mean K over the records used
  double residual_chi2 = 0.0;
};

/// Weighted least squares of S_n against K(r_n) r_n through the origin. Records with
/// skewness_err > 0 are weighted by 1/err^2 and the standard error is scaled by the Birge
/// ratio when it exceeds 1. Throws Underdetermined with no usable records, Degenerate
/// if every |r| is ~0.
ThetaEstimate estimate_theta(const std::vector<FringeRecord>& records,
                             const CalibrationTable& calibration);

struct NullTestResult {
  double mean = 0.0;
  double std = 0.0;
  double z_score = 0.0;
  std::size_t n = 0;
};

/// Mean, sample std and z = mean / (std / sqrt(N)). Throws TooFewSamples below 100.
NullTestResult skewness_null_test(const std::vector<double>& samples);

}  // namespace thetaskew::analysis
