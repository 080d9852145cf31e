#pragma once

// Slow reference computations. Nothing here calls into the library code it checks: the
// exact intensity, the closed form, quadrature and the Hamiltonian are re-derived in
// long double from their definitions.

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "thetaskew/fixtures.hpp"
#include "thetaskew/twopath.hpp"

namespace thetaskew::oracle {

using ld = long double;

/// Exact deformed two-path intensity at Delta = 2 n pi + sigma (re_kappa = 1, S2 = 0),
/// on the branch whose value at sigma = 0 is the one closest to n pi among arg psi + m pi.
/// That is the branch convention of the first-order closed form.
ld exact_intensity(ld r1, ld r2, ld theta, int n, ld sigma);

/// R1^2 + R2^2 + 2 R1 R2 cos Delta.
ld baseline(ld r1, ld r2, ld delta);

/// theta (R1^2 - R2^2) Delta - 2 theta P0 arctan(r tan(Delta/2)).
ld closed_form(ld r1, ld r2, ld theta, ld delta);

struct SeriesResult {
  std::array<double, 6> c{};
  std::array<double, 6> err{};
  std::array<bool, 6> accepted{};
};

/// Coefficients of delta P(sigma) = P_exact - P0 about the fringe 2 n pi, from central
/// differences with Richardson extrapolation in long double. Throws PrecisionLoss if any
/// of c0..c3 fails the acceptance rule (err < 1e-6 |c| or |c| < 1e-10).
SeriesResult series_delta_p(double r1, double r2, double theta, int n_fringe);

/// Part of each coefficient linear in theta: theta * dc/dtheta at 0, from symmetric
/// differences in theta with Richardson extrapolation.
SeriesResult series_delta_p_first_order(double r1, double r2, double theta, int n_fringe);

struct BracketReport {
  twopath::BracketConvention chosen = twopath::BracketConvention::full_phase;
  double rel_err_full = 0.0;       // at eps
  double rel_err_full_half = 0.0;  // at eps / 2
  double rel_err_half = 0.0;
  double rel_err_half_half = 0.0;
  double ratio_full = 0.0;  // rel_err(eps) / rel_err(eps/2)
  double ratio_half = 0.0;
  double rejected_mismatch_at_1 = 0.0;  // relative mismatch of the rejected bracket at Delta = 1
  double cubic_limit = 0.0;             // Delta^3 coefficient / (theta R0^2 eps/R0)
};

/// Compares both bracket arguments against the closed form over Delta in [-pi/2, pi/2]
/// at R0 = 1, eps = 0.05, theta = 0.01 and keeps the one whose relative error quarters
/// when eps halves. Throws Inconclusive if neither does.
BracketReport adjudicate_small_imbalance();

struct QuadratureMoments {
  double mu2 = 0.0;
  double mu3 = 0.0;
  double skewness = 0.0;
  double error = 0.0;  // change of the skewness under node doubling
};

/// Window-normalized moments about `center` by Gauss-Legendre quadrature.
QuadratureMoments refined_grid_moments(const std::function<double(double)>& p, double lo,
                                       double hi, double center, int nodes);

/// Phase of a sampled field tracked along straight chords between samples, each chord cut
/// into `refine` steps.
std::vector<double> chord_unwrap(const std::vector<std::complex<double>>& samples,
                                 std::size_t anchor, int refine = 10);

struct Eigenstate {
  std::vector<std::complex<double>> state;
  std::complex<double> energy;
};

/// Eigenvector of the dense spectral Hamiltonian kappa^2 k^2/(2m) + V on a periodic grid,
/// with eigenvalue closest to `target`. Built from explicit DFT sums.
Eigenstate discrete_eigenstate(std::size_t n, double dx, const std::vector<double>& v,
                               double mass, std::complex<double> kappa,
                               std::complex<double> target);

/// Every derived constant used by the tests, recomputed from the oracles above.
std::vector<fixtures::Record> regenerate_fixtures(const std::string& date);

}  // namespace thetaskew::oracle
