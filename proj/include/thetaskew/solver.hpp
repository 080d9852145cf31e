#pragma once

// Split-step spectral evolution of i kappa dpsi/dt = -kappa^2/(2m) psi'' + V psi with
// complex kappa, plus residual diagnostics for the phase-amplitude equations.

#include <complex>
#include <optional>
#include <vector>

#include "thetaskew/core.hpp"

namespace thetaskew::solver {

enum class BoundaryKind { periodic, absorbing_ramp };

struct Boundary {
  BoundaryKind kind = BoundaryKind::periodic;
  double width = 0.0;     // ramp width, length units
  double strength = 0.0;  // ramp damping rate at the edge, 1/time
};

struct SolverConfig {
  double mass = 1.0;
  std::vector<double> potential;  // empty means V = 0
  double dt = 0.0;
  long long n_steps = 0;
  Boundary boundary;
  long long trace_stride = 0;  // 0: record only the first and final step
  bool trace_r2 = true;        // also integrate R^2 (needs a phase unwrap per sample)

  /// Throws InvalidArgument on inconsistent fields, including dt max|V| / re_kappa >= 0.1.
  void validate(std::size_t grid_size, const DeformationParams& params) const;
};

struct NormSample {
  double t = 0.0;
  double norm_psi = 0.0;  // integral |psi|^2 dx
  double norm_r2 = 0.0;   // integral R^2 dx (NaN when not traced)
};

struct EvolutionReport {
  WaveField final_field;
  std::vector<NormSample> norm_trace;
};

/// Overflow guard relative to the initial max |psi|.
inline constexpr double kOverflowGuard = 1e15;

/// Strang-split evolution. Grids that are not a power of two are zero padded on the right
/// for the transform and cropped afterwards. Throws Instability past the overflow guard.
EvolutionReport evolve(const WaveField& initial, const SolverConfig& cfg,
                       const DeformationParams& params);

/// exp(-i E t / kappa), kappa complex.
cplx eigen_time_dependence(cplx energy, double t, const DeformationParams& params);

/// Wavenumbers of an n-point periodic grid in FFT order.
std::vector<double> wavenumbers(std::size_t n, double dx);

struct ResidualOptions {
  double mass = 1.0;
  std::vector<double> potential;  // for hj_residual; empty means V = 0
  std::size_t anchor_index = 0;
  double zero_rel = 1e-8;  // nodes with R below zero_rel * max R are masked
};

struct ContinuityResidual {
  SignedField residual;   // d(R^2)/dt + d/dx(R^2 S'/m) at the midpoint
  SignedField diffusion;  // -(2 Im kappa / m) R R'' at the midpoint
};

/// Residual of the continuity equation between two snapshots dt apart, with 4th-order
/// central differences in space. The second snapshot is unwrapped on the branch
/// continuous in time with the first. The two outermost nodes on each side are masked.
ContinuityResidual continuity_residual(const WaveField& field_t, const WaveField& field_t_plus,
                                       double dt, const ResidualOptions& options,
                                       const DeformationParams& params);

struct HjResidual {
  double real_l2 = 0.0;
  double imag_l2 = 0.0;
  std::size_t evaluated = 0;
};

/// L2 norms of dS/dt + S'^2/(2m) + V + Q with complex Q = -kappa^2 R''/(2 m R).
HjResidual hj_residual(const WaveField& field_t, const WaveField& field_t_plus, double dt,
                       const ResidualOptions& options, const DeformationParams& params);

}  // namespace thetaskew::solver
