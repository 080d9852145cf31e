#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thetaskew/core.hpp"

namespace thetaskew::twopath {

/// Two wave packets psi_j = R_j exp(i S_j / kappa) sampled on one grid.
class TwoPacketModel {
 public:
  TwoPacketModel(std::vector<double> r1, std::vector<double> r2, std::vector<double> s1,
                 std::vector<double> s2, double x0, double dx);

  std::span<const double> r1() const noexcept { return r1_; }
  std::span<const double> r2() const noexcept { return r2_; }
  std::span<const double> s1() const noexcept { return s1_; }
  std::span<const double> s2() const noexcept { return s2_; }
  std::size_t size() const noexcept { return r1_.size(); }
  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t k) const noexcept { return x0_ + static_cast<double>(k) * dx_; }
  Grid grid() const noexcept { return {x0_, dx_, r1_.size()}; }

  /// Delta = (S1 - S2) / re_kappa at grid node k.
  double relative_phase(std::size_t k, double re_kappa) const noexcept {
    return (s1_[k] - s2_[k]) / re_kappa;
  }
  /// Local imbalance (R1 - R2)/(R1 + R2); NaN where R1 + R2 == 0.
  double imbalance(std::size_t k) const noexcept;

  /// Cubic (4-point Lagrange) interpolation of a model sequence at x.
  static double interpolate(std::span<const double> seq, const Grid& grid, double x);

  /// Copy with constant action offsets added to S1 and S2.
  TwoPacketModel with_action_offsets(double ds1, double ds2) const;

 private:
  std::vector<double> r1_, r2_, s1_, s2_;
  double x0_, dx_;
};

/// psi = R1 exp(i S1/kappa) + R2 exp(i S2/kappa), kappa complex.
WaveField build_field(const TwoPacketModel& model, const DeformationParams& params);

/// Continuous branch of arg psi at node k: the mean phase (S1+S2)/(2 re_kappa (1+theta^2))
/// plus the principal arg of the relative superposition. Continuous under global phase
/// shifts of the model, so it is the anchor phase used for jittered ensembles.
double model_anchor_phase(const TwoPacketModel& model, const DeformationParams& params,
                          std::size_t k);

/// Exact deformed intensity of the model, unwrapped from anchor node k using
/// model_anchor_phase.
ProbabilityField exact_probability(const TwoPacketModel& model, const DeformationParams& params,
                                   std::size_t anchor_index);

/// P0 = R1^2 + R2^2 + 2 R1 R2 cos((S1 - S2)/re_kappa).
ProbabilityField baseline_p0(const TwoPacketModel& model, const DeformationParams& params);

struct FirstOrderCorrection {
  SignedField total;
  SignedField phase_part;   // -2 theta P0 arg psi0
  SignedField linear_part;  // terms linear in the actions
};

/// First-order correction split into its phase and linear pieces. Nodes with
/// R1 + R2 == 0 or on a tan pole of Delta/2 are masked.
FirstOrderCorrection delta_p_first_order(const TwoPacketModel& model,
                                         const DeformationParams& params,
                                         double tol_pole = 1e-8);

/// theta (R1^2 - R2^2) Delta - 2 theta P0 arctan(r tan(Delta/2)), principal arctan.
/// Nodes within tol_pole of a tan singularity are masked.
SignedField delta_p_closed_form(const TwoPacketModel& model, const DeformationParams& params,
                                double tol_pole = 1e-8);

/// Argument of the small-imbalance bracket. full_phase uses Delta; half_phase uses
/// Delta/2 as printed in the original derivation. The oracle adjudicates between
/// them (see oracle::adjudicate_small_imbalance); full_phase is the adopted default.
enum class BracketConvention { full_phase, half_phase };

inline constexpr BracketConvention kAdoptedBracket = BracketConvention::full_phase;

struct SmallImbalanceResult {
  SignedField field;
  double max_relative_imbalance = 0.0;  // max |eps|/R0
  bool large_imbalance = false;         // max |eps|/R0 >= 0.2
};

/// 4 theta R0^2 (eps/R0) (a - sin a), a = Delta (or Delta/2), R0 = (R1+R2)/2,
/// eps = (R1-R2)/2.
SmallImbalanceResult delta_p_small_imbalance(const TwoPacketModel& model,
                                             const DeformationParams& params,
                                             BracketConvention bracket = kAdoptedBracket);

/// sigma^3 coefficient of delta P near a bright fringe: (2/3) theta R1 R2 (R1-R2)/(R1+R2).
/// Throws Degenerate if R1 + R2 <= 0.
double cubic_coefficient(double r1, double r2, double theta);

/// Phase-independent offset of delta P at fringe n: 2 n pi theta (R1^2 - R2^2).
double fringe_offset(int n, double r1, double r2, double theta) noexcept;

struct FringeLocation {
  int order = 0;          // n
  double x_center = 0.0;  // root of Delta(x) = 2 n pi
  double x_lo = 0.0;      // window
  double x_hi = 0.0;
  double slope = 0.0;     // dDelta/dx at the center
};

struct FringeOptions {
  double sigma_max = 1.5707963267948966;
  double root_tol_rel = 1e-10;  // bisection tolerance in units of dx
};

/// Every root of Delta(x) - 2 n pi inside [x_lo, x_hi]. Windows extend to |sigma| <
/// sigma_max, clipped at neighbouring dark fringes and at the region. Throws NoFringe
/// when the region holds no root.
std::vector<FringeLocation> fringe_locations(const TwoPacketModel& model,
                                             const DeformationParams& params, double x_lo,
                                             double x_hi, const FringeOptions& options = {});

}  // namespace thetaskew::twopath
