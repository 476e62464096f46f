#pragma once

#include <Eigen/Dense>

#include "delaystab/spectral.hpp"

namespace delaystab::synthesis {

enum class Variant { DirichletOut, NeumannOut, JointDelay };

const char* variant_name(Variant v);

/// Decay target, modal split and delays of one design.
struct DesignParameters {
  double delta = 0.5;
  int n0 = 0;  // 0 means: pick the smallest admissible order
  int n = 0;   // observer order; certify escalates from n0+1 regardless
  Variant variant = Variant::DirichletOut;
  double h_o = 0.0;  // output delay (s)
  double h_i = 0.0;  // input delay (s), used by JointDelay only

  /// Delay horizon seen by the observer/predictor.
  double horizon() const { return variant == Variant::JointDelay ? h_i + h_o : h_o; }
};

struct GainSet {
  Eigen::RowVectorXd k;  // feedback gain, 1 x N0
  Eigen::VectorXd l;     // observer gain, N0
};

/// Truncated closed-loop matrices for a given (N0, N, variant, delay).
struct ReducedMatrices {
  int n0 = 0;
  int n = 0;
  Variant variant = Variant::DirichletOut;
  double delay_horizon = 0.0;            // h (single delay) or h_i + h_o
  Eigen::VectorXd a0;                     // diag(-lambda_n + q_c), n <= N0
  Eigen::VectorXd a1;                     // same for N0 < n <= N
  Eigen::VectorXd b0;                     // beta_n, n <= N0
  Eigen::VectorXd b1t;                    // beta_n / lambda_n, N0 < n <= N
  Eigen::RowVectorXd c0;                  // output traces, n <= N0
  Eigen::RowVectorXd c1t;                 // scaled traces, N0 < n <= N
  Eigen::MatrixXd f;                      // (2N) x (2N)
  Eigen::VectorXd lcal;                   // 2N
  Eigen::RowVectorXd ktilde;              // 1 x 2N
  Eigen::RowVectorXd e;                   // 1 x (2N+1)
  Eigen::VectorXd exp_a0h;                // entrywise exp(a0 * delay_horizon)
};

/// Smallest N0 >= 1 with lambda_{N0+1} > q_c + delta.
int select_n0(const plant_spectral::SpectralBasis& basis, double q_c, double delta);

/// SISO pole placement by Ackermann's formula for the diagonal pair
/// (A0, B0) and its observer dual (A0, C0). Poles must have real part
/// strictly below -delta; complex pole sets are not supported.
GainSet place_gains(const Eigen::VectorXd& a0, const Eigen::VectorXd& b0,
                    const Eigen::RowVectorXd& c0, const Eigen::VectorXd& pole_set_ctrl,
                    const Eigen::VectorXd& pole_set_obs, double delta);

/// Checks externally supplied gains: A0 + B0 K and A0 - L C0 Hurwitz with
/// spectral abscissa < -delta, K nonzero. Throws GainValidation on failure.
void validate_gains(const Eigen::VectorXd& a0, const Eigen::VectorXd& b0,
                    const Eigen::RowVectorXd& c0, const GainSet& gains, double delta);

ReducedMatrices assemble_reduced(const plant_spectral::PlantArtifacts& artifacts,
                                 const GainSet& gains, const DesignParameters& params);

/// Minimum-norm observer initial state satisfying the start-up
/// compatibility K e^{A0 h} Z(0) = (1 - int_{-h}^0 K e^{-A0 s} B0 ds) u0.
Eigen::VectorXd initial_observer_state(double u0, const GainSet& gains, const Eigen::VectorXd& a0,
                                       const Eigen::VectorXd& b0, double horizon);

/// diag entries of int_{-h}^0 e^{-A0 s} ds: (e^{lambda h} - 1)/lambda, h at 0.
Eigen::VectorXd exp_integral(const Eigen::VectorXd& a0, double horizon);

}  // namespace delaystab::synthesis
