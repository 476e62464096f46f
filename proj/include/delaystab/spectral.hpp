#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "delaystab/function_input.hpp"

namespace delaystab::plant_spectral {

/// Diffusion/reaction coefficients and boundary angles of the plant
///   z_t = (p z_x)_x - q~ z,   cos(t1) z(0) - sin(t1) z_x(0) = 0,
///                             cos(t2) z(1) + sin(t2) z_x(1) = u.
struct PlantSpec {
  FunctionInput p = FunctionInput::constant(1.0);
  FunctionInput q_tilde = FunctionInput::constant(0.0);
  double theta1 = 0.0;
  double theta2 = 0.0;

  double c1() const { return std::cos(theta1); }
  double s1() const { return std::sin(theta1); }
  double c2() const { return std::cos(theta2); }
  double s2() const { return std::sin(theta2); }

  /// Angle ranges and sampled positivity of p. Throws InvalidPlant.
  void validate(int probe_points = 257) const;
};

/// Split q~ = q - q_c with q > 0 everywhere.
struct ShiftSplit {
  double q_c = 0.0;
  double q_min = 0.0;  // min of the shifted reaction over the probe grid
};

ShiftSplit split_reaction(const FunctionInput& q_tilde, double margin, int probe_points = 2001);

/// One eigenpair of the shifted operator A f = -(p f')' + q f with the
/// homogeneous boundary conditions, L2-normalized on the grid.
struct EigenMode {
  int n = 0;          // 1-based mode index
  double lambda = 0.0;
  Eigen::VectorXd phi;  // values on the basis grid
  double phi0 = 0.0, dphi0 = 0.0, phi1 = 0.0, dphi1 = 0.0;
};

struct SpectralBasis {
  std::vector<EigenMode> modes;
  Eigen::VectorXd grid;

  int size() const { return static_cast<int>(modes.size()); }
  double dx() const { return grid(1) - grid(0); }
  double lambda(int n) const { return modes.at(n - 1).lambda; }  // 1-based
  const EigenMode& mode(int n) const { return modes.at(n - 1); }
};

/// First m_modes eigenpairs by symmetric finite differences with Robin
/// boundary rows, tridiagonal eigensolve, and two-grid Richardson refinement
/// of eigenvalues, grid values and boundary traces.
SpectralBasis solve_eigen(const PlantSpec& plant, const ShiftSplit& split, int m_modes,
                          int grid_size);

/// Source shapes of the homogeneous reformulation:
///   a = (2p + 2xp' - x^2 q~)/(c2 + 2 s2),  b = -x^2/(c2 + 2 s2).
std::pair<Eigen::VectorXd, Eigen::VectorXd> shape_functions(const PlantSpec& plant,
                                                            const Eigen::VectorXd& grid);

std::pair<Eigen::VectorXd, Eigen::VectorXd> project_coefficients(const SpectralBasis& basis,
                                                                 const Eigen::VectorXd& a,
                                                                 const Eigen::VectorXd& b);

/// Input coefficients beta_n computed both as a_n + (-lambda_n + q_c) b_n and
/// from the boundary trace p(1){-c2 phi_n'(1) + s2 phi_n(1)}. The trace value
/// is authoritative; the projection route is kept as a diagnostic.
struct BetaCoefficients {
  Eigen::VectorXd trace;        // authoritative values
  Eigen::VectorXd projection;   // dual route
  Eigen::VectorXd discrepancy;  // |proj - trace| / (1 + |trace|)
};

BetaCoefficients boundary_input_coefficients(const SpectralBasis& basis, const ShiftSplit& split,
                                             const Eigen::VectorXd& a_n, const Eigen::VectorXd& b_n,
                                             const PlantSpec& plant,
                                             double mismatch_tol = 1e-6, int mismatch_modes = 20);

/// Projection data consumed downstream. Tail norms use the Parseval
/// difference against the full-resolution L2 norms.
struct SpectralCoefficients {
  Eigen::VectorXd a_vals, b_vals;  // shapes on the basis grid
  Eigen::VectorXd a_n, b_n;        // projections, n = 1..m_modes
  BetaCoefficients beta;
  double a_norm_sq = 0.0;
  double b_norm_sq = 0.0;
};

struct TailQuantities {
  double tail_a = 0.0;      // ||R_N a||^2
  double tail_b = 0.0;      // ||R_N b||^2
  double m_phi = 0.0;       // sum over n > N of phi_n(0)^2 / lambda_n
  double m_phi_eps = 0.0;   // sum over n > N of phi_n'(0)^2 / lambda_n^(3/2+eps)
  double eps = 0.0;
  double m_phi_remainder = 0.0;      // analytic bound for the uncomputed modes
  double m_phi_eps_remainder = 0.0;
};

/// Tail quantities for a truncation order N. The sums over the uncomputed
/// modes (n > m_modes) are bounded analytically through the eigenvalue lower
/// bound lambda_n >= pi^2 (n-1)^2 p_*; throws InsufficientModes when that
/// bound exceeds 10% of the computed part. The derivative-trace tail
/// converges slowly (exponent 1 + 2 eps), so its 10% guard applies only when
/// a Neumann-measurement design actually consumes it.
TailQuantities tail_quantities(const SpectralBasis& basis, const SpectralCoefficients& coeffs,
                               int n_trunc, double eps, const PlantSpec& plant,
                               bool need_eps_tail = false);

/// Quadrature of <A f, f> for a sampled profile: integral of p (f')^2 + q f^2
/// plus the Robin boundary terms. Diagnostic for the modal energy identity.
double operator_energy(const Eigen::VectorXd& f, const PlantSpec& plant, const ShiftSplit& split,
                       const Eigen::VectorXd& grid);

/// Everything the design stages need, built once and immutable afterwards.
struct PlantArtifacts {
  PlantSpec spec;
  ShiftSplit split;
  SpectralBasis basis;
  SpectralCoefficients coeffs;
};

PlantArtifacts build_plant(const PlantSpec& spec, double margin, int m_modes, int grid_size);

}  // namespace delaystab::plant_spectral
