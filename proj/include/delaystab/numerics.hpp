#pragma once

#include <Eigen/Dense>

#include "delaystab/errors.hpp"

namespace delaystab {

/// Uniform grid of n points on [0,1].
Eigen::VectorXd uniform_grid(int n);

/// Composite Simpson rule on an equispaced grid. Requires an odd point count.
template <typename Derived>
double simpson(const Eigen::MatrixBase<Derived>& values, double dx) {
  const Eigen::Index n = values.size();
  if (n < 3 || n % 2 == 0) {
    fail("numerics", "simpson", "BadGrid", "composite Simpson needs an odd point count >= 3");
  }
  double odd = 0.0, even = 0.0;
  for (Eigen::Index i = 1; i + 1 < n; i += 2) odd += values(i);
  for (Eigen::Index i = 2; i + 1 < n; i += 2) even += values(i);
  return dx / 3.0 * (values(0) + values(n - 1) + 4.0 * odd + 2.0 * even);
}

template <typename Derived>
double trapezoid(const Eigen::MatrixBase<Derived>& values, double dx) {
  const Eigen::Index n = values.size();
  if (n < 2) fail("numerics", "trapezoid", "BadGrid", "need at least two points");
  return dx * (values.sum() - 0.5 * (values(0) + values(n - 1)));
}

/// Simpson approximation of the L2 inner product of two sampled functions.
template <typename DA, typename DB>
double l2_inner(const Eigen::MatrixBase<DA>& f, const Eigen::MatrixBase<DB>& g, double dx) {
  return simpson((f.array() * g.array()).matrix(), dx);
}

/// Derivative of an equispaced sample set: centered interior stencils,
/// second-order one-sided stencils at the ends.
Eigen::VectorXd grid_derivative(const Eigen::VectorXd& values, double dx);

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation method,
/// returned in ascending order. Intended for the small dense matrices of the
/// feasibility conditions; falls over (throws) if convergence stalls.
Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a);

double jacobi_max_eigenvalue(const Eigen::MatrixXd& a);

/// All eigenvalues of a symmetric tridiagonal matrix (ascending).
Eigen::VectorXd tridiagonal_eigenvalues(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub);

/// Eigenvector of a symmetric tridiagonal matrix for an isolated eigenvalue
/// estimate, by shifted inverse iteration with partial pivoting. Also refines
/// the eigenvalue with a final Rayleigh quotient. Returns (lambda, vector).
std::pair<double, Eigen::VectorXd> tridiagonal_eigenvector(const Eigen::VectorXd& diag,
                                                           const Eigen::VectorXd& sub,
                                                           double lambda_estimate,
                                                           unsigned seed);

/// Least squares line fit y ~= a + b x; returns (a, b, rms residual).
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rms_residual = 0.0;
};
LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace delaystab
