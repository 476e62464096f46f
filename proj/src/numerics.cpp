#include "delaystab/numerics.hpp"

#include <cmath>
#include <random>

namespace delaystab {

Eigen::VectorXd uniform_grid(int n) {
  if (n < 2) fail("numerics", "uniform_grid", "BadGrid", "need at least two points");
  return Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
}

Eigen::VectorXd grid_derivative(const Eigen::VectorXd& values, double dx) {
  const Eigen::Index n = values.size();
  if (n < 3) fail("numerics", "grid_derivative", "BadGrid", "need at least three points");
  Eigen::VectorXd d(n);
  d(0) = (-3.0 * values(0) + 4.0 * values(1) - values(2)) / (2.0 * dx);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d(i) = (values(i + 1) - values(i - 1)) / (2.0 * dx);
  d(n - 1) = (3.0 * values(n - 1) - 4.0 * values(n - 2) + values(n - 3)) / (2.0 * dx);
  return d;
}

Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) fail("numerics", "jacobi_eigenvalues", "DimensionMismatch", "matrix not square");
  auto sorted_diagonal = [&a]() {
    Eigen::VectorXd ev = a.diagonal();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
  };
  if (n == 1) return sorted_diagonal();

  const double scale = std::max(1.0, a.norm());
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= 1e-14 * scale) return sorted_diagonal();

    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        // tangent of the rotation angle, smaller root for stability
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Eigen::VectorXd row_p = a.row(p);
        Eigen::VectorXd row_q = a.row(q);
        a.row(p) = c * row_p.transpose() - s * row_q.transpose();
        a.row(q) = s * row_p.transpose() + c * row_q.transpose();
        Eigen::VectorXd col_p = a.col(p);
        Eigen::VectorXd col_q = a.col(q);
        a.col(p) = c * col_p - s * col_q;
        a.col(q) = s * col_p + c * col_q;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  fail("numerics", "jacobi_eigenvalues", "NoConvergence", "rotation sweeps exhausted");
}

double jacobi_max_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::VectorXd ev = jacobi_eigenvalues(a);
  return ev.maxCoeff();
}

Eigen::VectorXd tridiagonal_eigenvalues(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    fail("numerics", "tridiagonal_eigenvalues", "NoConvergence", "tridiagonal QL failed");
  }
  return solver.eigenvalues();
}

namespace {

// One solve of (T - mu I) x = b for symmetric tridiagonal T, Gaussian
// elimination with partial pivoting (one superdiagonal of fill-in).
void shifted_tridiagonal_solve(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub,
                               double mu, Eigen::VectorXd& x) {
  const Eigen::Index n = diag.size();
  Eigen::VectorXd a(n), b(n), c(n);  // diagonal, super, super-super after pivoting
  Eigen::VectorXd low(n);            // retained subdiagonal multipliers source
  a = diag.array() - mu;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    b(i) = sub(i);
    low(i) = sub(i);
  }
  b(n - 1) = 0.0;
  c.setZero();

  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (std::abs(a(k)) >= std::abs(low(k))) {
      // no row interchange; c(k) stays zero
      double piv = a(k);
      if (piv == 0.0) piv = 1e-300;
      const double m = low(k) / piv;
      a(k) = piv;
      a(k + 1) -= m * b(k);
      x(k + 1) -= m * x(k);
    } else {
      // swap rows k and k+1
      const double m = a(k) / low(k);
      std::swap(x(k), x(k + 1));
      double ak = low(k), bk = a(k + 1), ck = (k + 2 < n) ? low(k + 1) : 0.0;
      a(k) = ak;
      const double b_old = b(k);
      b(k) = bk;
      c(k) = ck;
      a(k + 1) = b_old - m * bk;
      if (k + 2 < n) b(k + 1) = -m * ck;
      x(k + 1) -= m * x(k);
    }
  }
  // back substitution
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    double v = x(k);
    if (k + 1 < n) v -= b(k) * x(k + 1);
    if (k + 2 < n) v -= c(k) * x(k + 2);
    double piv = a(k);
    if (piv == 0.0) piv = 1e-300;
    x(k) = v / piv;
  }
}

double tridiagonal_residual(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub,
                            double lambda, const Eigen::VectorXd& v) {
  const Eigen::Index n = diag.size();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = (diag(i) - lambda) * v(i);
    if (i > 0) r += sub(i - 1) * v(i - 1);
    if (i + 1 < n) r += sub(i) * v(i + 1);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace

std::pair<double, Eigen::VectorXd> tridiagonal_eigenvector(const Eigen::VectorXd& diag,
                                                           const Eigen::VectorXd& sub,
                                                           double lambda_estimate,
                                                           unsigned seed) {
  const Eigen::Index n = diag.size();
  const double scale = std::max(diag.cwiseAbs().maxCoeff(), sub.cwiseAbs().maxCoeff());

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uni(rng);
  v.normalize();

  // A hair off the estimate keeps the shifted matrix comfortably invertible.
  const double mu = lambda_estimate + 1e-11 * scale;
  double lambda = lambda_estimate;
  for (int it = 0; it < 8; ++it) {
    shifted_tridiagonal_solve(diag, sub, mu, v);
    v.normalize();
    // Rayleigh quotient of the current iterate
    double rq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double av = diag(i) * v(i);
      if (i > 0) av += sub(i - 1) * v(i - 1);
      if (i + 1 < n) av += sub(i) * v(i + 1);
      rq += v(i) * av;
    }
    lambda = rq;
    if (tridiagonal_residual(diag, sub, lambda, v) <= 1e-12 * scale) break;
  }
  if (tridiagonal_residual(diag, sub, lambda, v) > 1e-8 * scale) {
    fail("numerics", "tridiagonal_eigenvector", "NoConvergence",
         "inverse iteration residual too large");
  }
  return {lambda, v};
}

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) {
    fail("numerics", "fit_line", "BadInput", "need two equally sized samples");
  }
  const double n = static_cast<double>(x.size());
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.rms_residual = std::sqrt((y.array() - fit.intercept - fit.slope * x.array()).square().sum() / n);
  return fit;
}

}  // namespace delaystab
