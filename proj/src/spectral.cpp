#include "delaystab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "delaystab/numerics.hpp"

namespace delaystab::plant_spectral {

namespace {
constexpr const char* kModule = "plant_spectral";
constexpr double kPi = 3.14159265358979323846;
}  // namespace

void PlantSpec::validate(int probe_points) const {
  const Eigen::VectorXd grid = uniform_grid(probe_points);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!(p.eval(grid(i)) > 0.0)) {
      fail(kModule, "validate", "InvalidPlant", "diffusion coefficient not positive at x=" +
                                                     std::to_string(grid(i)));
    }
  }
  if (!(theta1 >= 0.0 && theta1 <= kPi / 2.0 && theta2 >= 0.0 && theta2 <= kPi / 2.0)) {
    fail(kModule, "validate", "InvalidPlant", "boundary angles must lie in [0, pi/2]");
  }
}

ShiftSplit split_reaction(const FunctionInput& q_tilde, double margin, int probe_points) {
  if (!(margin > 0.0)) fail(kModule, "split_reaction", "BadMargin", "margin must be positive");
  const Eigen::VectorXd grid = uniform_grid(probe_points);
  double q_min = q_tilde.eval(grid(0));
  for (Eigen::Index i = 1; i < grid.size(); ++i) q_min = std::min(q_min, q_tilde.eval(grid(i)));
  ShiftSplit split;
  split.q_c = std::max(0.0, -q_min) + margin;
  split.q_min = q_min + split.q_c;
  return split;
}

namespace {

struct GridSolve {
  Eigen::VectorXd lambdas;             // first m eigenvalues
  std::vector<Eigen::VectorXd> vecs;   // normalized eigenfunctions on the grid
  std::vector<std::array<double, 4>> traces;  // phi0, dphi0, phi1, dphi1
};

// Discretize A f = -(p f')' + q f with the Robin rows folded in as a
// symmetric generalized problem S f = lambda W f, W the lumped mass, and
// solve the standard form W^-1/2 S W^-1/2.
GridSolve solve_on_grid(const PlantSpec& plant, const ShiftSplit& split, int m_modes,
                        int grid_size) {
  const Eigen::VectorXd grid = uniform_grid(grid_size);
  const double dx = grid(1) - grid(0);
  const double s1 = plant.s1(), c1 = plant.c1(), s2 = plant.s2(), c2 = plant.c2();
  const bool keep0 = s1 != 0.0;
  const bool keep1 = s2 != 0.0;
  const int lo = keep0 ? 0 : 1;
  const int hi = keep1 ? grid_size - 1 : grid_size - 2;
  const int m = hi - lo + 1;

  Eigen::VectorXd s_diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd s_off = Eigen::VectorXd::Zero(m - 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);

  for (int i = 0; i < grid_size - 1; ++i) {
    const double pk = plant.p.eval(0.5 * (grid(i) + grid(i + 1))) / dx;
    if (i >= lo && i <= hi) s_diag(i - lo) += pk;
    if (i + 1 >= lo && i + 1 <= hi) s_diag(i + 1 - lo) += pk;
    if (i >= lo && i + 1 <= hi) s_off(i - lo) = -pk;
  }
  for (int i = lo; i <= hi; ++i) {
    const double wi = (i == 0 || i == grid_size - 1) ? 0.5 * dx : dx;
    w(i - lo) = wi;
    s_diag(i - lo) += wi * (plant.q_tilde.eval(grid(i)) + split.q_c);
  }
  if (keep0 && c1 != 0.0) s_diag(0) += plant.p.eval(0.0) * c1 / s1;
  if (keep1 && c2 != 0.0) s_diag(m - 1) += plant.p.eval(1.0) * c2 / s2;

  Eigen::VectorXd t_diag = s_diag.array() / w.array();
  Eigen::VectorXd t_off(m - 1);
  for (int i = 0; i < m - 1; ++i) t_off(i) = s_off(i) / std::sqrt(w(i) * w(i + 1));

  const Eigen::VectorXd all = tridiagonal_eigenvalues(t_diag, t_off);

  GridSolve out;
  out.lambdas.resize(m_modes);
  out.vecs.reserve(m_modes);
  out.traces.reserve(m_modes);
  for (int k = 0; k < m_modes; ++k) {
    auto [lambda, u] = tridiagonal_eigenvector(t_diag, t_off, all(k), 1234u + 17u * k);
    out.lambdas(k) = lambda;

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(grid_size);
    for (int i = lo; i <= hi; ++i) phi(i) = u(i - lo) / std::sqrt(w(i - lo));

    // canonical sign: largest-magnitude node positive
    Eigen::Index imax = 0;
    phi.cwiseAbs().maxCoeff(&imax);
    if (phi(imax) < 0.0) phi = -phi;
    phi /= std::sqrt(simpson((phi.array() * phi.array()).matrix(), dx));

    std::array<double, 4> tr{};
    tr[0] = phi(0);
    tr[2] = phi(grid_size - 1);
    tr[1] = keep0 ? (c1 / s1) * phi(0)
                  : (-3.0 * phi(0) + 4.0 * phi(1) - phi(2)) / (2.0 * dx);
    tr[3] = keep1 ? -(c2 / s2) * phi(grid_size - 1)
                  : (3.0 * phi(grid_size - 1) - 4.0 * phi(grid_size - 2) + phi(grid_size - 3)) /
                        (2.0 * dx);
    out.vecs.push_back(std::move(phi));
    out.traces.push_back(tr);
  }
  return out;
}

}  // namespace

SpectralBasis solve_eigen(const PlantSpec& plant, const ShiftSplit& split, int m_modes,
                          int grid_size) {
  plant.validate();
  if (grid_size < 9 || grid_size % 2 == 0) {
    fail(kModule, "solve_eigen", "BadGrid", "grid_size must be odd and >= 9");
  }
  if (!(m_modes >= 1 && m_modes < grid_size / 4)) {
    fail(kModule, "solve_eigen", "InsufficientModes", "need m_modes < grid_size/4");
  }
  if (!(split.q_min > 0.0)) {
    fail(kModule, "solve_eigen", "InvalidPlant", "shifted reaction must be positive");
  }

  const int fine_size = 2 * grid_size - 1;  // halves the spacing exactly
  GridSolve coarse = solve_on_grid(plant, split, m_modes, grid_size);
  GridSolve fine = solve_on_grid(plant, split, m_modes, fine_size);

  SpectralBasis basis;
  basis.grid = uniform_grid(grid_size);
  const double dx = basis.grid(1) - basis.grid(0);
  basis.modes.reserve(m_modes);

  for (int k = 0; k < m_modes; ++k) {
    // align the fine-grid eigenvector sign with the coarse one
    double overlap = 0.0;
    for (int j = 0; j < grid_size; ++j) overlap += fine.vecs[k](2 * j) * coarse.vecs[k](j);
    const double sign = overlap >= 0.0 ? 1.0 : -1.0;

    EigenMode mode;
    mode.n = k + 1;
    mode.lambda = (4.0 * fine.lambdas(k) - coarse.lambdas(k)) / 3.0;
    mode.phi.resize(grid_size);
    for (int j = 0; j < grid_size; ++j) {
      mode.phi(j) = (4.0 * sign * fine.vecs[k](2 * j) - coarse.vecs[k](j)) / 3.0;
    }
    double tr[4];
    for (int t = 0; t < 4; ++t) {
      tr[t] = (4.0 * sign * fine.traces[k][t] - coarse.traces[k][t]) / 3.0;
    }
    // renormalize the extrapolated eigenfunction, traces scaled along
    const double norm = std::sqrt(simpson((mode.phi.array() * mode.phi.array()).matrix(), dx));
    mode.phi /= norm;
    mode.phi0 = tr[0] / norm;
    mode.dphi0 = tr[1] / norm;
    mode.phi1 = tr[2] / norm;
    mode.dphi1 = tr[3] / norm;
    basis.modes.push_back(std::move(mode));
  }

  for (int k = 0; k + 1 < m_modes; ++k) {
    if (!(basis.modes[k].lambda < basis.modes[k + 1].lambda)) {
      fail(kModule, "solve_eigen", "NonIncreasingSpectrum",
           "modes " + std::to_string(k + 1) + "," + std::to_string(k + 2) +
               " out of order; increase grid_size");
    }
  }
  return basis;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> shape_functions(const PlantSpec& plant,
                                                            const Eigen::VectorXd& grid) {
  const double denom = plant.c2() + 2.0 * plant.s2();
  Eigen::VectorXd a(grid.size()), b(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double x = grid(i);
    a(i) = (2.0 * plant.p.eval(x) + 2.0 * x * plant.p.deriv(x) - x * x * plant.q_tilde.eval(x)) /
           denom;
    b(i) = -x * x / denom;
  }
  return {a, b};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> project_coefficients(const SpectralBasis& basis,
                                                                 const Eigen::VectorXd& a,
                                                                 const Eigen::VectorXd& b) {
  if (a.size() != basis.grid.size() || b.size() != basis.grid.size()) {
    fail(kModule, "project_coefficients", "GridMismatch", "shapes not on the basis grid");
  }
  const double dx = basis.dx();
  Eigen::VectorXd a_n(basis.size()), b_n(basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    a_n(k) = l2_inner(a, basis.modes[k].phi, dx);
    b_n(k) = l2_inner(b, basis.modes[k].phi, dx);
  }
  return {a_n, b_n};
}

BetaCoefficients boundary_input_coefficients(const SpectralBasis& basis, const ShiftSplit& split,
                                             const Eigen::VectorXd& a_n, const Eigen::VectorXd& b_n,
                                             const PlantSpec& plant, double mismatch_tol,
                                             int mismatch_modes) {
  if (a_n.size() != basis.size() || b_n.size() != basis.size()) {
    fail(kModule, "boundary_input_coefficients", "GridMismatch", "coefficient count != mode count");
  }
  const double p1 = plant.p.eval(1.0);
  BetaCoefficients beta;
  beta.trace.resize(basis.size());
  beta.projection.resize(basis.size());
  beta.discrepancy.resize(basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    const EigenMode& mode = basis.modes[k];
    beta.trace(k) = p1 * (-plant.c2() * mode.dphi1 + plant.s2() * mode.phi1);
    beta.projection(k) = a_n(k) + (-mode.lambda + split.q_c) * b_n(k);
    beta.discrepancy(k) =
        std::abs(beta.projection(k) - beta.trace(k)) / (1.0 + std::abs(beta.trace(k)));
  }
  const int strict = std::min<int>(mismatch_modes, basis.size());
  for (int k = 0; k < strict; ++k) {
    if (beta.discrepancy(k) > mismatch_tol) {
      fail(kModule, "boundary_input_coefficients", "DualFormulaMismatch",
           "mode " + std::to_string(k + 1) + " discrepancy " +
               std::to_string(beta.discrepancy(k)));
    }
  }
  // loose structural guard for the under-resolved top of the spectrum
  for (int k = strict; k < basis.size(); ++k) {
    if (beta.discrepancy(k) > 0.05) {
      fail(kModule, "boundary_input_coefficients", "DualFormulaMismatch",
           "mode " + std::to_string(k + 1) + " discrepancy " +
               std::to_string(beta.discrepancy(k)));
    }
  }
  return beta;
}

TailQuantities tail_quantities(const SpectralBasis& basis, const SpectralCoefficients& coeffs,
                               int n_trunc, double eps, const PlantSpec& plant,
                               bool need_eps_tail) {
  const int m = basis.size();
  if (!(n_trunc >= 1 && n_trunc < m)) {
    fail(kModule, "tail_quantities", "InsufficientModes", "need N < m_modes");
  }
  if (!(eps > 0.0 && eps <= 0.5)) {
    fail(kModule, "tail_quantities", "BadEps", "eps must lie in (0, 1/2]");
  }

  TailQuantities tails;
  tails.eps = eps;
  double head_a = 0.0, head_b = 0.0;
  for (int k = 0; k < n_trunc; ++k) {
    head_a += coeffs.a_n(k) * coeffs.a_n(k);
    head_b += coeffs.b_n(k) * coeffs.b_n(k);
  }
  tails.tail_a = std::max(0.0, coeffs.a_norm_sq - head_a);
  tails.tail_b = std::max(0.0, coeffs.b_norm_sq - head_b);

  double main_phi = 0.0, main_phi_eps = 0.0;
  for (int k = n_trunc; k < m; ++k) {
    const EigenMode& mode = basis.modes[k];
    main_phi += mode.phi0 * mode.phi0 / mode.lambda;
    main_phi_eps += mode.dphi0 * mode.dphi0 / std::pow(mode.lambda, 1.5 + eps);
  }

  // sup of the boundary traces over a trailing window, for the remainder bound
  const int window = std::max(1, std::min(50, m - n_trunc));
  double c_phi = 0.0, c_dphi = 0.0;
  for (int k = m - window; k < m; ++k) {
    const EigenMode& mode = basis.modes[k];
    c_phi = std::max(c_phi, mode.phi0 * mode.phi0);
    c_dphi = std::max(c_dphi, mode.dphi0 * mode.dphi0 / mode.lambda);
  }

  double p_star = plant.p.eval(basis.grid(0));
  for (Eigen::Index i = 1; i < basis.grid.size(); ++i) {
    p_star = std::min(p_star, plant.p.eval(basis.grid(i)));
  }

  // sum_{k >= m} k^-2 by Euler-Maclaurin
  const double M = static_cast<double>(m);
  const double zeta2_tail = 1.0 / M + 0.5 / (M * M) + 1.0 / (6.0 * M * M * M);
  tails.m_phi_remainder = c_phi / (kPi * kPi * p_star) * zeta2_tail;

  // sum_{k >= m} k^-(1+2eps) bounded by the first term plus the integral
  const double s = 1.0 + 2.0 * eps;
  const double zs_tail = std::pow(M, -s) + std::pow(M, 1.0 - s) / (s - 1.0);
  tails.m_phi_eps_remainder = c_dphi / std::pow(kPi * kPi * p_star, 0.5 + eps) * zs_tail;

  if (tails.m_phi_remainder > 0.1 * main_phi && tails.m_phi_remainder > 1e-14) {
    fail(kModule, "tail_quantities", "InsufficientModes",
         "trace tail remainder bound exceeds 10% of the computed sum");
  }
  if (need_eps_tail && tails.m_phi_eps_remainder > 0.1 * main_phi_eps &&
      tails.m_phi_eps_remainder > 1e-14) {
    fail(kModule, "tail_quantities", "InsufficientModes",
         "derivative-trace tail remainder bound exceeds 10% of the computed sum");
  }

  tails.m_phi = main_phi + tails.m_phi_remainder;
  tails.m_phi_eps = main_phi_eps + tails.m_phi_eps_remainder;
  return tails;
}

double operator_energy(const Eigen::VectorXd& f, const PlantSpec& plant, const ShiftSplit& split,
                       const Eigen::VectorXd& grid) {
  if (f.size() != grid.size()) fail(kModule, "operator_energy", "GridMismatch", "");
  const double dx = grid(1) - grid(0);
  const Eigen::VectorXd df = grid_derivative(f, dx);
  Eigen::VectorXd integrand(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double x = grid(i);
    integrand(i) = plant.p.eval(x) * df(i) * df(i) +
                   (plant.q_tilde.eval(x) + split.q_c) * f(i) * f(i);
  }
  double energy = simpson(integrand, dx);
  if (plant.s1() != 0.0) energy += plant.p.eval(0.0) * (plant.c1() / plant.s1()) * f(0) * f(0);
  if (plant.s2() != 0.0) {
    energy += plant.p.eval(1.0) * (plant.c2() / plant.s2()) * f(f.size() - 1) * f(f.size() - 1);
  }
  return energy;
}

PlantArtifacts build_plant(const PlantSpec& spec, double margin, int m_modes, int grid_size) {
  PlantArtifacts art;
  art.spec = spec;
  art.split = split_reaction(spec.q_tilde, margin, grid_size);
  art.basis = solve_eigen(spec, art.split, m_modes, grid_size);
  auto [a, b] = shape_functions(spec, art.basis.grid);
  auto [a_n, b_n] = project_coefficients(art.basis, a, b);
  art.coeffs.a_vals = a;
  art.coeffs.b_vals = b;
  art.coeffs.a_n = a_n;
  art.coeffs.b_n = b_n;
  art.coeffs.beta = boundary_input_coefficients(art.basis, art.split, a_n, b_n, spec);
  const double dx = art.basis.dx();
  art.coeffs.a_norm_sq = l2_inner(a, a, dx);
  art.coeffs.b_norm_sq = l2_inner(b, b, dx);
  return art;
}

}  // namespace delaystab::plant_spectral
