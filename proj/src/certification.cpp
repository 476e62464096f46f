#include "delaystab/certification.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "delaystab/numerics.hpp"

namespace delaystab::certification {

namespace {
constexpr const char* kModule = "certification";

// Solve T Y + Y T' = C for T upper quasi-triangular (real Schur form),
// descending block back-substitution with <= 2x2 Kronecker kernels.
Eigen::MatrixXd triangular_lyapunov(const Eigen::MatrixXd& t, const Eigen::MatrixXd& c) {
  const Eigen::Index n = t.rows();
  // split the quasi-triangular diagonal into 1x1 / 2x2 blocks
  std::vector<Eigen::Index> starts;
  for (Eigen::Index i = 0; i < n;) {
    starts.push_back(i);
    if (i + 1 < n && std::abs(t(i + 1, i)) > 0.0) {
      i += 2;
    } else {
      i += 1;
    }
  }
  const int nb = static_cast<int>(starts.size());
  auto block_size = [&](int b) {
    return (b + 1 < nb ? starts[b + 1] : n) - starts[b];
  };

  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
  for (int bi = nb - 1; bi >= 0; --bi) {
    const Eigen::Index i0 = starts[bi], ni = block_size(bi);
    for (int bj = nb - 1; bj >= 0; --bj) {
      const Eigen::Index j0 = starts[bj], nj = block_size(bj);
      Eigen::MatrixXd rhs = c.block(i0, j0, ni, nj);
      // already-computed trailing contributions
      if (i0 + ni < n) {
        rhs -= t.block(i0, i0 + ni, ni, n - i0 - ni) * y.block(i0 + ni, j0, n - i0 - ni, nj);
      }
      if (j0 + nj < n) {
        rhs -= y.block(i0, j0 + nj, ni, n - j0 - nj) *
               t.block(j0, j0 + nj, nj, n - j0 - nj).transpose();
      }
      const Eigen::MatrixXd tii = t.block(i0, i0, ni, ni);
      const Eigen::MatrixXd tjj = t.block(j0, j0, nj, nj);
      // vec(Tii Y + Y Tjj') = (I (x) Tii + Tjj (x) I) vec(Y)
      Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(ni * nj, ni * nj);
      for (Eigen::Index q = 0; q < nj; ++q) {
        kron.block(q * ni, q * ni, ni, ni) += tii;
        for (Eigen::Index r = 0; r < nj; ++r) {
          kron.block(q * ni, r * ni, ni, ni) +=
              tjj(q, r) * Eigen::MatrixXd::Identity(ni, ni);
        }
      }
      Eigen::VectorXd vec_rhs(ni * nj);
      for (Eigen::Index q = 0; q < nj; ++q) vec_rhs.segment(q * ni, ni) = rhs.col(q);
      const Eigen::VectorXd sol = kron.fullPivLu().solve(vec_rhs);
      for (Eigen::Index q = 0; q < nj; ++q) y.block(i0, j0, ni, nj).col(q) = sol.segment(q * ni, ni);
    }
  }
  return y;
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f, double delta) {
  const Eigen::Index n = f.rows();
  if (n != f.cols()) fail(kModule, "solve_lyapunov", "DimensionMismatch", "F not square");
  const Eigen::MatrixXd a = (f + delta * Eigen::MatrixXd::Identity(n, n)).transpose();

  Eigen::RealSchur<Eigen::MatrixXd> schur(a);
  if (schur.info() != Eigen::Success) {
    fail(kModule, "solve_lyapunov", "SchurFailure", "real Schur iteration failed");
  }
  const Eigen::MatrixXd t = schur.matrixT();
  const Eigen::MatrixXd u = schur.matrixU();

  // eigenvalues off the quasi-triangular diagonal: Hurwitz and separation checks
  std::vector<std::complex<double>> eigs;
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > 0.0) {
      const double re = 0.5 * (t(i, i) + t(i + 1, i + 1));
      const double disc = t(i + 1, i) * t(i, i + 1) +
                          0.25 * (t(i, i) - t(i + 1, i + 1)) * (t(i, i) - t(i + 1, i + 1));
      const double im = std::sqrt(std::max(0.0, -disc));
      eigs.emplace_back(re, im);
      eigs.emplace_back(re, -im);
      i += 2;
    } else {
      eigs.emplace_back(t(i, i), 0.0);
      i += 1;
    }
  }
  double abscissa = -std::numeric_limits<double>::infinity();
  for (const auto& ev : eigs) abscissa = std::max(abscissa, ev.real());
  if (!(abscissa < 0.0)) {
    fail(kModule, "solve_lyapunov", "NotHurwitz",
         "F + delta I has spectral abscissa " + std::to_string(abscissa));
  }
  double sep = std::numeric_limits<double>::infinity();
  for (const auto& ei : eigs)
    for (const auto& ej : eigs) sep = std::min(sep, std::abs(ei + std::conj(ej)));
  const double cond_est = 2.0 * a.norm() / sep;
  if (cond_est > 1e12) {
    fail(kModule, "solve_lyapunov", "IllConditioned",
         "estimated condition " + std::to_string(cond_est));
  }

  // A P + P A' = -I with A = (F + delta I)'; transform by the Schur basis
  const Eigen::MatrixXd c = -Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd y = triangular_lyapunov(t, u.transpose() * c * u);
  Eigen::MatrixXd p = u * y * u.transpose();
  p = 0.5 * (p + p.transpose()).eval();

  const double residual =
      (f.transpose() * p + p * f + 2.0 * delta * p + Eigen::MatrixXd::Identity(n, n)).norm();
  if (residual > 1e-8 * p.norm()) {
    fail(kModule, "solve_lyapunov", "IllConditioned",
         "residual " + std::to_string(residual) + " exceeds 1e-8 ||P||");
  }
  return p;
}

namespace {

double joint_gain(const CertificateProblem& problem) {
  return problem.variant() == synthesis::Variant::JointDelay
             ? std::exp(2.0 * problem.delta * problem.h_i)
             : 1.0;
}

}  // namespace

Eigen::MatrixXd theta1_matrix(const CertificateProblem& problem, const Eigen::MatrixXd& p,
                              double beta, const Eigen::MatrixXd& q1_block, double q2_scalar) {
  const auto& red = problem.reduced;
  const Eigen::Index m = red.f.rows();
  if (p.rows() != m || p.cols() != m) {
    fail(kModule, "evaluate_theta1", "DimensionMismatch", "P size != 2N");
  }
  if (q1_block.rows() != red.n0 || q1_block.cols() != red.n0) {
    fail(kModule, "evaluate_theta1", "DimensionMismatch", "Q1 size != N0");
  }
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(m + 1, m + 1);
  theta.topLeftCorner(m, m) = red.f.transpose() * p + p * red.f + 2.0 * problem.delta * p;
  theta.block(0, 0, red.n0, red.n0) += q1_block;
  theta.block(0, m, m, 1) = p * red.lcal;
  theta.block(m, 0, 1, m) = (p * red.lcal).transpose();
  theta(m, m) = -beta * std::exp(-2.0 * problem.delta * problem.h_o);
  theta += q2_scalar * red.e.transpose() * red.e;
  return 0.5 * (theta + theta.transpose().eval());
}

Theta1Result evaluate_theta1(const CertificateProblem& problem, const Eigen::MatrixXd& p,
                             double alpha, double beta, double gamma) {
  if (!(alpha > 1.0)) fail(kModule, "evaluate_theta1", "BadAlpha", "alpha must exceed 1");
  const double gi = joint_gain(problem);
  const Eigen::MatrixXd q1 =
      gi * alpha * gamma * problem.tails.tail_a * problem.k.transpose() * problem.k;
  const double q2 = gi * alpha * gamma * problem.tails.tail_b;
  Theta1Result result;
  result.matrix = theta1_matrix(problem, p, beta, q1, q2);
  result.max_eig = jacobi_max_eigenvalue(result.matrix);
  return result;
}

std::pair<double, double> evaluate_theta2_theta3(const CertificateProblem& problem, double alpha,
                                                 double beta, double gamma, double eps) {
  if (!(alpha > 1.0)) fail(kModule, "evaluate_theta2_theta3", "BadAlpha", "alpha must exceed 1");
  const double bracket =
      -(1.0 - 1.0 / alpha) * problem.lambda_next + problem.q_c + problem.delta;
  if (problem.variant() == synthesis::Variant::NeumannOut) {
    if (!(eps > 0.0 && eps <= 0.5)) {
      fail(kModule, "evaluate_theta2_theta3", "BadEps", "eps must lie in (0, 1/2]");
    }
    const double theta2 = 2.0 * gamma * bracket +
                          beta * problem.tails.m_phi_eps * std::pow(problem.lambda_next, 0.5 + eps);
    const double theta3 = 2.0 * gamma * (1.0 - 1.0 / alpha) -
                          beta * problem.tails.m_phi_eps / std::pow(problem.lambda_next, 0.5 - eps);
    return {theta2, theta3};
  }
  const double theta2 = 2.0 * gamma * bracket + beta * problem.tails.m_phi;
  return {theta2, std::numeric_limits<double>::infinity()};
}

Eigen::MatrixXd default_q1(const CertificateProblem& problem, double alpha, double gamma) {
  return std::exp(2.0 * problem.delta * problem.h_i) * alpha * gamma * problem.tails.tail_a *
         problem.k.transpose() * problem.k;
}

double default_q2(const CertificateProblem& problem, double alpha, double gamma) {
  return std::exp(2.0 * problem.delta * problem.h_i) * alpha * gamma * problem.tails.tail_b;
}

Eigen::MatrixXd residual_r1(const CertificateProblem& problem, double alpha, double gamma,
                            const Eigen::MatrixXd& q1) {
  return -std::exp(-2.0 * problem.delta * problem.h_i) * q1 +
         alpha * gamma * problem.tails.tail_a * problem.k.transpose() * problem.k;
}

double residual_r2(const CertificateProblem& problem, double alpha, double gamma, double q2) {
  return -std::exp(-2.0 * problem.delta * problem.h_i) * q2 +
         alpha * gamma * problem.tails.tail_b;
}

CertificateProblem make_problem(const plant_spectral::PlantArtifacts& artifacts,
                                const synthesis::GainSet& gains,
                                synthesis::DesignParameters params, double eps) {
  if (params.n + 1 > artifacts.basis.size()) {
    fail(kModule, "make_problem", "InsufficientModes",
         "need mode N+1 in the basis for lambda_{N+1}");
  }
  CertificateProblem problem;
  problem.reduced = synthesis::assemble_reduced(artifacts, gains, params);
  problem.k = gains.k;
  problem.delta = params.delta;
  problem.tails = plant_spectral::tail_quantities(
      artifacts.basis, artifacts.coeffs, params.n, eps, artifacts.spec,
      params.variant == synthesis::Variant::NeumannOut);
  problem.lambda_next = artifacts.basis.lambda(params.n + 1);
  problem.q_c = artifacts.split.q_c;
  problem.h_i = params.variant == synthesis::Variant::JointDelay ? params.h_i : 0.0;
  problem.h_o = params.h_o;
  if (!(problem.lambda_next > problem.q_c + problem.delta)) {
    fail(kModule, "make_problem", "BadTruncation", "lambda_{N+1} <= q_c + delta");
  }
  return problem;
}

namespace {

Eigen::VectorXd log_grid(double center, int points_per_decade, double decades) {
  const int side = static_cast<int>(std::lround(decades * points_per_decade));
  Eigen::VectorXd grid(2 * side + 1);
  for (int i = -side; i <= side; ++i) {
    grid(i + side) = center * std::pow(10.0, static_cast<double>(i) / points_per_decade);
  }
  return grid;
}

// Scalars that make one grid-point check O(1): Gram data of the rank
// structure Theta1 = diag(-m I, d) + low-rank.
struct FastPoint {
  double kk, ke, ee;      // ||K~||^2, K~.E1, ||E1||^2
  double pp, pk, pe;      // ||PL||^2, K~.PL, E1.PL
  double e_last;
  double exp_ho;          // e^{-2 delta h_o}
  double gi;              // e^{+2 delta h_i} (1 unless joint)
};

FastPoint precompute_fast(const CertificateProblem& problem, const Eigen::MatrixXd& p) {
  const auto& red = problem.reduced;
  const Eigen::Index m = red.f.rows();
  const Eigen::VectorXd pl = p * red.lcal;
  const Eigen::VectorXd ktilde = red.ktilde.transpose();
  const Eigen::VectorXd e1 = red.e.segment(0, m).transpose();
  FastPoint fp;
  fp.kk = ktilde.squaredNorm();
  fp.ke = ktilde.dot(e1);
  fp.ee = e1.squaredNorm();
  fp.pp = pl.squaredNorm();
  fp.pk = ktilde.dot(pl);
  fp.pe = e1.dot(pl);
  fp.e_last = red.e(m);
  fp.exp_ho = std::exp(-2.0 * problem.delta * problem.h_o);
  fp.gi = joint_gain(problem);
  return fp;
}

// Exact negative-semidefiniteness test of Theta1 through the corner Schur
// complement of the diagonal-plus-rank-2 structure. Returns false when the
// point is infeasible or the structure degenerates (caller falls back).
bool fast_theta1_feasible(const FastPoint& fp, double m_mult, double alpha, double beta,
                          double gamma, double tail_a, double tail_b, double* violation) {
  const double c_a = fp.gi * alpha * gamma * tail_a;
  const double c_b = fp.gi * alpha * gamma * tail_b;

  // top-left block: -m I + c_a K~K~' + c_b E1 E1'; largest eigenvalue from
  // the 2x2 Gram pencil
  const double g11 = c_a * fp.kk, g22 = c_b * fp.ee;
  const double g12 = std::sqrt(std::max(c_a * c_b, 0.0)) * fp.ke;
  const double tr = 0.5 * (g11 + g22);
  const double det_disc = std::sqrt(0.25 * (g11 - g22) * (g11 - g22) + g12 * g12);
  const double shift_max = tr + det_disc;
  const double max_m11 = -m_mult + shift_max;
  if (!(max_m11 < -1e-12 * m_mult)) {
    if (violation) *violation = std::max(*violation, max_m11 / m_mult + 1.0e-12);
    return false;
  }

  // border column v = m PL + c_b e_last E1 and corner d = -beta e^{-2dh_o}
  // + c_b e_last^2; Schur condition d - v' M11^-1 v <= 0
  const double w = c_b * fp.e_last;
  const double vv = m_mult * m_mult * fp.pp + 2.0 * m_mult * w * fp.pe + w * w * fp.ee;
  const double vk = m_mult * fp.pk + w * fp.ke;
  const double ve = m_mult * fp.pe + w * fp.ee;

  // v' M11^-1 v by Woodbury on -m I + U C U' with U = [K~, E1]
  double quad = -vv / m_mult;
  const double tiny = 1e-300;
  if (c_a > tiny && c_b > tiny) {
    // G = C^-1 - U'U/m (2x2)
    const double ga = 1.0 / c_a - fp.kk / m_mult;
    const double gb = 1.0 / c_b - fp.ee / m_mult;
    const double gc = -fp.ke / m_mult;
    const double det = ga * gb - gc * gc;
    const double uk = vk, ue = ve;
    // (U'v)' G^-1 (U'v)
    const double quad2 = (gb * uk * uk - 2.0 * gc * uk * ue + ga * ue * ue) / det;
    quad -= quad2 / (m_mult * m_mult);
  } else if (c_a > tiny) {
    quad -= (vk * vk) / (m_mult * m_mult * (1.0 / c_a - fp.kk / m_mult));
  } else if (c_b > tiny) {
    quad -= (ve * ve) / (m_mult * m_mult * (1.0 / c_b - fp.ee / m_mult));
  }
  const double corner = -beta * fp.exp_ho + c_b * fp.e_last * fp.e_last;
  const double schur = corner - quad;
  if (violation && schur > 0.0) {
    *violation = std::max(*violation, schur / (1.0 + std::abs(corner)));
  }
  return schur <= 0.0;
}

}  // namespace

CertificateReport certify(const plant_spectral::PlantArtifacts& artifacts,
                          const synthesis::GainSet& gains, synthesis::DesignParameters params,
                          const SearchConfig& cfg) {
  if (params.n0 < 1) {
    fail(kModule, "certify", "BadDesign", "N0 must be resolved (>= 1) before certification");
  }
  const int n_start = params.n0 + 1;
  const int n_cap = std::min(cfg.n_max, artifacts.basis.size() - 1);
  if (n_start > n_cap) {
    fail(kModule, "certify", "BudgetExceeded", "no admissible observer order below n_max");
  }

  const bool neumann = params.variant == synthesis::Variant::NeumannOut;
  const std::vector<double> eps_values = neumann ? cfg.eps_values : std::vector<double>{0.125};

  CertificateReport best;
  best.status = CertificateReport::Status::Infeasible;
  best.variant = params.variant;
  best.n0 = params.n0;
  best.delta = params.delta;
  best.h_o = params.h_o;
  best.h_i = params.variant == synthesis::Variant::JointDelay ? params.h_i : 0.0;
  best.best_violation = std::numeric_limits<double>::infinity();

  for (int n = n_start; n <= n_cap; ++n) {
    params.n = n;

    // recipe seeds for the search window
    const double beta_seed = neumann ? std::pow(n, 0.125) : std::sqrt(static_cast<double>(n));
    const double gamma_seed = neumann ? std::pow(n, -3.0 / 16.0) : 1.0 / n;
    const Eigen::VectorXd beta_grid = log_grid(beta_seed, cfg.points_per_decade,
                                               cfg.decades_each_side);
    const Eigen::VectorXd gamma_grid = log_grid(gamma_seed, cfg.points_per_decade,
                                                cfg.decades_each_side);

    for (double eps : eps_values) {
      CertificateProblem problem;
      Eigen::MatrixXd p_lyap;
      try {
        problem = make_problem(artifacts, gains, params, eps);
        p_lyap = solve_lyapunov(problem.reduced.f, problem.delta);
      } catch (const Error& err) {
        if (err.kind() == "NotHurwitz") break;  // the same gains fail at every order
        if (err.kind() == "InsufficientModes" && n > n_start) {
          // the basis cannot support deeper escalation; stop with what we have
          return best;
        }
        throw;
      }
      const double residual = (problem.reduced.f.transpose() * p_lyap + p_lyap * problem.reduced.f +
                               2.0 * problem.delta * p_lyap +
                               Eigen::MatrixXd::Identity(p_lyap.rows(), p_lyap.cols()))
                                  .norm() /
                              p_lyap.norm();
      const FastPoint fp = precompute_fast(problem, p_lyap);

      const double m_phi_used = neumann ? problem.tails.m_phi_eps : problem.tails.m_phi;

      for (double alpha : cfg.alphas) {
        for (double m_mult : cfg.p_multipliers) {
          for (Eigen::Index ig = 0; ig < gamma_grid.size(); ++ig) {
            const double gamma = gamma_grid(ig);
            for (Eigen::Index ib = 0; ib < beta_grid.size(); ++ib) {
              const double beta = beta_grid(ib);
              const auto [theta2, theta3] =
                  evaluate_theta2_theta3(problem, alpha, beta, gamma, eps);
              if (theta2 > 0.0) {
                best.best_violation =
                    std::min(best.best_violation, theta2 / (1.0 + std::abs(theta2)));
                break;  // theta2 grows with beta on an ascending grid
              }
              if (neumann && theta3 < 0.0) continue;
              double violation = 0.0;
              if (!fast_theta1_feasible(fp, m_mult, alpha, beta, gamma, problem.tails.tail_a,
                                        problem.tails.tail_b, &violation)) {
                if (violation > 0.0) best.best_violation = std::min(best.best_violation, violation);
                continue;
              }

              // full evaluation of the candidate point
              const Eigen::MatrixXd p_scaled = m_mult * p_lyap;
              const Theta1Result t1 = evaluate_theta1(problem, p_scaled, alpha, beta, gamma);
              const double tol1 = 1e-9 * (1.0 + t1.matrix.norm());
              if (t1.max_eig > tol1) continue;

              CertificateReport report = best;
              report.status = CertificateReport::Status::Certified;
              report.n = n;
              report.alpha = alpha;
              report.beta = beta;
              report.gamma = gamma;
              report.eps = neumann ? eps : 0.0;
              report.p_multiplier = m_mult;
              report.p_matrix = p_scaled;
              report.theta1_max_eig = t1.max_eig;
              report.theta2 = theta2;
              report.theta3 = neumann ? theta3 : 0.0;
              report.lyap_residual = residual;
              report.lambda_next = problem.lambda_next;
              report.q_c = problem.q_c;
              report.tail_a = problem.tails.tail_a;
              report.tail_b = problem.tails.tail_b;
              report.m_phi_used = m_phi_used;
              if (params.variant == synthesis::Variant::JointDelay) {
                report.q1 = default_q1(problem, alpha, gamma);
                report.q2 = default_q2(problem, alpha, gamma);
                report.r1_max_eig =
                    jacobi_max_eigenvalue(residual_r1(problem, alpha, gamma, report.q1));
                report.r2 = residual_r2(problem, alpha, gamma, report.q2);
              }
              report.best_violation = 0.0;
              return report;
            }
          }
        }
      }
      best.n = n;  // deepest order examined
    }
  }
  return best;
}

bool revalidate(const CertificateReport& report, const CertificateProblem& problem,
                std::string* why) {
  auto reject = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (report.status != CertificateReport::Status::Certified) return reject("not certified");
  if (!(report.alpha > 1.0 && report.beta > 0.0 && report.gamma > 0.0)) {
    return reject("scalar positivity");
  }
  const Eigen::MatrixXd& p = report.p_matrix;
  const Eigen::VectorXd p_eigs = jacobi_eigenvalues(p);
  if (!(p_eigs.minCoeff() > 0.0)) return reject("P not positive definite");

  const bool neumann = problem.variant() == synthesis::Variant::NeumannOut;
  const bool joint = problem.variant() == synthesis::Variant::JointDelay;
  Eigen::MatrixXd q1;
  double q2 = 0.0;
  if (joint) {
    q1 = report.q1;
    q2 = report.q2;
  } else {
    q1 = joint_gain(problem) * report.alpha * report.gamma * problem.tails.tail_a *
         problem.k.transpose() * problem.k;
    q2 = joint_gain(problem) * report.alpha * report.gamma * problem.tails.tail_b;
  }
  const Eigen::MatrixXd theta1 = theta1_matrix(problem, p, report.beta, q1, q2);
  const double max1 = jacobi_max_eigenvalue(theta1);
  if (max1 > 1e-9 * (1.0 + theta1.norm())) return reject("theta1 not PSD-negative");

  const auto [theta2, theta3] =
      evaluate_theta2_theta3(problem, report.alpha, report.beta, report.gamma, report.eps);
  if (theta2 > 0.0) return reject("theta2 positive");
  if (neumann && theta3 < 0.0) return reject("theta3 negative");
  if (joint) {
    const double r1 = jacobi_max_eigenvalue(residual_r1(problem, report.alpha, report.gamma, q1));
    const double r2 = residual_r2(problem, report.alpha, report.gamma, q2);
    const double scale = 1.0 + q1.norm() + std::abs(q2);
    if (r1 > 1e-9 * scale || r2 > 1e-9 * scale) return reject("R conditions violated");
  }
  return true;
}

std::vector<std::pair<int, double>> p_boundedness_study(
    const plant_spectral::PlantArtifacts& artifacts, const synthesis::GainSet& gains,
    synthesis::DesignParameters params, int n_lo, int n_hi) {
  std::vector<std::pair<int, double>> table;
  for (int n = n_lo; n <= n_hi; ++n) {
    params.n = n;
    const auto red = synthesis::assemble_reduced(artifacts, gains, params);
    const Eigen::MatrixXd p = solve_lyapunov(red.f, params.delta);
    const Eigen::VectorXd eigs = jacobi_eigenvalues(p);
    table.emplace_back(n, std::max(std::abs(eigs.minCoeff()), std::abs(eigs.maxCoeff())));
  }
  return table;
}

}  // namespace delaystab::certification
