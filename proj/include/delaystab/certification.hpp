#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "delaystab/spectral.hpp"
#include "delaystab/synthesis.hpp"

namespace delaystab::certification {

/// Data of one feasibility check at a fixed observer order.
struct CertificateProblem {
  synthesis::ReducedMatrices reduced;
  Eigen::RowVectorXd k;  // feedback gain row (drives the joint-delay defaults)
  double delta = 0.0;
  plant_spectral::TailQuantities tails;
  double lambda_next = 0.0;  // lambda_{N+1}
  double q_c = 0.0;
  double h_i = 0.0;
  double h_o = 0.0;

  synthesis::Variant variant() const { return reduced.variant; }
};

struct CertificateReport {
  enum class Status { Certified, Infeasible };
  Status status = Status::Infeasible;
  synthesis::Variant variant = synthesis::Variant::DirichletOut;
  int n = 0;
  int n0 = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double eps = 0.0;          // Neumann only
  double p_multiplier = 1.0;
  Eigen::MatrixXd p_matrix;  // the P actually certified (multiplier applied)
  Eigen::MatrixXd q1;        // joint only, N0 x N0
  double q2 = 0.0;           // joint only
  double theta1_max_eig = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;       // Neumann only
  double r1_max_eig = 0.0;   // joint only
  double r2 = 0.0;           // joint only
  double lyap_residual = 0.0;  // ||F'P + PF + 2dP + m I||_F / ||P||_F
  double delta = 0.0, h_o = 0.0, h_i = 0.0;
  double lambda_next = 0.0, q_c = 0.0, tail_a = 0.0, tail_b = 0.0;
  double m_phi_used = 0.0;   // M_phi or M_phi(eps), whichever the variant needs
  double best_violation = 0.0;  // least violation seen when infeasible
};

/// P > 0 with F'P + P F + 2 delta P = -I, by real Schur reduction and block
/// back-substitution. Throws NotHurwitz / IllConditioned.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f, double delta);

/// The bordered feasibility matrix with an explicit N0 x N0 top-left addition
/// and scalar weight on E'E. Building block shared by every variant.
Eigen::MatrixXd theta1_matrix(const CertificateProblem& problem, const Eigen::MatrixXd& p,
                              double beta, const Eigen::MatrixXd& q1_block, double q2_scalar);

struct Theta1Result {
  Eigen::MatrixXd matrix;
  double max_eig = 0.0;
};

/// Variant-default evaluation: tail-norm weighted rank terms for the
/// single-delay variants, the zero-residue choice of Q1/Q2 for joint delays.
Theta1Result evaluate_theta1(const CertificateProblem& problem, const Eigen::MatrixXd& p,
                             double alpha, double beta, double gamma);

/// (Theta2, Theta3); Theta3 is meaningful for the Neumann variant only and
/// reported as +inf otherwise. eps is ignored outside the Neumann variant.
std::pair<double, double> evaluate_theta2_theta3(const CertificateProblem& problem, double alpha,
                                                 double beta, double gamma, double eps);

/// Default Q1/Q2 of the joint variant (zero residual by construction).
Eigen::MatrixXd default_q1(const CertificateProblem& problem, double alpha, double gamma);
double default_q2(const CertificateProblem& problem, double alpha, double gamma);

/// R1 = -e^{-2 delta h_i} Q1 + alpha gamma ||R_N a||^2 K'K  (N0 x N0)
/// r2 = -e^{-2 delta h_i} Q2 + alpha gamma ||R_N b||^2      (scalar)
Eigen::MatrixXd residual_r1(const CertificateProblem& problem, double alpha, double gamma,
                            const Eigen::MatrixXd& q1);
double residual_r2(const CertificateProblem& problem, double alpha, double gamma, double q2);

struct SearchConfig {
  int n_max = 40;
  int points_per_decade = 13;
  double decades_each_side = 4.0;
  std::vector<double> alphas = {1.5, 2.0, 4.0, 8.0};
  std::vector<double> p_multipliers = {1.0, 0.1, 10.0, 0.01, 100.0, 1e-3, 1e3};
  std::vector<double> eps_values = {0.125, 0.25, 0.5};
};

/// Builds the problem data for one observer order N.
CertificateProblem make_problem(const plant_spectral::PlantArtifacts& artifacts,
                                const synthesis::GainSet& gains,
                                synthesis::DesignParameters params, double eps);

/// Escalates N = N0+1, N0+2, ... and grid-searches (alpha, beta, gamma[, eps])
/// around the proof recipe at each order; P is the Lyapunov solution times a
/// scalar multiplier. Returns the first certified point in grid order, or an
/// Infeasible report carrying the least-violating point seen.
CertificateReport certify(const plant_spectral::PlantArtifacts& artifacts,
                          const synthesis::GainSet& gains, synthesis::DesignParameters params,
                          const SearchConfig& cfg);

/// Re-evaluates every condition from the values stored in a report.
bool revalidate(const CertificateReport& report, const CertificateProblem& problem,
                std::string* why = nullptr);

/// Spectral norms of the Lyapunov solutions across a range of orders.
std::vector<std::pair<int, double>> p_boundedness_study(
    const plant_spectral::PlantArtifacts& artifacts, const synthesis::GainSet& gains,
    synthesis::DesignParameters params, int n_lo, int n_hi);

}  // namespace delaystab::certification
