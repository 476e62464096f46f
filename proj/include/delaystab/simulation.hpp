#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "delaystab/certification.hpp"
#include "delaystab/controller.hpp"
#include "delaystab/expressions.hpp"
#include "delaystab/spectral.hpp"
#include "delaystab/synthesis.hpp"

namespace delaystab::simulation {

enum class PlantKind { Modal, FiniteDifference };

/// Modal realization: decoupled coordinates with exact exponential steps.
struct ModalPlant {
  Eigen::VectorXd mu;    // -lambda_n + q_c
  Eigen::VectorXd beta;  // input coefficients
  Eigen::VectorXd z;     // modal coordinates
  double t = 0.0;

  /// One step with the command held constant:
  /// z_n <- e^{mu dt} z_n + (e^{mu dt} - 1)/mu * beta_n u.
  void step(double u, double dt);
};

/// Crank-Nicolson method-of-lines realization with Robin boundary closure;
/// the command enters through the x = 1 boundary row.
class FDPlant {
public:
  FDPlant(const plant_spectral::PlantSpec& plant, int grid_size, double dt);

  void step(double u);
  const Eigen::VectorXd& profile() const { return z_; }
  Eigen::VectorXd& profile() { return z_; }
  double t = 0.0;
  double dx() const { return dx_; }

private:
  int size_ = 0;   // active ODE nodes
  int lo_ = 0;     // first active grid index
  double dx_ = 0.0;
  double dt_ = 0.0;
  bool dirichlet_right_ = false;
  Eigen::VectorXd z_;  // full grid profile (boundary values included)
  // tridiagonal bands of I -/+ dt/2 L and the command forcing
  Eigen::VectorXd lhs_low_, lhs_diag_, lhs_up_;
  Eigen::VectorXd rhs_low_, rhs_diag_, rhs_up_;
  Eigen::VectorXd forcing_;
};

struct Scenario {
  const plant_spectral::PlantArtifacts* artifacts = nullptr;
  synthesis::DesignParameters design;
  synthesis::GainSet gains;
  io_cli::ExprFunction z0;
  io_cli::ExprFunction y0;  // measurement history on [-h_o, 0]
  double t_final = 15.0;
  double dt = 1e-3;
  PlantKind plant_kind = PlantKind::Modal;
  int m_modes_sim = 0;  // 0: max(60, 4N) modal coordinates
  int record_stride = 1;
  bool open_loop = false;  // hold u = 0 and skip the controller
  bool keep_profiles = false;
  double lipschitz_bound = 1e4;
};

struct SimulationTrace {
  // record-grid fields
  Eigen::VectorXd t, u, y, h1, l2, zeta, v, v0, v1, tail_energy;
  Eigen::MatrixXd zhat;  // rows = records, cols = N (zero when open loop)
  Eigen::MatrixXd e;     // observation errors; NaN before t = h
  Eigen::MatrixXd phi;   // predictor integral state per record
  std::vector<Eigen::VectorXd> profiles;  // filled when keep_profiles

  // full-resolution companions for the delayed-integral evaluations
  Eigen::VectorXd u_full, zeta_full;
  double dt_full = 0.0;

  int n = 0, n0 = 0;
  double h_meas = 0.0;     // measurement delay
  double horizon = 0.0;    // predictor horizon (h or h_i + h_o)
  PlantKind plant_kind = PlantKind::Modal;
  double artstein_max_discrepancy = 0.0;
};

/// Co-simulates the plant and the controller on a shared step. The
/// measurement port serves y0(t-h) until t = h and the buffered plant trace
/// afterwards; the joint variant feeds the plant u(t-h_i).
SimulationTrace run_closed_loop(const Scenario& scenario);

double l2_norm(const Eigen::VectorXd& profile, double dx);

/// Trapezoid H1 norm of a sampled profile, centered interior differences and
/// one-sided ends.
double h1_norm(const Eigen::VectorXd& profile, double dx);

struct LyapunovReport {
  double max_drift = 0.0;  // worst relative increase of e^{2 delta (t-h)} V(t)
  int samples = 0;
};

/// Fills V, V0, V1 on the record grid from a certified report and reports the
/// worst relative increase of the decay-weighted functional.
LyapunovReport lyapunov_trace(SimulationTrace& trace,
                              const certification::CertificateReport& report,
                              const synthesis::ReducedMatrices& reduced);

struct FitResult {
  double rate = 0.0;  // decay rate (negated log-slope)
  double rms_residual = 0.0;
};

/// Least squares exponential rate of a positive trace field over [t_start, T].
FitResult fit_decay_rate(const Eigen::VectorXd& t, const Eigen::VectorXd& field, double t_start);

void write_trace_csv(const SimulationTrace& trace, const std::string& path);
void write_profiles_csv(const SimulationTrace& trace, const Eigen::VectorXd& grid,
                        const std::string& path);

}  // namespace delaystab::simulation
