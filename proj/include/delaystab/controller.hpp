#pragma once

#include <Eigen/Dense>
#include <deque>

#include "delaystab/synthesis.hpp"

namespace delaystab::controller_runtime {

/// Ring of (time, value) samples with linear interpolation. Queries at or
/// before the start of recorded history return the configured pre-history
/// value (the command held in negative time).
class HistoryBuffer {
public:
  HistoryBuffer() = default;
  HistoryBuffer(double span, double pre_value, double t0);

  void push(double t, double value);
  double query(double t) const;
  double latest_time() const;
  double span() const { return span_; }

private:
  std::deque<std::pair<double, double>> samples_;
  double span_ = 0.0;
  double pre_value_ = 0.0;
  double t0_ = 0.0;
};

/// Observer + predictor state. Single owner; mutated by step_controller only.
struct ControllerState {
  Eigen::VectorXd zhat;       // observer modes, n = 1..N
  Eigen::VectorXd phi_state;  // predictor integral state, length N0
  HistoryBuffer u_hist;
  double t = 0.0;
  double dt = 0.0;
  synthesis::ReducedMatrices matrices;
  synthesis::GainSet gains;
  Eigen::VectorXd b_n;        // change-of-variable coefficients, n = 1..N
  Eigen::VectorXd beta_n;     // input coefficients, n = 1..N
  Eigen::VectorXd trace_row;  // phi_k(0) or phi_k'(0), k = 1..N
  double u = 0.0;             // latest command

  // The phi ODE carries the open-loop dynamics of A0, so integration noise
  // grows at the unstable rate and is invisible to the feedback. Re-anchoring
  // phi to its defining integral every resync_stride steps keeps the
  // realization faithful over long horizons. 0 disables.
  int resync_stride = 0;
  int steps_since_resync = 0;

  int n() const { return static_cast<int>(zhat.size()); }
  int n0() const { return static_cast<int>(phi_state.size()); }
  double horizon() const { return matrices.delay_horizon; }

  /// Predicted modal state e^{A0 H} Zhat^{N0} + phi.
  Eigen::VectorXd predicted_state() const;
};

/// Startup: phi(0) = int_{-H}^0 e^{-A0 s} B0 u0 ds in closed form, observer
/// modes from the minimum-norm compatibility solve (zero when u0 = 0), upper
/// modes at rest; checks u(0) = K Zhat_A(0) = u0.
ControllerState init_controller(const plant_spectral::PlantArtifacts& artifacts,
                                const synthesis::ReducedMatrices& matrices,
                                const synthesis::GainSet& gains, double u0, double dt);

/// One RK4 step of the coupled observer/predictor ODEs driven by the
/// measurement sample (held over the step) and the delayed command from the
/// internal history. Returns the new command u(t + dt).
double step_controller(ControllerState& state, double y_meas, double dt);

/// RK4 step with the measurement sampled at the stage times t, t + dt/2 and
/// t + dt; the co-simulation harness can serve all three causally.
double step_controller(ControllerState& state, double y_t, double y_mid, double y_next, double dt);

/// The delayed-input integral of the predictor, evaluated from the command
/// history by per-interval Simpson quadrature (the history interpolant is
/// integrated essentially exactly).
Eigen::VectorXd artstein_integral(const ControllerState& state);

/// Predictor cross-check: the quadrature value of the delayed-input integral
/// against the phi-state realization; returns a relative discrepancy.
double artstein_quadrature_check(const ControllerState& state);

}  // namespace delaystab::controller_runtime
