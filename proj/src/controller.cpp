#include "delaystab/controller.hpp"

#include <cmath>

namespace delaystab::controller_runtime {

namespace {
constexpr const char* kModule = "controller_runtime";
}

HistoryBuffer::HistoryBuffer(double span, double pre_value, double t0)
    : span_(span), pre_value_(pre_value), t0_(t0) {}

void HistoryBuffer::push(double t, double value) {
  if (!samples_.empty() && !(t > samples_.back().first)) {
    fail(kModule, "history_push", "NonMonotoneTime", "timestamps must increase");
  }
  samples_.emplace_back(t, value);
  // retain a little beyond the horizon for interpolation at the left edge
  const double keep_from = t - span_ - 10.0 * (samples_.size() > 1
                                                   ? samples_[1].first - samples_[0].first
                                                   : 0.0);
  while (samples_.size() > 2 && samples_[1].first < keep_from) samples_.pop_front();
}

double HistoryBuffer::latest_time() const {
  return samples_.empty() ? t0_ : samples_.back().first;
}

double HistoryBuffer::query(double t) const {
  if (t <= t0_ || samples_.empty()) return pre_value_;
  if (t <= samples_.front().first) {
    // between the pre-history value at t0 and the first retained sample
    const auto& [tf, vf] = samples_.front();
    if (tf <= t0_) return vf;
    const double w = (t - t0_) / (tf - t0_);
    return (1.0 - w) * pre_value_ + w * vf;
  }
  if (t > samples_.back().first + 1e-12) {
    fail(kModule, "history_query", "BufferUnderrun",
         "query at t=" + std::to_string(t) + " beyond latest sample " +
             std::to_string(samples_.back().first));
  }
  // binary search for the bracketing pair
  size_t lo = 0, hi = samples_.size() - 1;
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (samples_[mid].first < t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const auto& [ta, va] = samples_[lo];
  const auto& [tb, vb] = samples_[hi];
  if (t >= tb) return vb;
  const double w = (t - ta) / (tb - ta);
  return (1.0 - w) * va + w * vb;
}

Eigen::VectorXd ControllerState::predicted_state() const {
  const int m = n0();
  Eigen::VectorXd za(m);
  for (int i = 0; i < m; ++i) za(i) = matrices.exp_a0h(i) * zhat(i) + phi_state(i);
  return za;
}

ControllerState init_controller(const plant_spectral::PlantArtifacts& artifacts,
                                const synthesis::ReducedMatrices& matrices,
                                const synthesis::GainSet& gains, double u0, double dt) {
  if (gains.k.norm() == 0.0) fail(kModule, "init_controller", "ZeroGain", "K must be nonzero");
  if (!(dt > 0.0)) fail(kModule, "init_controller", "BadStep", "dt must be positive");
  if (matrices.variant == synthesis::Variant::JointDelay && u0 != 0.0) {
    fail(kModule, "init_controller", "BadStartup",
         "joint-delay runs start from zero command history (u0 must be 0)");
  }

  ControllerState state;
  state.matrices = matrices;
  state.gains = gains;
  const int n = matrices.n;
  state.b_n.resize(n);
  state.beta_n.resize(n);
  state.trace_row.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& mode = artifacts.basis.mode(i + 1);
    state.b_n(i) = artifacts.coeffs.b_n(i);
    state.beta_n(i) = artifacts.coeffs.beta.trace(i);
    state.trace_row(i) =
        matrices.variant == synthesis::Variant::NeumannOut ? mode.dphi0 : mode.phi0;
  }

  const double h = matrices.delay_horizon;
  state.zhat = Eigen::VectorXd::Zero(n);
  if (u0 != 0.0) {
    state.zhat.segment(0, matrices.n0) =
        synthesis::initial_observer_state(u0, gains, matrices.a0, matrices.b0, h);
  }
  state.phi_state =
      (synthesis::exp_integral(matrices.a0, h).array() * matrices.b0.array()).matrix() * u0;
  state.t = 0.0;

  state.dt = dt;
  state.resync_stride = std::max(1, static_cast<int>(std::lround(0.1 / dt)));

  const double pre_value = matrices.variant == synthesis::Variant::JointDelay ? 0.0 : u0;
  state.u_hist = HistoryBuffer(h, pre_value, 0.0);
  state.u = gains.k.dot(state.predicted_state());
  if (std::abs(state.u - u0) > 1e-10 * (1.0 + std::abs(u0))) {
    fail(kModule, "init_controller", "StartupMismatch",
         "u(0) = " + std::to_string(state.u) + " != u0 = " + std::to_string(u0));
  }
  state.u_hist.push(0.0, state.u);
  return state;
}

namespace {

// time derivative of (zhat, phi) at controller time tau, with the
// measurement held at y_meas
void controller_rhs(const ControllerState& state, const Eigen::VectorXd& zhat,
                    const Eigen::VectorXd& phi, double tau, double y_meas,
                    Eigen::VectorXd& dzhat, Eigen::VectorXd& dphi) {
  const auto& red = state.matrices;
  const int n = red.n;
  const int n0 = red.n0;
  const double h = red.delay_horizon;
  const double u_del = state.u_hist.query(tau - h);

  // innovation against the truncated output series
  double innovation = -y_meas;
  for (int i = 0; i < n; ++i) {
    innovation += (zhat(i) + state.b_n(i) * u_del) * state.trace_row(i);
  }

  dzhat.resize(n);
  for (int i = 0; i < n0; ++i) {
    dzhat(i) = red.a0(i) * zhat(i) + state.beta_n(i) * u_del - state.gains.l(i) * innovation;
  }
  for (int i = n0; i < n; ++i) {
    dzhat(i) = red.a1(i - n0) * zhat(i) + state.beta_n(i) * u_del;
  }

  // phi' = A0 phi + B0 K Zhat_A - e^{A0 H} B0 u(t-H)
  Eigen::VectorXd za(n0);
  for (int i = 0; i < n0; ++i) za(i) = red.exp_a0h(i) * zhat(i) + phi(i);
  const double u_now = state.gains.k.dot(za);
  dphi.resize(n0);
  for (int i = 0; i < n0; ++i) {
    dphi(i) = red.a0(i) * phi(i) + red.b0(i) * u_now - red.exp_a0h(i) * red.b0(i) * u_del;
  }
}

}  // namespace

double step_controller(ControllerState& state, double y_t, double y_mid, double y_next,
                       double dt) {
  if (!(dt > 0.0)) fail(kModule, "step_controller", "BadStep", "dt must be positive");
  state.dt = dt;
  // re-anchor the predictor state to its defining integral while the command
  // history is complete through the current time
  if (state.resync_stride > 0 && state.steps_since_resync >= state.resync_stride) {
    state.phi_state = artstein_integral(state);
    state.steps_since_resync = 0;
  }
  const int n = state.n();
  const int n0 = state.n0();

  Eigen::VectorXd k1z(n), k2z(n), k3z(n), k4z(n);
  Eigen::VectorXd k1p(n0), k2p(n0), k3p(n0), k4p(n0);
  const double t = state.t;

  controller_rhs(state, state.zhat, state.phi_state, t, y_t, k1z, k1p);
  controller_rhs(state, state.zhat + 0.5 * dt * k1z, state.phi_state + 0.5 * dt * k1p,
                 t + 0.5 * dt, y_mid, k2z, k2p);
  controller_rhs(state, state.zhat + 0.5 * dt * k2z, state.phi_state + 0.5 * dt * k2p,
                 t + 0.5 * dt, y_mid, k3z, k3p);
  controller_rhs(state, state.zhat + dt * k3z, state.phi_state + dt * k3p, t + dt, y_next, k4z,
                 k4p);

  state.zhat += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
  state.phi_state += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  state.t = t + dt;
  ++state.steps_since_resync;

  state.u = state.gains.k.dot(state.predicted_state());
  state.u_hist.push(state.t, state.u);
  return state.u;
}

double step_controller(ControllerState& state, double y_meas, double dt) {
  return step_controller(state, y_meas, y_meas, y_meas, dt);
}

Eigen::VectorXd artstein_integral(const ControllerState& state) {
  const auto& red = state.matrices;
  const double h = red.delay_horizon;
  const double t = state.t;
  const double dq = state.dt > 0.0 ? state.dt : h / 2048.0;
  const int steps = std::max(2, static_cast<int>(std::lround(h / dq)));
  const double step = h / steps;

  // integral over [t-H, t] of e^{A0 (t-s)} B0 u(s) ds; Simpson on each
  // history interval integrates the linear interpolant exactly
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(red.n0);
  for (int k = 0; k < steps; ++k) {
    const double s0 = t - h + k * step;
    const double s1 = s0 + step;
    const double sm = 0.5 * (s0 + s1);
    const double u0 = state.u_hist.query(s0);
    const double um = state.u_hist.query(sm);
    const double u1 = state.u_hist.query(s1);
    for (int i = 0; i < red.n0; ++i) {
      const double a = red.a0(i);
      integral(i) += step / 6.0 * red.b0(i) *
                     (std::exp(a * (t - s0)) * u0 + 4.0 * std::exp(a * (t - sm)) * um +
                      std::exp(a * (t - s1)) * u1);
    }
  }
  return integral;
}

double artstein_quadrature_check(const ControllerState& state) {
  const Eigen::VectorXd integral = artstein_integral(state);
  return (integral - state.phi_state).norm() / (1.0 + integral.norm());
}

}  // namespace delaystab::controller_runtime
