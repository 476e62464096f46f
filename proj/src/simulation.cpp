#include "delaystab/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "delaystab/numerics.hpp"

namespace delaystab::simulation {

namespace {
constexpr const char* kModule = "simulation";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

void ModalPlant::step(double u, double dt) {
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double e = std::exp(mu(i) * dt);
    const double phase = std::abs(mu(i)) < 1e-14 ? dt : (e - 1.0) / mu(i);
    z(i) = e * z(i) + phase * beta(i) * u;
  }
  t += dt;
}

FDPlant::FDPlant(const plant_spectral::PlantSpec& plant, int grid_size, double dt)
    : dt_(dt) {
  if (grid_size < 9) fail(kModule, "step_fd", "BadGrid", "grid too small");
  const Eigen::VectorXd grid = uniform_grid(grid_size);
  dx_ = grid(1) - grid(0);
  const double s1 = plant.s1(), c1 = plant.c1(), s2 = plant.s2(), c2 = plant.c2();
  const bool keep0 = s1 != 0.0;
  dirichlet_right_ = s2 == 0.0;
  lo_ = keep0 ? 0 : 1;
  const int hi = dirichlet_right_ ? grid_size - 2 : grid_size - 1;
  size_ = hi - lo_ + 1;
  z_ = Eigen::VectorXd::Zero(grid_size);

  // semi-discrete bands of L: dz/dt = L z + forcing * u
  Eigen::VectorXd low = Eigen::VectorXd::Zero(size_);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(size_);
  Eigen::VectorXd up = Eigen::VectorXd::Zero(size_);
  forcing_ = Eigen::VectorXd::Zero(size_);

  auto p_mid = [&](int i) { return plant.p.eval(0.5 * (grid(i) + grid(i + 1))); };
  for (int i = lo_; i <= hi; ++i) {
    const int r = i - lo_;
    const double q = plant.q_tilde.eval(grid(i));
    if (i == 0) {
      // half-cell with the Robin flux p(0) z_x(0) = p(0) (c1/s1) z(0)
      const double pr = p_mid(0);
      diag(r) = -2.0 * pr / (dx_ * dx_) - 2.0 * plant.p.eval(0.0) * (c1 / s1) / dx_ - q;
      up(r) = 2.0 * pr / (dx_ * dx_);
    } else if (i == grid_size - 1) {
      // half-cell with the commanded flux p(1) z_x(1) = p(1)(u - c2 z(1))/s2
      const double pl = p_mid(grid_size - 2);
      diag(r) = -2.0 * pl / (dx_ * dx_) - 2.0 * plant.p.eval(1.0) * (c2 / s2) / dx_ - q;
      low(r) = 2.0 * pl / (dx_ * dx_);
      forcing_(r) = 2.0 * plant.p.eval(1.0) / (s2 * dx_);
    } else {
      const double pl = p_mid(i - 1), pr = p_mid(i);
      diag(r) = -(pl + pr) / (dx_ * dx_) - q;
      if (i - 1 >= lo_) low(r) = pl / (dx_ * dx_);
      if (i + 1 <= hi) {
        up(r) = pr / (dx_ * dx_);
      } else {
        // right neighbour is the commanded Dirichlet value
        forcing_(r) = pr / (dx_ * dx_);
      }
    }
  }

  lhs_low_ = -0.5 * dt * low;
  lhs_diag_ = Eigen::VectorXd::Ones(size_) - 0.5 * dt * diag;
  lhs_up_ = -0.5 * dt * up;
  rhs_low_ = 0.5 * dt * low;
  rhs_diag_ = Eigen::VectorXd::Ones(size_) + 0.5 * dt * diag;
  rhs_up_ = 0.5 * dt * up;
}

void FDPlant::step(double u) {
  Eigen::VectorXd r(size_);
  for (int i = 0; i < size_; ++i) {
    double v = rhs_diag_(i) * z_(lo_ + i);
    if (i > 0) v += rhs_low_(i) * z_(lo_ + i - 1);
    if (i + 1 < size_) v += rhs_up_(i) * z_(lo_ + i + 1);
    r(i) = v + dt_ * forcing_(i) * u;
  }
  // Thomas solve; the CN matrix is strictly diagonally dominant
  Eigen::VectorXd cp(size_), dp(size_);
  cp(0) = lhs_up_(0) / lhs_diag_(0);
  dp(0) = r(0) / lhs_diag_(0);
  for (int i = 1; i < size_; ++i) {
    const double denom = lhs_diag_(i) - lhs_low_(i) * cp(i - 1);
    cp(i) = (i + 1 < size_) ? lhs_up_(i) / denom : 0.0;
    dp(i) = (r(i) - lhs_low_(i) * dp(i - 1)) / denom;
  }
  z_(lo_ + size_ - 1) = dp(size_ - 1);
  for (int i = size_ - 2; i >= 0; --i) z_(lo_ + i) = dp(i) - cp(i) * z_(lo_ + i + 1);

  if (lo_ == 1) z_(0) = 0.0;
  if (dirichlet_right_) z_(z_.size() - 1) = u;
  t += dt_;
}

double l2_norm(const Eigen::VectorXd& profile, double dx) {
  return std::sqrt(trapezoid((profile.array() * profile.array()).matrix(), dx));
}

double h1_norm(const Eigen::VectorXd& profile, double dx) {
  if (profile.size() < 3) fail(kModule, "h1_norm", "BadGrid", "need at least three points");
  const Eigen::VectorXd d = grid_derivative(profile, dx);
  return std::sqrt(trapezoid((profile.array() * profile.array() + d.array() * d.array()).matrix(),
                             dx));
}

namespace {

struct MeasurementPort {
  const Eigen::VectorXd* raw = nullptr;  // plant boundary trace per step
  const io_cli::ExprFunction* y0 = nullptr;
  double h = 0.0;
  double dt = 0.0;
  int filled = 0;  // samples available in raw

  double serve(double t_now) const {
    const double t_del = t_now - h;
    if (t_del <= 0.0) return y0->eval(t_del);
    const double idx = t_del / dt;
    const int k = std::min<int>(static_cast<int>(idx), filled - 1);
    const int k1 = std::min(k + 1, filled - 1);
    const double w = idx - k;
    return (1.0 - w) * (*raw)(k) + w * (*raw)(k1);
  }
};

}  // namespace

SimulationTrace run_closed_loop(const Scenario& scenario) {
  if (scenario.artifacts == nullptr) {
    fail(kModule, "run_closed_loop", "BadScenario", "missing plant artifacts");
  }
  const auto& art = *scenario.artifacts;
  const auto& design = scenario.design;
  const auto& plant = art.spec;
  const bool joint = design.variant == synthesis::Variant::JointDelay;
  const bool neumann_meas = design.variant == synthesis::Variant::NeumannOut;
  const double h = design.h_o;
  const double dt = scenario.dt;

  // ---- compatibility of the initial data ----
  std::vector<std::string> violations;
  const double z00 = scenario.z0.eval(0.0), dz00 = scenario.z0.deriv(0.0);
  const double z01 = scenario.z0.eval(1.0), dz01 = scenario.z0.deriv(1.0);
  const double bc0 = plant.c1() * z00 - plant.s1() * dz00;
  if (std::abs(bc0) > 1e-8 * (1.0 + std::abs(z00) + std::abs(dz00))) {
    violations.push_back("z0 violates the x=0 boundary condition (residual " +
                         std::to_string(bc0) + ")");
  }
  double u0 = plant.c2() * z01 + plant.s2() * dz01;
  if ((joint || scenario.open_loop) && std::abs(u0) > 1e-8 * (1.0 + std::abs(z01))) {
    violations.push_back("zero-command start requires c2 z0(1) + s2 z0'(1) = 0, got " +
                         std::to_string(u0));
  }
  const double y0_at0 = scenario.y0.eval(0.0);
  const double trace0 = neumann_meas ? dz00 : z00;
  if (std::abs(y0_at0 - trace0) > 1e-8 * (1.0 + std::abs(trace0))) {
    violations.push_back("y0(0) != initial boundary trace (" + std::to_string(y0_at0) + " vs " +
                         std::to_string(trace0) + ")");
  }
  {
    double worst = 0.0;
    double prev = scenario.y0.eval(-h);
    for (double s = -h + dt; s <= 1e-12; s += dt) {
      const double cur = scenario.y0.eval(s);
      worst = std::max(worst, std::abs(cur - prev) / dt);
      prev = cur;
    }
    if (worst > scenario.lipschitz_bound) {
      violations.push_back("y0 difference quotient " + std::to_string(worst) +
                           " exceeds the Lipschitz bound");
    }
  }
  if (!(dt > 0.0) || !(scenario.t_final > 0.0)) violations.push_back("need dt > 0 and T > 0");
  if (dt > h) violations.push_back("dt must not exceed the measurement delay");

  const int n = scenario.open_loop ? 0 : design.n;
  const int n0 = scenario.open_loop ? 0 : design.n0;
  int m_sim = scenario.m_modes_sim > 0 ? scenario.m_modes_sim : std::max(60, 4 * n);
  if (scenario.plant_kind == PlantKind::Modal) {
    if (m_sim > art.basis.size()) {
      violations.push_back("m_modes_sim exceeds the computed basis size");
    }
    if (n > 0 && m_sim < 4 * n) {
      violations.push_back("modal truncation must satisfy m_modes_sim >= 4 N");
    }
  }
  if (!violations.empty()) {
    std::string all;
    for (const auto& v : violations) all += (all.empty() ? "" : "; ") + v;
    fail(kModule, "run_closed_loop", "IncompatibleInitialData", all);
  }
  if (joint || scenario.open_loop) u0 = 0.0;

  // ---- set up plant, controller, ports ----
  const Eigen::VectorXd& grid = art.basis.grid;
  const double dx = art.basis.dx();
  const int steps = static_cast<int>(std::lround(scenario.t_final / dt));
  const int stride = std::max(1, scenario.record_stride);
  const int records = steps / stride + 1;

  synthesis::ReducedMatrices reduced;
  controller_runtime::ControllerState ctl;
  if (!scenario.open_loop) {
    reduced = synthesis::assemble_reduced(art, scenario.gains, design);
    ctl = controller_runtime::init_controller(art, reduced, scenario.gains, u0, dt);
  }

  const double lift_denom = plant.c2() + 2.0 * plant.s2();
  const Eigen::VectorXd z0_samples = scenario.z0.sample(grid);

  ModalPlant modal;
  std::unique_ptr<FDPlant> fd;
  Eigen::MatrixXd phi_cols;      // grid x m_sim reconstruction matrix (modal)
  Eigen::VectorXd trace_row_all; // phi_n(0) or phi_n'(0), n = 1..m_sim
  Eigen::VectorXd b_all, lam_all;
  if (scenario.plant_kind == PlantKind::Modal) {
    modal.mu.resize(m_sim);
    modal.beta.resize(m_sim);
    modal.z.resize(m_sim);
    phi_cols.resize(grid.size(), m_sim);
    trace_row_all.resize(m_sim);
    b_all.resize(m_sim);
    lam_all.resize(m_sim);
    for (int i = 0; i < m_sim; ++i) {
      const auto& mode = art.basis.mode(i + 1);
      modal.mu(i) = -mode.lambda + art.split.q_c;
      modal.beta(i) = art.coeffs.beta.trace(i);
      modal.z(i) = l2_inner(z0_samples, mode.phi, dx);
      phi_cols.col(i) = mode.phi;
      trace_row_all(i) = neumann_meas ? mode.dphi0 : mode.phi0;
      b_all(i) = art.coeffs.b_n(i);
      lam_all(i) = mode.lambda;
    }
  } else {
    fd = std::make_unique<FDPlant>(plant, static_cast<int>(grid.size()), dt);
    fd->profile() = z0_samples;
    trace_row_all.resize(std::max(n, 1));
    b_all.resize(std::max(n, 1));
    lam_all.resize(std::max(n, 1));
    for (int i = 0; i < std::max(n, 1); ++i) {
      const auto& mode = art.basis.mode(i + 1);
      trace_row_all(i) = neumann_meas ? mode.dphi0 : mode.phi0;
      b_all(i) = art.coeffs.b_n(i);
      lam_all(i) = mode.lambda;
    }
  }

  // full-resolution companions
  Eigen::VectorXd y_raw(steps + 1), u_full(steps + 1), zeta_full(steps + 1);
  Eigen::MatrixXd z_modes(steps + 1, std::max(n, 1));  // plant modal coordinates 1..N

  auto plant_u_eff = [&](double t_now) -> double {
    // command that acts at the boundary at time t (after the input delay)
    if (scenario.open_loop) return 0.0;
    if (!joint) return ctl.u;
    return ctl.u_hist.query(t_now - design.h_i);
  };

  auto sample_plant = [&](int k, double u_eff) {
    if (scenario.plant_kind == PlantKind::Modal) {
      double y = 0.0, zeta = 0.0;
      for (int i = 0; i < m_sim; ++i) {
        const double w = modal.z(i) + b_all(i) * u_eff;
        const double contrib = w * trace_row_all(i);
        y += contrib;
        if (i >= n) zeta += contrib;
      }
      y_raw(k) = y;
      zeta_full(k) = scenario.open_loop ? 0.0 : zeta;
      for (int i = 0; i < std::max(n, 1); ++i) z_modes(k, i) = modal.z(i);
    } else {
      const Eigen::VectorXd& z = fd->profile();
      y_raw(k) = neumann_meas
                     ? (-3.0 * z(0) + 4.0 * z(1) - z(2)) / (2.0 * dx)
                     : z(0);
      double head = 0.0;
      for (int i = 0; i < std::max(n, 1); ++i) {
        z_modes(k, i) = l2_inner(z, art.basis.mode(i + 1).phi, dx);
        if (i < n) head += (z_modes(k, i) + b_all(i) * u_eff) * trace_row_all(i);
      }
      zeta_full(k) = scenario.open_loop ? 0.0 : y_raw(k) - head;
    }
  };

  MeasurementPort port{&y_raw, &scenario.y0, h, dt, 1};
  sample_plant(0, plant_u_eff(0.0));
  u_full(0) = scenario.open_loop ? 0.0 : ctl.u;

  // ---- trace storage ----
  SimulationTrace tr;
  tr.n = n;
  tr.n0 = n0;
  tr.h_meas = h;
  tr.horizon = design.horizon();
  tr.plant_kind = scenario.plant_kind;
  tr.dt_full = dt;
  tr.t.resize(records);
  tr.u.resize(records);
  tr.y.resize(records);
  tr.h1.resize(records);
  tr.l2.resize(records);
  tr.zeta.resize(records);
  tr.v = Eigen::VectorXd::Zero(records);
  tr.v0 = Eigen::VectorXd::Zero(records);
  tr.v1 = Eigen::VectorXd::Zero(records);
  tr.tail_energy = Eigen::VectorXd::Zero(records);
  tr.zhat.resize(records, std::max(n, 1));
  tr.e.resize(records, std::max(n, 1));
  tr.phi.resize(records, std::max(n0, 1));
  if (scenario.keep_profiles) tr.profiles.reserve(records);

  const int artstein_check_every = std::max(stride, steps / 1000);
  auto record = [&](int rec, int k) {
    const double t_now = k * dt;
    const double u_eff = plant_u_eff(t_now);
    tr.t(rec) = t_now;
    tr.u(rec) = u_full(k);
    tr.y(rec) = port.serve(t_now);
    tr.zeta(rec) = zeta_full(k);

    Eigen::VectorXd profile;
    if (scenario.plant_kind == PlantKind::Modal) {
      Eigen::VectorXd w_vec(m_sim);
      for (int i = 0; i < m_sim; ++i) w_vec(i) = modal.z(i) + b_all(i) * u_eff;
      profile = phi_cols * w_vec;
      if (lift_denom != 0.0) {
        profile += (grid.array().square() * (u_eff / lift_denom)).matrix();
      }
      double tail = 0.0;
      for (int i = n; i < m_sim; ++i) tail += lam_all(i) * w_vec(i) * w_vec(i);
      tr.tail_energy(rec) = tail;
    } else {
      profile = fd->profile();
    }
    tr.h1(rec) = h1_norm(profile, dx);
    tr.l2(rec) = l2_norm(profile, dx);
    if (scenario.keep_profiles) tr.profiles.push_back(profile);

    if (!scenario.open_loop) {
      tr.zhat.row(rec) = ctl.zhat.transpose();
      tr.phi.row(rec) = ctl.phi_state.transpose();
      if (t_now >= h - 1e-12) {
        const double idx = (t_now - h) / dt;
        const int kk = std::min<int>(static_cast<int>(idx), k);
        const int kk1 = std::min(kk + 1, k);
        const double w = idx - kk;
        for (int i = 0; i < n; ++i) {
          const double z_del = (1.0 - w) * z_modes(kk, i) + w * z_modes(kk1, i);
          tr.e(rec, i) = z_del - ctl.zhat(i);
        }
      } else {
        tr.e.row(rec).setConstant(kNaN);
      }
      if (k % artstein_check_every == 0) {
        const double disc = controller_runtime::artstein_quadrature_check(ctl);
        tr.artstein_max_discrepancy = std::max(tr.artstein_max_discrepancy, disc);
      }
    } else {
      tr.zhat.row(rec).setZero();
      tr.phi.row(rec).setZero();
      tr.e.row(rec).setConstant(kNaN);
    }
  };

  record(0, 0);
  int rec = 1;
  for (int k = 0; k < steps; ++k) {
    const double t_now = k * dt;
    // stage measurements are causal: t + dt - h <= t since h >= dt
    const double y_t = port.serve(t_now);
    const double y_mid = port.serve(t_now + 0.5 * dt);
    const double y_next = port.serve(t_now + dt);
    const double u_plant = plant_u_eff(t_now);

    if (scenario.plant_kind == PlantKind::Modal) {
      modal.step(u_plant, dt);
    } else {
      fd->step(u_plant);
    }
    if (!scenario.open_loop) {
      controller_runtime::step_controller(ctl, y_t, y_mid, y_next, dt);
    }
    u_full(k + 1) = scenario.open_loop ? 0.0 : ctl.u;
    sample_plant(k + 1, plant_u_eff((k + 1) * dt));
    port.filled = k + 2;

    if ((k + 1) % stride == 0) record(rec++, k + 1);
  }
  tr.u_full = u_full;
  tr.zeta_full = zeta_full;
  return tr;
}

LyapunovReport lyapunov_trace(SimulationTrace& trace,
                              const certification::CertificateReport& report,
                              const synthesis::ReducedMatrices& reduced) {
  if (report.status != certification::CertificateReport::Status::Certified) {
    fail(kModule, "lyapunov_trace", "MissingCertificate", "report is not certified");
  }
  if (trace.plant_kind != PlantKind::Modal) {
    fail(kModule, "lyapunov_trace", "MissingModalData",
         "the Lyapunov functional needs the modal tail energies");
  }
  const int n = reduced.n, n0 = reduced.n0, n1 = n - n0;
  if (trace.n != n) fail(kModule, "lyapunov_trace", "DimensionMismatch", "trace N != reduced N");
  const double h = trace.h_meas;
  const double hor = reduced.delay_horizon;
  const double delta = report.delta;
  const double dt = trace.dt_full;
  const bool neumann = reduced.variant == synthesis::Variant::NeumannOut;

  // prefix trapezoid of e^{2 delta s} zeta(s)^2 on the full-resolution grid
  const Eigen::Index full = trace.zeta_full.size();
  Eigen::VectorXd prefix(full);
  prefix(0) = 0.0;
  for (Eigen::Index k = 0; k + 1 < full; ++k) {
    const double s0 = k * dt, s1 = (k + 1) * dt;
    prefix(k + 1) = prefix(k) + 0.5 * dt * (std::exp(2.0 * delta * s0) * trace.zeta_full(k) *
                                                trace.zeta_full(k) +
                                            std::exp(2.0 * delta * s1) * trace.zeta_full(k + 1) *
                                                trace.zeta_full(k + 1));
  }
  auto prefix_at = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double idx = s / dt;
    const Eigen::Index k = std::min<Eigen::Index>(static_cast<Eigen::Index>(idx), full - 1);
    const Eigen::Index k1 = std::min(k + 1, full - 1);
    const double w = idx - k;
    return (1.0 - w) * prefix(k) + w * prefix(k1);
  };

  const Eigen::VectorXd exp_a1h = (reduced.a1.array() * hor).exp().matrix();
  LyapunovReport out;
  double prev_g = kNaN;
  for (Eigen::Index r = 0; r < trace.t.size(); ++r) {
    const double t = trace.t(r);
    if (t < h - 1e-12) {
      trace.v(r) = trace.v0(r) = trace.v1(r) = 0.0;
      continue;
    }
    // X = col(Zhat_A, E, Ztilde_A, Etilde)
    Eigen::VectorXd x(2 * n);
    for (int i = 0; i < n0; ++i) {
      x(i) = reduced.exp_a0h(i) * trace.zhat(r, i) + trace.phi(r, i);
      x(n0 + i) = trace.e(r, i);
    }
    for (int i = 0; i < n1; ++i) {
      const double lam = report.q_c - reduced.a1(i);
      // second predictor state by direct quadrature over the stored command
      double integral = 0.0;
      const double s_lo = std::max(0.0, t - hor);
      const Eigen::Index k_lo = static_cast<Eigen::Index>(std::ceil(s_lo / dt - 1e-9));
      const Eigen::Index k_hi = static_cast<Eigen::Index>(std::lround(t / dt));
      for (Eigen::Index k = k_lo; k <= k_hi && k < full; ++k) {
        const double s = k * dt;
        const double wgt = (k == k_lo || k == k_hi) ? 0.5 : 1.0;
        integral += wgt * dt * std::exp(reduced.a1(i) * (t - s)) * reduced.b1t(i) *
                    trace.u_full(k);
      }
      const double ztilde = trace.zhat(r, n0 + i) / lam;
      x(2 * n0 + i) = exp_a1h(i) * ztilde + integral;
      const double scale = neumann ? lam : std::sqrt(lam);
      x(2 * n0 + n1 + i) = scale * trace.e(r, n0 + i);
    }
    trace.v0(r) = x.dot(report.p_matrix * x) + report.gamma * trace.tail_energy(r);
    const double lower = std::max(0.0, t - h);
    trace.v1(r) = report.beta * std::exp(-2.0 * delta * t) * (prefix_at(t) - prefix_at(lower));
    trace.v(r) = trace.v0(r) + trace.v1(r);

    const double g = std::exp(2.0 * delta * (t - h)) * trace.v(r);
    if (!std::isnan(prev_g) && prev_g > 0.0) {
      out.max_drift = std::max(out.max_drift, (g - prev_g) / prev_g);
      ++out.samples;
    }
    prev_g = g;
  }
  return out;
}

FitResult fit_decay_rate(const Eigen::VectorXd& t, const Eigen::VectorXd& field, double t_start) {
  std::vector<double> ts, logs;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t(i) >= t_start - 1e-12 && !std::isnan(field(i))) {
      if (!(field(i) > 0.0)) {
        fail(kModule, "fit_decay_rate", "NonPositiveSamples",
             "field not positive at t=" + std::to_string(t(i)));
      }
      ts.push_back(t(i));
      logs.push_back(std::log(field(i)));
    }
  }
  if (ts.size() < 20) {
    fail(kModule, "fit_decay_rate", "NonPositiveSamples", "need at least 20 samples");
  }
  const Eigen::Map<Eigen::VectorXd> tv(ts.data(), ts.size());
  const Eigen::Map<Eigen::VectorXd> lv(logs.data(), logs.size());
  const LineFit fit = fit_line(tv, lv);
  return {-fit.slope, fit.rms_residual};
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}
}  // namespace

void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(kModule, "write_trace_csv", "IoError", "cannot open " + path);
  out << "t,u,y,h1_norm,l2_norm,V,V0,V1";
  for (int i = 1; i <= trace.n; ++i) out << ",zhat_" << i;
  for (int i = 1; i <= trace.n; ++i) out << ",e_" << i;
  out << "\n";
  for (Eigen::Index r = 0; r < trace.t.size(); ++r) {
    out << fmt(trace.t(r)) << "," << fmt(trace.u(r)) << "," << fmt(trace.y(r)) << ","
        << fmt(trace.h1(r)) << "," << fmt(trace.l2(r)) << "," << fmt(trace.v(r)) << ","
        << fmt(trace.v0(r)) << "," << fmt(trace.v1(r));
    for (int i = 0; i < trace.n; ++i) out << "," << fmt(trace.zhat(r, i));
    for (int i = 0; i < trace.n; ++i) out << "," << fmt(trace.e(r, i));
    out << "\n";
  }
}

void write_profiles_csv(const SimulationTrace& trace, const Eigen::VectorXd& grid,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(kModule, "write_profiles_csv", "IoError", "cannot open " + path);
  out << "t";
  for (Eigen::Index i = 0; i < grid.size(); ++i) out << ",x_" << fmt(grid(i));
  out << "\n";
  for (size_t r = 0; r < trace.profiles.size(); ++r) {
    out << fmt(trace.t(static_cast<Eigen::Index>(r)));
    for (Eigen::Index i = 0; i < trace.profiles[r].size(); ++i) {
      out << "," << fmt(trace.profiles[r](i));
    }
    out << "\n";
  }
}

}  // namespace delaystab::simulation
