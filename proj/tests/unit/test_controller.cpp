#include <doctest.h>

#include <cmath>

#include "delaystab/controller.hpp"
#include "fixtures.hpp"

using namespace delaystab;
using namespace delaystab::controller_runtime;
using fixtures::kPi;

TEST_CASE("history buffer interpolation and guards") {
  HistoryBuffer buffer(2.0, 5.0, 0.0);
  buffer.push(0.0, 1.0);
  buffer.push(0.5, 2.0);
  buffer.push(1.0, 4.0);

  CHECK(buffer.query(-3.0) == 5.0);  // pre-history value
  CHECK(buffer.query(0.25) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(buffer.query(0.75) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(buffer.query(1.0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS_AS(buffer.query(1.5), Error);                 // beyond the newest sample
  CHECK_THROWS_AS(buffer.push(0.9, 0.0), Error);             // non-monotone timestamps
}

namespace {

ControllerState reference_controller(double u0, const synthesis::GainSet& gains, int n = 3,
                                     synthesis::Variant variant = synthesis::Variant::DirichletOut,
                                     double h_o = 2.0, double h_i = 0.0) {
  const auto& art = fixtures::reference_plant();
  auto params = fixtures::reference_design_dirichlet();
  params.n = n;
  params.variant = variant;
  params.h_o = h_o;
  params.h_i = h_i;
  const auto reduced = synthesis::assemble_reduced(art, gains, params);
  return init_controller(art, reduced, gains, u0, 1e-3);
}

}  // namespace

TEST_CASE("controller start-up") {
  SUBCASE("homogeneous start stays at rest") {
    auto state = reference_controller(0.0, fixtures::reference_gains_dirichlet());
    CHECK(state.u == 0.0);
    CHECK(state.zhat.norm() == 0.0);
    CHECK(state.phi_state.norm() == 0.0);
    for (int k = 0; k < 50; ++k) step_controller(state, 0.0, 1e-3);
    CHECK(std::abs(state.u) < 1e-300);
    CHECK(state.zhat.cwiseAbs().maxCoeff() < 1e-300);
  }
  SUBCASE("reference start reproduces the boundary command") {
    auto state = reference_controller(1.25, fixtures::reference_gains_dirichlet());
    CHECK(state.u == doctest::Approx(1.25).epsilon(1e-10));
  }
  SUBCASE("integrator predictor integral") {
    // A0 = [0], B0 = [1], u0 = 1, h = 2 -> phi(0) = 2
    const auto& art = fixtures::reference_plant();
    auto params = fixtures::reference_design_dirichlet();
    params.n = 2;
    const auto gains = fixtures::reference_gains_dirichlet();
    auto reduced = synthesis::assemble_reduced(art, gains, params);
    reduced.a0(0) = 0.0;
    reduced.b0(0) = 1.0;
    reduced.exp_a0h.setOnes();
    synthesis::GainSet unit;
    unit.k = Eigen::RowVectorXd::Constant(1, 1.0);
    unit.l = Eigen::VectorXd::Zero(1);
    auto state = init_controller(art, reduced, unit, 1.0, 1e-3);
    CHECK(state.phi_state(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(artstein_quadrature_check(state) < 1e-10);
  }
  SUBCASE("joint variant requires a zero start") {
    CHECK_THROWS_AS(reference_controller(1.0, fixtures::reference_gains_dirichlet(), 3,
                                         synthesis::Variant::JointDelay, 1.0, 1.0),
                    Error);
  }
}

TEST_CASE("zero-innovation modes decay at their open-loop rates") {
  // start from upper observer modes only, keep Zhat_A = 0 so u stays 0, and
  // feed the measurement that zeroes the innovation along the exact decay
  auto state = reference_controller(0.0, fixtures::reference_gains_dirichlet());
  const double z2_init = 0.7, z3_init = -0.3;
  state.zhat(1) = z2_init;
  state.zhat(2) = z3_init;
  const double dt = 1e-3;
  const auto& red = state.matrices;
  auto y_exact = [&](double tau) {
    return z2_init * std::exp(red.a1(0) * tau) * state.trace_row(1) +
           z3_init * std::exp(red.a1(1) * tau) * state.trace_row(2);
  };
  for (int k = 0; k < 200; ++k) {
    const double t = state.t;
    step_controller(state, y_exact(t), y_exact(t + 0.5 * dt), y_exact(t + dt), dt);
  }
  const double t_end = state.t;
  CHECK(std::abs(state.u) < 1e-9);
  CHECK(state.zhat(1) == doctest::Approx(z2_init * std::exp(red.a1(0) * t_end)).epsilon(1e-9));
  CHECK(state.zhat(2) == doctest::Approx(z3_init * std::exp(red.a1(1) * t_end)).epsilon(1e-9));
}

TEST_CASE("predictor quadrature identities") {
  SUBCASE("linear command over an integrator horizon") {
    // hand-built state: A0 = [0], B0 = [1], u(s) = s on [0, 2]
    ControllerState state;
    state.matrices.n0 = 1;
    state.matrices.n = 2;
    state.matrices.delay_horizon = 2.0;
    state.matrices.a0 = Eigen::VectorXd::Zero(1);
    state.matrices.b0 = Eigen::VectorXd::Ones(1);
    state.matrices.exp_a0h = Eigen::VectorXd::Ones(1);
    state.dt = 1e-2;
    state.u_hist = HistoryBuffer(2.0, 0.0, 0.0);
    for (int k = 1; k <= 200; ++k) state.u_hist.push(0.01 * k, 0.01 * k);
    state.t = 2.0;
    state.phi_state = Eigen::VectorXd::Constant(1, 2.0);  // integral of s over [0,2]
    CHECK(artstein_quadrature_check(state) < 1e-10);
  }
  SUBCASE("constant command is reproduced exactly") {
    auto state = reference_controller(1.25, fixtures::reference_gains_dirichlet());
    CHECK(artstein_quadrature_check(state) < 1e-10);
  }
}

TEST_CASE("with zero observer gain the predictor obeys the delay-free dynamics") {
  // Zhat_A follows (A0 + B0 K) Zhat_A regardless of the measurement
  synthesis::GainSet gains = fixtures::reference_gains_dirichlet();
  gains.l.setZero();
  auto state = reference_controller(1.0, gains);
  const double a_cl = state.matrices.a0(0) + state.matrices.b0(0) * gains.k(0);
  const double za0 = state.predicted_state()(0);
  const double dt = 1e-3;
  const double t_final = 5.0;
  double worst = 0.0;
  for (int k = 0; k < static_cast<int>(t_final / dt); ++k) {
    step_controller(state, std::sin(0.3 * k), dt);  // arbitrary ignored measurement
    const double exact = za0 * std::exp(a_cl * state.t);
    worst = std::max(worst, std::abs(state.predicted_state()(0) - exact) / (1.0 + state.t));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("command history stays causal") {
  auto state = reference_controller(1.25, fixtures::reference_gains_dirichlet());
  for (int k = 0; k < 100; ++k) step_controller(state, 0.1, 1e-3);
  CHECK(state.u_hist.latest_time() == doctest::Approx(state.t));
  CHECK_THROWS_AS(state.u_hist.query(state.t + 1.0), Error);
}
