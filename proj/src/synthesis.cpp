#include "delaystab/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>

namespace delaystab::synthesis {

namespace {
constexpr const char* kModule = "synthesis";
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::DirichletOut: return "dirichlet";
    case Variant::NeumannOut: return "neumann";
    case Variant::JointDelay: return "joint";
  }
  return "?";
}

int select_n0(const plant_spectral::SpectralBasis& basis, double q_c, double delta) {
  for (int n0 = 1; n0 + 1 <= basis.size(); ++n0) {
    if (basis.lambda(n0 + 1) > q_c + delta) return n0;
  }
  fail(kModule, "select_n0", "InsufficientModes",
       "no mode satisfies lambda_{N0+1} > q_c + delta within the basis");
}

namespace {

// coefficients of prod (s - p_i), ascending powers
Eigen::VectorXd characteristic_coeffs(const Eigen::VectorXd& poles) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(poles.size() + 1);
  coeffs(0) = 1.0;
  for (Eigen::Index k = 0; k < poles.size(); ++k) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(coeffs.size());
    for (Eigen::Index j = 0; j <= k; ++j) {
      next(j + 1) += coeffs(j);
      next(j) -= poles(k) * coeffs(j);
    }
    coeffs = next;
  }
  return coeffs;
}

void check_spectrum(const Eigen::MatrixXd& m, const Eigen::VectorXd& requested, double delta,
                    const char* which) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
  std::vector<double> got;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const std::complex<double> ev = solver.eigenvalues()(i);
    if (std::abs(ev.imag()) > 1e-7 * (1.0 + std::abs(ev))) {
      fail(kModule, "place_gains", "PoleSpecError",
           std::string(which) + ": achieved spectrum has a complex pair");
    }
    got.push_back(ev.real());
  }
  std::sort(got.begin(), got.end());
  Eigen::VectorXd want = requested;
  std::sort(want.data(), want.data() + want.size());
  for (Eigen::Index i = 0; i < want.size(); ++i) {
    if (std::abs(got[i] - want(i)) > 1e-8 * (1.0 + std::abs(want(i)))) {
      fail(kModule, "place_gains", "PoleSpecError",
           std::string(which) + ": achieved pole " + std::to_string(got[i]) +
               " differs from requested " + std::to_string(want(i)));
    }
    if (!(want(i) < -delta)) {
      fail(kModule, "place_gains", "PoleSpecError",
           std::string(which) + ": requested pole not below -delta");
    }
  }
}

}  // namespace

GainSet place_gains(const Eigen::VectorXd& a0, const Eigen::VectorXd& b0,
                    const Eigen::RowVectorXd& c0, const Eigen::VectorXd& pole_set_ctrl,
                    const Eigen::VectorXd& pole_set_obs, double delta) {
  const int n0 = static_cast<int>(a0.size());
  if (b0.size() != n0 || c0.size() != n0 || pole_set_ctrl.size() != n0 ||
      pole_set_obs.size() != n0) {
    fail(kModule, "place_gains", "DimensionMismatch", "");
  }
  for (int i = 0; i < n0; ++i) {
    if (std::abs(b0(i)) < 1e-12 * (1.0 + b0.cwiseAbs().maxCoeff())) {
      fail(kModule, "place_gains", "UncontrollableMode", "beta_" + std::to_string(i + 1) + " ~ 0");
    }
    if (std::abs(c0(i)) < 1e-12 * (1.0 + c0.cwiseAbs().maxCoeff())) {
      fail(kModule, "place_gains", "UnobservableMode", "trace_" + std::to_string(i + 1) + " ~ 0");
    }
  }
  for (const auto& poles : {pole_set_ctrl, pole_set_obs}) {
    for (Eigen::Index i = 0; i < poles.size(); ++i) {
      if (!(poles(i) < -delta)) {
        fail(kModule, "place_gains", "PoleSpecError", "pole real part must be < -delta");
      }
    }
  }

  const Eigen::MatrixXd a = a0.asDiagonal();

  // Ackermann: K_raw = e_n^T Ctrb^-1 chi(A); we place A0 + B0 K, so K = -K_raw.
  Eigen::MatrixXd ctrb(n0, n0);
  Eigen::VectorXd col = b0;
  for (int j = 0; j < n0; ++j) {
    ctrb.col(j) = col;
    col = a0.array() * col.array();
  }
  const Eigen::VectorXd chi_c = characteristic_coeffs(pole_set_ctrl);
  Eigen::MatrixXd chi_a = Eigen::MatrixXd::Zero(n0, n0);
  {
    Eigen::VectorXd diag_pow = Eigen::VectorXd::Ones(n0);
    for (Eigen::Index d = 0; d < chi_c.size(); ++d) {
      chi_a += chi_c(d) * Eigen::MatrixXd(diag_pow.asDiagonal());
      diag_pow = diag_pow.array() * a0.array();
    }
  }
  Eigen::VectorXd en = Eigen::VectorXd::Zero(n0);
  en(n0 - 1) = 1.0;
  GainSet gains;
  gains.k = -(ctrb.transpose().colPivHouseholderQr().solve(en)).transpose() * chi_a;

  // dual form for the observer gain
  Eigen::MatrixXd obsv(n0, n0);
  Eigen::RowVectorXd row = c0;
  for (int j = 0; j < n0; ++j) {
    obsv.row(j) = row;
    row = (row.array() * a0.transpose().array()).matrix();
  }
  const Eigen::VectorXd chi_o = characteristic_coeffs(pole_set_obs);
  Eigen::MatrixXd chi_ao = Eigen::MatrixXd::Zero(n0, n0);
  {
    Eigen::VectorXd diag_pow = Eigen::VectorXd::Ones(n0);
    for (Eigen::Index d = 0; d < chi_o.size(); ++d) {
      chi_ao += chi_o(d) * Eigen::MatrixXd(diag_pow.asDiagonal());
      diag_pow = diag_pow.array() * a0.array();
    }
  }
  gains.l = chi_ao * obsv.colPivHouseholderQr().solve(en);

  check_spectrum(a + b0 * gains.k, pole_set_ctrl, delta, "controller");
  check_spectrum(a - gains.l * c0, pole_set_obs, delta, "observer");
  return gains;
}

void validate_gains(const Eigen::VectorXd& a0, const Eigen::VectorXd& b0,
                    const Eigen::RowVectorXd& c0, const GainSet& gains, double delta) {
  const int n0 = static_cast<int>(a0.size());
  if (gains.k.size() != n0 || gains.l.size() != n0) {
    fail(kModule, "validate_gains", "DimensionMismatch", "gain length != N0");
  }
  if (gains.k.norm() == 0.0) {
    fail(kModule, "validate_gains", "ZeroGain", "feedback gain K must be nonzero");
  }
  const Eigen::MatrixXd a = a0.asDiagonal();
  auto abscissa = [](const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
    return solver.eigenvalues().real().maxCoeff();
  };
  if (!(abscissa(a + b0 * gains.k) < -delta)) {
    fail(kModule, "validate_gains", "GainValidation",
         "A0 + B0 K has spectral abscissa >= -delta");
  }
  if (!(abscissa(a - gains.l * c0) < -delta)) {
    fail(kModule, "validate_gains", "GainValidation",
         "A0 - L C0 has spectral abscissa >= -delta");
  }
}

ReducedMatrices assemble_reduced(const plant_spectral::PlantArtifacts& artifacts,
                                 const GainSet& gains, const DesignParameters& params) {
  const auto& basis = artifacts.basis;
  const int n0 = params.n0;
  const int n = params.n;
  if (!(n0 >= 1 && n >= n0 + 1 && n <= basis.size())) {
    fail(kModule, "assemble_reduced", "DimensionMismatch",
         "need 1 <= N0 < N <= computed modes");
  }
  if (gains.k.size() != n0 || gains.l.size() != n0) {
    fail(kModule, "assemble_reduced", "DimensionMismatch", "gains sized differently from N0");
  }

  ReducedMatrices red;
  red.n0 = n0;
  red.n = n;
  red.variant = params.variant;
  red.delay_horizon = params.horizon();

  red.a0.resize(n0);
  red.b0.resize(n0);
  red.c0.resize(n0);
  for (int i = 0; i < n0; ++i) {
    const auto& mode = basis.mode(i + 1);
    red.a0(i) = -mode.lambda + artifacts.split.q_c;
    red.b0(i) = artifacts.coeffs.beta.trace(i);
    red.c0(i) = params.variant == Variant::NeumannOut ? mode.dphi0 : mode.phi0;
  }
  const int n1 = n - n0;
  red.a1.resize(n1);
  red.b1t.resize(n1);
  red.c1t.resize(n1);
  for (int i = 0; i < n1; ++i) {
    const auto& mode = basis.mode(n0 + i + 1);
    red.a1(i) = -mode.lambda + artifacts.split.q_c;
    red.b1t(i) = artifacts.coeffs.beta.trace(n0 + i) / mode.lambda;
    red.c1t(i) = params.variant == Variant::NeumannOut ? mode.dphi0 / mode.lambda
                                                       : mode.phi0 / std::sqrt(mode.lambda);
  }
  red.exp_a0h = (red.a0.array() * red.delay_horizon).exp().matrix();

  const Eigen::MatrixXd a0d = red.a0.asDiagonal();
  const Eigen::MatrixXd a1d = red.a1.asDiagonal();
  const Eigen::VectorXd expl = (red.exp_a0h.array() * gains.l.array()).matrix();  // e^{A0 h} L

  red.f = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  red.f.block(0, 0, n0, n0) = a0d + red.b0 * gains.k;
  red.f.block(0, n0, n0, n0) = expl * red.c0;
  red.f.block(0, n0 + n1 + n0, n0, n1) = expl * red.c1t;
  red.f.block(n0, n0, n0, n0) = a0d - gains.l * red.c0;
  red.f.block(n0, n0 + n1 + n0, n0, n1) = -gains.l * red.c1t;
  red.f.block(2 * n0, 0, n1, n0) = red.b1t * gains.k;
  red.f.block(2 * n0, 2 * n0, n1, n1) = a1d;
  red.f.block(2 * n0 + n1, 2 * n0 + n1, n1, n1) = a1d;

  red.lcal = Eigen::VectorXd::Zero(2 * n);
  red.lcal.segment(0, n0) = expl;
  red.lcal.segment(n0, n0) = -gains.l;

  red.ktilde = Eigen::RowVectorXd::Zero(2 * n);
  red.ktilde.segment(0, n0) = gains.k;

  red.e = Eigen::RowVectorXd::Zero(2 * n + 1);
  red.e.segment(0, 2 * n) = gains.k * red.f.block(0, 0, n0, 2 * n);
  red.e(2 * n) = gains.k.dot(expl);
  return red;
}

Eigen::VectorXd exp_integral(const Eigen::VectorXd& a0, double horizon) {
  Eigen::VectorXd out(a0.size());
  for (Eigen::Index i = 0; i < a0.size(); ++i) {
    const double lam = a0(i);
    out(i) = std::abs(lam) < 1e-14 ? horizon : (std::exp(lam * horizon) - 1.0) / lam;
  }
  return out;
}

Eigen::VectorXd initial_observer_state(double u0, const GainSet& gains, const Eigen::VectorXd& a0,
                                       const Eigen::VectorXd& b0, double horizon) {
  if (gains.k.size() != a0.size() || b0.size() != a0.size()) {
    fail(kModule, "initial_observer_state", "DimensionMismatch", "");
  }
  if (gains.k.norm() == 0.0) {
    fail(kModule, "initial_observer_state", "ZeroGain", "compatibility needs K != 0");
  }
  // K e^{A0 h} Z(0) = (1 - K int_{-h}^0 e^{-A0 s} B0 ds) u0, minimum-norm solution
  const Eigen::VectorXd integral = (exp_integral(a0, horizon).array() * b0.array()).matrix();
  const double rhs = (1.0 - gains.k.dot(integral)) * u0;
  const Eigen::VectorXd v =
      (gains.k.transpose().array() * (a0.array() * horizon).exp()).matrix();
  return v * (rhs / v.squaredNorm());
}

}  // namespace delaystab::synthesis
