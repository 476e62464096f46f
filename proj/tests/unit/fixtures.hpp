#pragma once

#include "delaystab/config.hpp"
#include "delaystab/spectral.hpp"
#include "delaystab/synthesis.hpp"

namespace fixtures {

inline constexpr double kPi = 3.14159265358979323846;

inline std::string source_dir() { return DELAYSTAB_SOURCE_DIR; }

/// The reference plant (constant coefficients, Robin/Dirichlet boundary,
/// open-loop unstable), shared across suites. Built once.
inline const delaystab::plant_spectral::PlantArtifacts& reference_plant() {
  static const auto artifacts = [] {
    delaystab::plant_spectral::PlantSpec spec;
    spec.p = delaystab::FunctionInput::constant(1.0);
    spec.q_tilde = delaystab::FunctionInput::constant(-5.0);
    spec.theta1 = kPi / 5.0;
    spec.theta2 = 0.0;
    return delaystab::plant_spectral::build_plant(spec, 1.0, 400, 2001);
  }();
  return artifacts;
}

inline delaystab::synthesis::GainSet reference_gains_dirichlet() {
  delaystab::synthesis::GainSet gains;
  gains.k = Eigen::RowVectorXd::Constant(1, -1.6037);
  gains.l = Eigen::VectorXd::Constant(1, 4.0832);
  return gains;
}

inline delaystab::synthesis::GainSet reference_gains_neumann() {
  delaystab::synthesis::GainSet gains;
  gains.k = Eigen::RowVectorXd::Constant(1, -1.6037);
  gains.l = Eigen::VectorXd::Constant(1, 2.9666);
  return gains;
}

inline delaystab::synthesis::DesignParameters reference_design_dirichlet() {
  delaystab::synthesis::DesignParameters params;
  params.delta = 0.5;
  params.n0 = 1;
  params.n = 3;
  params.variant = delaystab::synthesis::Variant::DirichletOut;
  params.h_o = 2.0;
  return params;
}

}  // namespace fixtures
