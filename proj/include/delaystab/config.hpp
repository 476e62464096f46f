#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delaystab/certification.hpp"
#include "delaystab/expressions.hpp"
#include "delaystab/simulation.hpp"
#include "delaystab/spectral.hpp"
#include "delaystab/synthesis.hpp"

namespace delaystab::io_cli {

/// Parsed and validated run configuration. Sectioned key = value text with
/// `#` comments; unknown keys are rejected; units are seconds and radians.
struct RunConfig {
  // [plant]
  plant_spectral::PlantSpec plant;
  int grid_size = 2001;
  int m_modes = 400;
  double margin = 1.0;

  // [design]
  synthesis::DesignParameters design;  // n0 = 0 and n = 0 mean "resolve"
  std::optional<Eigen::VectorXd> poles_ctrl;
  std::optional<Eigen::VectorXd> poles_obs;
  std::optional<Eigen::RowVectorXd> gain_k;
  std::optional<Eigen::VectorXd> gain_l;
  std::optional<double> gain_l_neumann;  // observer gain of the companion run

  // [certification]
  certification::SearchConfig search;
  double alpha_export = 2.0;
  bool p_study = false;

  // [simulation]
  ExprFunction z0;
  ExprFunction y0;
  double t_final = 15.0;
  double dt = 1e-3;
  simulation::PlantKind plant_kind = simulation::PlantKind::Modal;
  int m_modes_sim = 0;
  int record_stride = 1;
  bool open_loop = false;
  bool keep_profiles = false;
  bool lyapunov = false;
  double lipschitz_bound = 1e4;

  // [output]
  std::string out_dir = "out";

  // [sweep]
  std::string sweep_parameter;
  std::vector<double> sweep_values;

  bool has_plant = false;
  bool has_design = false;
  bool has_certification = false;
  bool has_simulation = false;
  bool has_sweep = false;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// N0 resolution, gain placement or validation of supplied gains. Fills
/// design.n0 and design.n (defaults to N0+1 when unset).
synthesis::GainSet resolve_design(const plant_spectral::PlantArtifacts& artifacts,
                                  RunConfig& config);

plant_spectral::PlantArtifacts build_plant_from_config(const RunConfig& config);

}  // namespace delaystab::io_cli
