#include "delaystab/commands.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "delaystab/report_io.hpp"
#include "delaystab/sdpa.hpp"

namespace delaystab::io_cli {

namespace {
constexpr const char* kModule = "io_cli";

std::filesystem::path prepare_out_dir(const RunConfig& config, const CommandOptions& options) {
  const std::filesystem::path dir =
      options.out_dir.empty() ? config.out_dir : options.out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

void apply_overrides(RunConfig& config, const CommandOptions& options) {
  if (options.n_max > 0) config.search.n_max = options.n_max;
  if (options.seed_grid == "FINE") {
    config.search.points_per_decade = 2 * config.search.points_per_decade;
  } else if (!options.seed_grid.empty() && options.seed_grid != "COARSE") {
    fail(kModule, "run_command", "ValidationError", "--seed-grid takes COARSE or FINE");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int sweep_threads() {
  const char* env = std::getenv("DELAY_STAB_THREADS");
  if (env == nullptr) return static_cast<int>(std::thread::hardware_concurrency());
  const int v = std::atoi(env);
  return v > 0 ? v : 1;
}

certification::CertificateReport certify_config(const RunConfig& base,
                                                const plant_spectral::PlantArtifacts& artifacts,
                                                const synthesis::GainSet& gains) {
  return certification::certify(artifacts, gains, base.design, base.search);
}

simulation::Scenario scenario_from_config(const RunConfig& config,
                                          const plant_spectral::PlantArtifacts& artifacts,
                                          const synthesis::GainSet& gains) {
  simulation::Scenario scenario;
  scenario.artifacts = &artifacts;
  scenario.design = config.design;
  scenario.gains = gains;
  scenario.z0 = config.z0;
  scenario.y0 = config.y0;
  scenario.t_final = config.t_final;
  scenario.dt = config.dt;
  scenario.plant_kind = config.plant_kind;
  scenario.m_modes_sim = config.m_modes_sim;
  scenario.record_stride = config.record_stride;
  scenario.open_loop = config.open_loop;
  scenario.keep_profiles = config.keep_profiles;
  scenario.lipschitz_bound = config.lipschitz_bound;
  return scenario;
}

}  // namespace

int cmd_design(RunConfig config, const CommandOptions& options) {
  const auto dir = prepare_out_dir(config, options);
  const auto artifacts = build_plant_from_config(config);
  const auto gains = resolve_design(artifacts, config);
  const auto reduced = synthesis::assemble_reduced(artifacts, gains, config.design);

  std::ostringstream os;
  os << "design summary\n";
  os << "  variant   " << synthesis::variant_name(config.design.variant) << "\n";
  os << "  N0 = " << config.design.n0 << ", N = " << config.design.n << "\n";
  os << "  q_c = " << fmt(artifacts.split.q_c) << "\n";
  os << "  lambda_1.." << config.design.n << " =";
  for (int i = 1; i <= config.design.n; ++i) os << " " << fmt(artifacts.basis.lambda(i));
  os << "\n  K =";
  for (int i = 0; i < gains.k.size(); ++i) os << " " << fmt(gains.k(i));
  os << "\n  L =";
  for (int i = 0; i < gains.l.size(); ++i) os << " " << fmt(gains.l(i));
  os << "\n  delay horizon = " << fmt(reduced.delay_horizon) << "\n";
  std::cout << os.str();

  std::ofstream txt(dir / "design.txt");
  txt << os.str();

  std::ofstream kv(dir / "design.kv");
  kv.precision(17);
  kv << "variant = " << synthesis::variant_name(config.design.variant) << "\n";
  kv << "n0 = " << config.design.n0 << "\nn = " << config.design.n << "\n";
  kv << "q_c = " << artifacts.split.q_c << "\n";
  kv << "k =";
  for (int i = 0; i < gains.k.size(); ++i) kv << (i ? "," : " ") << gains.k(i);
  kv << "\nl =";
  for (int i = 0; i < gains.l.size(); ++i) kv << (i ? "," : " ") << gains.l(i);
  kv << "\nf =";
  for (int i = 0; i < reduced.f.size(); ++i) kv << (i ? "," : " ") << reduced.f.data()[i];
  kv << "\n";
  return 0;
}

int cmd_certify(RunConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  const auto dir = prepare_out_dir(config, options);
  const auto artifacts = build_plant_from_config(config);
  const auto gains = resolve_design(artifacts, config);
  const auto report = certify_config(config, artifacts, gains);

  std::cout << report_to_text(report);
  write_report_kv(report, (dir / "certificate.kv").string());
  std::ofstream txt(dir / "certificate.txt");
  txt << report_to_text(report);

  if (config.p_study) {
    synthesis::DesignParameters params = config.design;
    const int hi = std::min(20, artifacts.basis.size() - 1);
    const auto table =
        certification::p_boundedness_study(artifacts, gains, params, params.n0 + 1, hi);
    std::ofstream ps(dir / "p_study.csv");
    ps << "n,p_norm\n";
    for (const auto& [n, norm] : table) ps << n << "," << fmt(norm) << "\n";
  }
  return report.status == certification::CertificateReport::Status::Certified ? 0 : 2;
}

int cmd_simulate(RunConfig config, const CommandOptions& options) {
  const auto dir = prepare_out_dir(config, options);
  if (!config.has_simulation) {
    fail(kModule, "cmd_simulate", "ValidationError", "missing [simulation] section");
  }
  const auto artifacts = build_plant_from_config(config);
  synthesis::GainSet gains;
  if (!config.open_loop) gains = resolve_design(artifacts, config);

  auto scenario = scenario_from_config(config, artifacts, gains);
  auto trace = simulation::run_closed_loop(scenario);

  if (config.lyapunov && !config.open_loop) {
    apply_overrides(config, options);
    const auto report = certify_config(config, artifacts, gains);
    if (report.status != certification::CertificateReport::Status::Certified) {
      fail(kModule, "cmd_simulate", "MissingCertificate",
           "lyapunov trace requested but certification is infeasible");
    }
    synthesis::DesignParameters params = config.design;
    params.n = report.n;
    if (params.n != trace.n) {
      // rerun at the certified order so the trace matches the certificate
      scenario.design = params;
      trace = simulation::run_closed_loop(scenario);
    }
    const auto reduced = synthesis::assemble_reduced(artifacts, gains, params);
    const auto lap = simulation::lyapunov_trace(trace, report, reduced);
    std::cout << "lyapunov drift: max relative increase " << fmt(lap.max_drift) << " over "
              << lap.samples << " samples\n";
    write_report_kv(report, (dir / "certificate.kv").string());
  }

  simulation::write_trace_csv(trace, (dir / "trace.csv").string());
  if (config.keep_profiles) {
    simulation::write_profiles_csv(trace, artifacts.basis.grid, (dir / "profiles.csv").string());
  }

  const double t_fit = std::min(trace.h_meas, config.t_final / 2);
  const auto h1_fit = simulation::fit_decay_rate(trace.t, trace.h1, t_fit);
  std::cout << "trace written: " << (dir / "trace.csv").string() << "\n";
  std::cout << "H1 decay rate (t >= " << fmt(t_fit) << "): " << fmt(h1_fit.rate)
            << " (rms residual " << fmt(h1_fit.rms_residual) << ")\n";
  std::cout << "predictor quadrature max discrepancy: " << fmt(trace.artstein_max_discrepancy)
            << "\n";
  return 0;
}

int cmd_sweep(RunConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  const auto dir = prepare_out_dir(config, options);
  if (!config.has_sweep) {
    fail(kModule, "cmd_sweep", "ValidationError", "missing [sweep] section");
  }
  const auto artifacts = build_plant_from_config(config);

  struct Row {
    double value = 0.0;
    int n_min = -1;
    bool certified = false;
  };
  std::vector<Row> rows(config.sweep_values.size());

  const int max_threads = std::max(1, sweep_threads());
  std::vector<std::future<void>> tasks;
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1)) {
      RunConfig local = config;
      if (config.sweep_parameter == "h_o") {
        local.design.h_o = config.sweep_values[i];
      } else if (config.sweep_parameter == "h_i") {
        local.design.h_i = config.sweep_values[i];
      } else {
        local.design.delta = config.sweep_values[i];
      }
      Row row;
      row.value = config.sweep_values[i];
      try {
        const auto gains = resolve_design(artifacts, local);
        const auto report = certify_config(local, artifacts, gains);
        row.certified = report.status == certification::CertificateReport::Status::Certified;
        row.n_min = report.n;
      } catch (const Error&) {
        row.certified = false;
      }
      rows[i] = row;
    }
  };
  const int workers = std::min<int>(max_threads, static_cast<int>(rows.size()));
  for (int w = 0; w < workers; ++w) tasks.push_back(std::async(std::launch::async, worker));
  for (auto& task : tasks) task.get();

  std::ofstream csv(dir / "sweep.csv");
  csv << "parameter,value,n_min_feasible,status\n";
  for (const auto& row : rows) {
    csv << config.sweep_parameter << "," << fmt(row.value) << ","
        << (row.certified ? std::to_string(row.n_min) : std::string("-")) << ","
        << (row.certified ? "certified" : "infeasible") << "\n";
  }
  std::cout << "sweep written: " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_export_lmi(RunConfig config, const CommandOptions& options) {
  const auto dir = prepare_out_dir(config, options);
  if (!config.has_certification) {
    fail(kModule, "cmd_export_lmi", "ValidationError", "missing [certification] section");
  }
  const auto artifacts = build_plant_from_config(config);
  const auto gains = resolve_design(artifacts, config);
  synthesis::DesignParameters params = config.design;
  if (params.n < params.n0 + 1) params.n = params.n0 + 1;
  const auto problem = certification::make_problem(artifacts, gains, params, 0.125);
  const auto sdpa = certification::build_sdpa(problem, config.alpha_export);
  const auto path = dir / "problem.dat-s";
  certification::write_sdpa(sdpa, path.string());
  std::cout << "LMI feasibility problem written: " << path.string() << " ("
            << sdpa.block_sizes.size() << " blocks, " << sdpa.num_vars << " variables)\n";
  return 0;
}

int cmd_reproduce_paper(RunConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  const auto dir = prepare_out_dir(config, options);
  const auto artifacts = build_plant_from_config(config);

  std::ostringstream summary;
  summary << "reference reproduction\n";
  bool ok = true;

  // Dirichlet-measurement certification, reference order 3
  RunConfig dirichlet = config;
  const auto gains_d = resolve_design(artifacts, dirichlet);
  const auto report_d = certify_config(dirichlet, artifacts, gains_d);
  const bool d_ok =
      report_d.status == certification::CertificateReport::Status::Certified && report_d.n <= 8;
  ok = ok && d_ok;
  summary << "  dirichlet: certified N = "
          << (report_d.status == certification::CertificateReport::Status::Certified
                  ? std::to_string(report_d.n)
                  : std::string("-"))
          << " (reference 3, bound 8) " << (d_ok ? "[ok]" : "[FAIL]") << "\n";

  // Neumann-measurement certification, reference order 15
  RunConfig neumann = config;
  neumann.design.variant = synthesis::Variant::NeumannOut;
  neumann.design.n0 = 0;
  neumann.design.n = 0;
  if (config.gain_l_neumann.has_value()) {
    neumann.gain_l = Eigen::VectorXd::Constant(1, *config.gain_l_neumann);
  }
  const auto gains_n = resolve_design(artifacts, neumann);
  const auto report_n = certify_config(neumann, artifacts, gains_n);
  const bool n_ok =
      report_n.status == certification::CertificateReport::Status::Certified && report_n.n <= 25;
  ok = ok && n_ok;
  summary << "  neumann:   certified N = "
          << (report_n.status == certification::CertificateReport::Status::Certified
                  ? std::to_string(report_n.n)
                  : std::string("-"))
          << " (reference 15, bound 25) " << (n_ok ? "[ok]" : "[FAIL]") << "\n";

  // closed-loop decay of the Dirichlet design at the certified order
  if (d_ok && config.has_simulation) {
    RunConfig sim = dirichlet;  // n0 resolved
    sim.design.n = report_d.n;
    auto scenario = scenario_from_config(sim, artifacts, gains_d);
    const auto trace = simulation::run_closed_loop(scenario);
    const auto h1_fit = simulation::fit_decay_rate(trace.t, trace.h1, trace.h_meas);
    const bool decay_ok = h1_fit.rate >= 0.45;
    ok = ok && decay_ok;
    summary << "  closed loop: H1 decay rate " << fmt(h1_fit.rate)
            << " (target 0.5, bound 0.45) " << (decay_ok ? "[ok]" : "[FAIL]") << "\n";
    simulation::write_trace_csv(trace, (dir / "trace.csv").string());
  }

  write_report_kv(report_d, (dir / "certificate_dirichlet.kv").string());
  write_report_kv(report_n, (dir / "certificate_neumann.kv").string());
  std::ofstream txt(dir / "reproduce_summary.txt");
  txt << summary.str();
  std::cout << summary.str();
  return ok ? 0 : 2;
}

int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& options) {
  RunConfig config = parse_config(config_path);
  if (command == "design") return cmd_design(std::move(config), options);
  if (command == "certify") return cmd_certify(std::move(config), options);
  if (command == "simulate") return cmd_simulate(std::move(config), options);
  if (command == "sweep") return cmd_sweep(std::move(config), options);
  if (command == "export-lmi") return cmd_export_lmi(std::move(config), options);
  if (command == "reproduce-paper") return cmd_reproduce_paper(std::move(config), options);
  fail(kModule, "run_command", "ValidationError", "unknown command " + command);
}

}  // namespace delaystab::io_cli
