#include "delaystab/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace delaystab::io_cli {

namespace {
constexpr const char* kModule = "io_cli";
constexpr double kPi = 3.14159265358979323846;

using KeyMap = std::map<std::string, std::string>;
using SectionMap = std::map<std::string, KeyMap>;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"plant",
       {"p.poly", "p.table", "q_tilde.poly", "q_tilde.table", "theta1", "theta2", "grid_size",
        "m_modes", "margin"}},
      {"design",
       {"delta", "n0", "n", "variant", "h_o", "h_i", "poles.ctrl", "poles.obs", "gains.k",
        "gains.l", "gains.l_neumann"}},
      {"certification", {"n_max", "alpha", "p_study", "points_per_decade"}},
      {"simulation",
       {"z0", "y0", "t_final", "dt", "plant", "m_modes_sim", "record_stride", "open_loop",
        "profiles", "lyapunov", "lipschitz_bound"}},
      {"output", {"dir"}},
      {"sweep", {"parameter", "values"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

SectionMap tokenize(const std::string& text, std::vector<std::string>& violations) {
  SectionMap sections;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        violations.push_back("line " + std::to_string(line_no) + ": malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (schema().find(section) == schema().end()) {
        violations.push_back("unknown section [" + section + "]");
      }
      sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      violations.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    if (section.empty()) {
      violations.push_back("line " + std::to_string(line_no) + ": key outside any section");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto sch = schema().find(section);
    if (sch != schema().end() && sch->second.find(key) == sch->second.end()) {
      violations.push_back("[" + section + "] unknown key '" + key + "'");
      continue;
    }
    if (sections[section].count(key)) {
      violations.push_back("[" + section + "] duplicate key '" + key + "'");
    }
    sections[section][key] = value;
  }
  return sections;
}

// value readers; push a violation and return a fallback on bad input
struct Reader {
  const KeyMap* keys;
  std::string section;
  std::vector<std::string>* violations;

  bool has(const std::string& key) const { return keys->count(key) > 0; }

  void note(const std::string& key, const std::string& what) const {
    violations->push_back("[" + section + "] " + key + ": " + what);
  }

  double number(const std::string& key, double fallback) const {
    auto it = keys->find(key);
    if (it == keys->end()) return fallback;
    try {
      // allow pi in scalar angles
      std::string v = it->second;
      size_t used = 0;
      if (v == "pi") return kPi;
      const double x = std::stod(v, &used);
      std::string rest = trim(v.substr(used));
      if (rest == "*pi" || rest == "* pi") return x * kPi;
      if (!rest.empty()) {
        note(key, "trailing characters '" + rest + "'");
        return fallback;
      }
      return x;
    } catch (const std::exception&) {
      note(key, "not a number: '" + it->second + "'");
      return fallback;
    }
  }

  int integer(const std::string& key, int fallback) const {
    const double v = number(key, fallback);
    if (v != std::floor(v)) {
      note(key, "expected an integer");
      return fallback;
    }
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    auto it = keys->find(key);
    if (it == keys->end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    note(key, "expected true/false");
    return fallback;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = keys->find(key);
    return it == keys->end() ? fallback : it->second;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    auto it = keys->find(key);
    if (it == keys->end()) return out;
    std::istringstream ls(it->second);
    std::string piece;
    while (std::getline(ls, piece, ',')) {
      piece = trim(piece);
      if (piece.empty()) continue;
      try {
        out.push_back(std::stod(piece));
      } catch (const std::exception&) {
        note(key, "bad list element '" + piece + "'");
      }
    }
    if (out.empty()) note(key, "empty list");
    return out;
  }
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out(i) = v[i];
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  std::vector<std::string> violations;
  const SectionMap sections = tokenize(text, violations);
  if (sections.empty() && violations.empty()) {
    fail(kModule, "parse_config", "ParseError", "no sections found");
  }

  RunConfig cfg;
  if (auto it = sections.find("plant"); it != sections.end()) {
    cfg.has_plant = true;
    Reader r{&it->second, "plant", &violations};
    if (r.has("p.poly") && r.has("p.table")) r.note("p.poly", "give either poly or table");
    if (r.has("p.poly")) cfg.plant.p = FunctionInput::polynomial(to_vector(r.list("p.poly")));
    if (r.has("p.table")) cfg.plant.p = FunctionInput::table(to_vector(r.list("p.table")));
    if (r.has("q_tilde.poly") && r.has("q_tilde.table")) {
      r.note("q_tilde.poly", "give either poly or table");
    }
    if (r.has("q_tilde.poly")) {
      cfg.plant.q_tilde = FunctionInput::polynomial(to_vector(r.list("q_tilde.poly")));
    }
    if (r.has("q_tilde.table")) {
      cfg.plant.q_tilde = FunctionInput::table(to_vector(r.list("q_tilde.table")));
    }
    cfg.plant.theta1 = r.number("theta1", cfg.plant.theta1);
    cfg.plant.theta2 = r.number("theta2", cfg.plant.theta2);
    cfg.grid_size = r.integer("grid_size", cfg.grid_size);
    cfg.m_modes = r.integer("m_modes", cfg.m_modes);
    cfg.margin = r.number("margin", cfg.margin);

    if (!(cfg.plant.theta1 >= 0.0 && cfg.plant.theta1 <= kPi / 2.0)) {
      violations.push_back("[plant] theta1 outside [0, pi/2]");
    }
    if (!(cfg.plant.theta2 >= 0.0 && cfg.plant.theta2 <= kPi / 2.0)) {
      violations.push_back("[plant] theta2 outside [0, pi/2]");
    }
    if (cfg.grid_size < 9 || cfg.grid_size % 2 == 0) {
      violations.push_back("[plant] grid_size must be odd and >= 9");
    }
    if (!(cfg.m_modes >= 2 && cfg.m_modes < cfg.grid_size / 4)) {
      violations.push_back("[plant] need 2 <= m_modes < grid_size/4");
    }
    if (!(cfg.margin > 0.0)) violations.push_back("[plant] margin must be positive");
  }

  if (auto it = sections.find("design"); it != sections.end()) {
    cfg.has_design = true;
    Reader r{&it->second, "design", &violations};
    cfg.design.delta = r.number("delta", cfg.design.delta);
    cfg.design.n0 = r.integer("n0", 0);
    cfg.design.n = r.integer("n", 0);
    const std::string variant = r.text("variant", "dirichlet");
    if (variant == "dirichlet") {
      cfg.design.variant = synthesis::Variant::DirichletOut;
    } else if (variant == "neumann") {
      cfg.design.variant = synthesis::Variant::NeumannOut;
    } else if (variant == "joint") {
      cfg.design.variant = synthesis::Variant::JointDelay;
    } else {
      violations.push_back("[design] variant must be dirichlet|neumann|joint");
    }
    cfg.design.h_o = r.number("h_o", cfg.design.h_o);
    cfg.design.h_i = r.number("h_i", cfg.design.h_i);
    if (r.has("poles.ctrl")) cfg.poles_ctrl = to_vector(r.list("poles.ctrl"));
    if (r.has("poles.obs")) cfg.poles_obs = to_vector(r.list("poles.obs"));
    if (r.has("gains.k")) cfg.gain_k = to_vector(r.list("gains.k")).transpose();
    if (r.has("gains.l")) cfg.gain_l = to_vector(r.list("gains.l"));
    if (r.has("gains.l_neumann")) cfg.gain_l_neumann = r.number("gains.l_neumann", 0.0);

    if (!(cfg.design.delta > 0.0)) violations.push_back("[design] delta must be positive");
    if (!(cfg.design.h_o > 0.0)) violations.push_back("[design] h_o must be positive");
    if (cfg.design.h_i < 0.0) violations.push_back("[design] h_i must be nonnegative");
    if (cfg.design.h_i > 0.0 && cfg.design.variant != synthesis::Variant::JointDelay) {
      violations.push_back("[design] h_i > 0 requires variant = joint");
    }
    if (cfg.has_plant) {
      const bool dirichlet_meas = cfg.design.variant != synthesis::Variant::NeumannOut;
      if (dirichlet_meas && !(cfg.plant.theta1 > 0.0)) {
        violations.push_back("[design] Dirichlet measurement needs theta1 in (0, pi/2]");
      }
      if (!dirichlet_meas && !(cfg.plant.theta1 < kPi / 2.0)) {
        violations.push_back("[design] Neumann measurement needs theta1 in [0, pi/2)");
      }
    }
  }

  if (auto it = sections.find("certification"); it != sections.end()) {
    cfg.has_certification = true;
    Reader r{&it->second, "certification", &violations};
    cfg.search.n_max = r.integer("n_max", cfg.search.n_max);
    cfg.search.points_per_decade = r.integer("points_per_decade", cfg.search.points_per_decade);
    cfg.alpha_export = r.number("alpha", cfg.alpha_export);
    cfg.p_study = r.boolean("p_study", cfg.p_study);
    if (!(cfg.alpha_export > 1.0)) violations.push_back("[certification] alpha must exceed 1");
    if (cfg.search.n_max < 2) violations.push_back("[certification] n_max must be >= 2");
  }

  if (auto it = sections.find("simulation"); it != sections.end()) {
    cfg.has_simulation = true;
    Reader r{&it->second, "simulation", &violations};
    try {
      if (r.has("z0")) cfg.z0 = ExprFunction::parse(r.text("z0", "0"));
    } catch (const Error& err) {
      violations.push_back(std::string("[simulation] z0: ") + err.what());
    }
    try {
      if (r.has("y0")) cfg.y0 = ExprFunction::parse(r.text("y0", "0"));
    } catch (const Error& err) {
      violations.push_back(std::string("[simulation] y0: ") + err.what());
    }
    cfg.t_final = r.number("t_final", cfg.t_final);
    cfg.dt = r.number("dt", cfg.dt);
    const std::string kind = r.text("plant", "modal");
    if (kind == "modal") {
      cfg.plant_kind = simulation::PlantKind::Modal;
    } else if (kind == "fd") {
      cfg.plant_kind = simulation::PlantKind::FiniteDifference;
    } else {
      violations.push_back("[simulation] plant must be modal|fd");
    }
    cfg.m_modes_sim = r.integer("m_modes_sim", 0);
    cfg.record_stride = r.integer("record_stride", 1);
    cfg.open_loop = r.boolean("open_loop", false);
    cfg.keep_profiles = r.boolean("profiles", false);
    cfg.lyapunov = r.boolean("lyapunov", false);
    cfg.lipschitz_bound = r.number("lipschitz_bound", cfg.lipschitz_bound);
    if (!(cfg.dt > 0.0)) violations.push_back("[simulation] dt must be positive");
    if (!(cfg.t_final > 0.0)) violations.push_back("[simulation] t_final must be positive");
    if (cfg.record_stride < 1) violations.push_back("[simulation] record_stride must be >= 1");
  }

  if (auto it = sections.find("output"); it != sections.end()) {
    Reader r{&it->second, "output", &violations};
    cfg.out_dir = r.text("dir", cfg.out_dir);
  }

  if (auto it = sections.find("sweep"); it != sections.end()) {
    cfg.has_sweep = true;
    Reader r{&it->second, "sweep", &violations};
    cfg.sweep_parameter = r.text("parameter", "");
    cfg.sweep_values = r.list("values");
    if (cfg.sweep_parameter != "h_o" && cfg.sweep_parameter != "h_i" &&
        cfg.sweep_parameter != "delta") {
      violations.push_back("[sweep] parameter must be h_o|h_i|delta");
    }
  }

  if (!violations.empty()) {
    std::string all;
    for (const auto& v : violations) all += (all.empty() ? "" : "; ") + v;
    fail(kModule, "parse_config", "ValidationError", all);
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(kModule, "parse_config", "ParseError", "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (trim(text).empty()) fail(kModule, "parse_config", "ParseError", path + " is empty");
  return parse_config_text(text);
}

plant_spectral::PlantArtifacts build_plant_from_config(const RunConfig& config) {
  if (!config.has_plant) {
    fail(kModule, "parse_config", "ValidationError", "missing [plant] section");
  }
  return plant_spectral::build_plant(config.plant, config.margin, config.m_modes,
                                     config.grid_size);
}

synthesis::GainSet resolve_design(const plant_spectral::PlantArtifacts& artifacts,
                                  RunConfig& config) {
  if (!config.has_design) {
    fail(kModule, "parse_config", "ValidationError", "missing [design] section");
  }
  auto& design = config.design;
  const int auto_n0 = synthesis::select_n0(artifacts.basis, artifacts.split.q_c, design.delta);
  if (design.n0 == 0) {
    design.n0 = auto_n0;
  } else if (design.n0 < auto_n0) {
    fail(kModule, "resolve_design", "ValidationError",
         "n0 = " + std::to_string(design.n0) + " violates the mode-split condition (need >= " +
             std::to_string(auto_n0) + ")");
  }
  if (design.n == 0) design.n = design.n0 + 1;
  if (design.n < design.n0 + 1) {
    fail(kModule, "resolve_design", "ValidationError", "n must be at least n0 + 1");
  }

  // reduced data of the first N0 modes
  Eigen::VectorXd a0(design.n0), b0(design.n0);
  Eigen::RowVectorXd c0(design.n0);
  for (int i = 0; i < design.n0; ++i) {
    const auto& mode = artifacts.basis.mode(i + 1);
    a0(i) = -mode.lambda + artifacts.split.q_c;
    b0(i) = artifacts.coeffs.beta.trace(i);
    c0(i) = design.variant == synthesis::Variant::NeumannOut ? mode.dphi0 : mode.phi0;
  }

  synthesis::GainSet gains;
  if (config.gain_k.has_value() || config.gain_l.has_value()) {
    if (!config.gain_k.has_value() || !config.gain_l.has_value()) {
      fail(kModule, "resolve_design", "ValidationError", "give both gains.k and gains.l");
    }
    gains.k = *config.gain_k;
    gains.l = *config.gain_l;
    synthesis::validate_gains(a0, b0, c0, gains, design.delta);
  } else {
    Eigen::VectorXd pc(design.n0), po(design.n0);
    for (int j = 0; j < design.n0; ++j) {
      pc(j) = -design.delta - 1.0 - j;
      po(j) = -design.delta - 2.0 - j;
    }
    if (config.poles_ctrl.has_value()) pc = *config.poles_ctrl;
    if (config.poles_obs.has_value()) po = *config.poles_obs;
    gains = synthesis::place_gains(a0, b0, c0, pc, po, design.delta);
  }
  return gains;
}

}  // namespace delaystab::io_cli
