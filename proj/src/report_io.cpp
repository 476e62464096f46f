#include "delaystab/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace delaystab::io_cli {

namespace {
constexpr const char* kModule = "io_cli";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!out.empty()) out += ",";
      out += fmt(m(i, j));
    }
  }
  return out;
}

Eigen::MatrixXd matrix_from_csv(const std::string& text, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  std::istringstream in(text);
  std::string piece;
  Eigen::Index idx = 0;
  while (std::getline(in, piece, ',')) {
    if (idx >= rows * cols) fail(kModule, "parse_report", "ParseError", "too many matrix values");
    m(idx / cols, idx % cols) = std::stod(piece);
    ++idx;
  }
  if (idx != rows * cols) fail(kModule, "parse_report", "ParseError", "matrix value count");
  return m;
}

}  // namespace

std::string report_to_kv(const certification::CertificateReport& report) {
  using Status = certification::CertificateReport::Status;
  std::ostringstream os;
  os << "status = " << (report.status == Status::Certified ? "certified" : "infeasible") << "\n";
  os << "variant = " << synthesis::variant_name(report.variant) << "\n";
  os << "n = " << report.n << "\n";
  os << "n0 = " << report.n0 << "\n";
  os << "alpha = " << fmt(report.alpha) << "\n";
  os << "beta = " << fmt(report.beta) << "\n";
  os << "gamma = " << fmt(report.gamma) << "\n";
  os << "eps = " << fmt(report.eps) << "\n";
  os << "p_multiplier = " << fmt(report.p_multiplier) << "\n";
  os << "theta1_max_eig = " << fmt(report.theta1_max_eig) << "\n";
  os << "theta2 = " << fmt(report.theta2) << "\n";
  os << "theta3 = " << fmt(report.theta3) << "\n";
  os << "r1_max_eig = " << fmt(report.r1_max_eig) << "\n";
  os << "r2 = " << fmt(report.r2) << "\n";
  os << "lyap_residual = " << fmt(report.lyap_residual) << "\n";
  os << "delta = " << fmt(report.delta) << "\n";
  os << "h_o = " << fmt(report.h_o) << "\n";
  os << "h_i = " << fmt(report.h_i) << "\n";
  os << "lambda_next = " << fmt(report.lambda_next) << "\n";
  os << "q_c = " << fmt(report.q_c) << "\n";
  os << "tail_a = " << fmt(report.tail_a) << "\n";
  os << "tail_b = " << fmt(report.tail_b) << "\n";
  os << "m_phi_used = " << fmt(report.m_phi_used) << "\n";
  os << "best_violation = " << fmt(report.best_violation) << "\n";
  os << "p_rows = " << report.p_matrix.rows() << "\n";
  os << "p_matrix = " << matrix_csv(report.p_matrix) << "\n";
  os << "q1_rows = " << report.q1.rows() << "\n";
  if (report.q1.size() > 0) os << "q1 = " << matrix_csv(report.q1) << "\n";
  os << "q2 = " << fmt(report.q2) << "\n";
  return os.str();
}

certification::CertificateReport parse_report_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail(kModule, "parse_report", "ParseError", "missing key " + key);
    return it->second;
  };
  certification::CertificateReport report;
  report.status = need("status") == "certified"
                      ? certification::CertificateReport::Status::Certified
                      : certification::CertificateReport::Status::Infeasible;
  const std::string variant = need("variant");
  report.variant = variant == "neumann"  ? synthesis::Variant::NeumannOut
                   : variant == "joint"  ? synthesis::Variant::JointDelay
                                         : synthesis::Variant::DirichletOut;
  report.n = std::stoi(need("n"));
  report.n0 = std::stoi(need("n0"));
  report.alpha = std::stod(need("alpha"));
  report.beta = std::stod(need("beta"));
  report.gamma = std::stod(need("gamma"));
  report.eps = std::stod(need("eps"));
  report.p_multiplier = std::stod(need("p_multiplier"));
  report.theta1_max_eig = std::stod(need("theta1_max_eig"));
  report.theta2 = std::stod(need("theta2"));
  report.theta3 = std::stod(need("theta3"));
  report.r1_max_eig = std::stod(need("r1_max_eig"));
  report.r2 = std::stod(need("r2"));
  report.lyap_residual = std::stod(need("lyap_residual"));
  report.delta = std::stod(need("delta"));
  report.h_o = std::stod(need("h_o"));
  report.h_i = std::stod(need("h_i"));
  report.lambda_next = std::stod(need("lambda_next"));
  report.q_c = std::stod(need("q_c"));
  report.tail_a = std::stod(need("tail_a"));
  report.tail_b = std::stod(need("tail_b"));
  report.m_phi_used = std::stod(need("m_phi_used"));
  report.best_violation = std::stod(need("best_violation"));
  const Eigen::Index p_rows = std::stoi(need("p_rows"));
  if (p_rows > 0) report.p_matrix = matrix_from_csv(need("p_matrix"), p_rows, p_rows);
  const Eigen::Index q1_rows = std::stoi(need("q1_rows"));
  if (q1_rows > 0) report.q1 = matrix_from_csv(need("q1"), q1_rows, q1_rows);
  report.q2 = std::stod(need("q2"));
  return report;
}

void write_report_kv(const certification::CertificateReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(kModule, "write_report", "IoError", "cannot open " + path);
  out << report_to_kv(report);
}

certification::CertificateReport read_report_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(kModule, "parse_report", "IoError", "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_report_kv(buffer.str());
}

std::string report_to_text(const certification::CertificateReport& report) {
  using Status = certification::CertificateReport::Status;
  std::ostringstream os;
  os << "certificate: "
     << (report.status == Status::Certified ? "CERTIFIED" : "INFEASIBLE") << "\n";
  os << "  variant        " << synthesis::variant_name(report.variant) << "\n";
  os << "  observer order " << report.n << " (N0 = " << report.n0 << ")\n";
  os << "  delta          " << report.delta << "\n";
  os << "  delays         h_o = " << report.h_o << ", h_i = " << report.h_i << "\n";
  if (report.status == Status::Certified) {
    os << "  alpha/beta/gamma " << report.alpha << " / " << report.beta << " / " << report.gamma
       << "\n";
    if (report.variant == synthesis::Variant::NeumannOut) os << "  eps            " << report.eps << "\n";
    os << "  theta1 max eig " << report.theta1_max_eig << "\n";
    os << "  theta2         " << report.theta2 << "\n";
    if (report.variant == synthesis::Variant::NeumannOut) {
      os << "  theta3         " << report.theta3 << "\n";
    }
    if (report.variant == synthesis::Variant::JointDelay) {
      os << "  r1 max eig     " << report.r1_max_eig << "\n";
      os << "  r2             " << report.r2 << "\n";
    }
    os << "  lyap residual  " << report.lyap_residual << "\n";
  } else {
    os << "  deepest order  " << report.n << "\n";
    os << "  best violation " << report.best_violation << "\n";
  }
  return os.str();
}

}  // namespace delaystab::io_cli
