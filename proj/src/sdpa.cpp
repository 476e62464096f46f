#include "delaystab/sdpa.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "delaystab/numerics.hpp"

namespace delaystab::certification {

namespace {
constexpr const char* kModule = "certification";

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Builder {
  // accumulate on (var, block, i, j) so every cell is emitted exactly once,
  // in canonical order
  std::map<std::array<int, 4>, double> cells;

  void add(int var, int block, int i, int j, double value) {
    if (value == 0.0) return;
    if (i > j) std::swap(i, j);
    cells[{var, block, i, j}] += value;
  }

  // symmetric matrix placed at a row/column offset inside a block
  void add_matrix(int var, int block, int offset, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = r; c < m.cols(); ++c) {
        add(var, block, offset + static_cast<int>(r) + 1, offset + static_cast<int>(c) + 1,
            m(r, c));
      }
    }
  }

  std::vector<SdpaEntry> take() const {
    std::vector<SdpaEntry> out;
    out.reserve(cells.size());
    for (const auto& [key, value] : cells) {
      if (value != 0.0) out.push_back({key[0], key[1], key[2], key[3], value});
    }
    return out;
  }
};

}  // namespace

SdpaProblem build_sdpa(const CertificateProblem& problem, double alpha, double mu) {
  if (!(alpha > 1.0)) fail(kModule, "export_sdpa", "BadAlpha", "alpha must exceed 1");
  const auto& red = problem.reduced;
  const int dim = static_cast<int>(red.f.rows());  // 2N
  const int tdim = dim + 1;                        // Theta1 size
  const int n0 = red.n0;
  const bool neumann = problem.variant() == synthesis::Variant::NeumannOut;
  const bool joint = problem.variant() == synthesis::Variant::JointDelay;

  const int np = dim * (dim + 1) / 2;
  const int nq1 = joint ? n0 * (n0 + 1) / 2 : 0;
  const int num_vars = np + 2 + nq1 + (joint ? 1 : 0);

  SdpaProblem out;
  out.comments.push_back("* delay-stab export");
  out.comments.push_back("* vars: P upper triangle (row-major, dim " + std::to_string(dim) +
                         "), beta, gamma" +
                         (joint ? std::string(", Q1 upper triangle (dim ") + std::to_string(n0) +
                                      "), Q2"
                                : std::string()));
  out.comments.push_back("* alpha = " + format_value(alpha) + ", mu = " + format_value(mu) +
                         ", variant = " + synthesis::variant_name(problem.variant()));
  out.num_vars = num_vars;
  out.block_sizes.push_back(tdim + dim);  // -Theta1 (+) P - mu I
  out.block_sizes.push_back(-3);          // -Theta2, beta - mu, gamma - mu
  if (neumann) out.block_sizes.push_back(-1);   // Theta3
  if (joint) {
    out.block_sizes.push_back(n0 > 1 ? n0 : -1);  // -R1
    out.block_sizes.push_back(-1);                // -R2
  }
  out.objective.assign(num_vars, 0.0);

  Builder b;
  const double exp_ho = std::exp(-2.0 * problem.delta * problem.h_o);
  const double exp_hi = std::exp(-2.0 * problem.delta * problem.h_i);
  const double bracket =
      -(1.0 - 1.0 / alpha) * problem.lambda_next + problem.q_c + problem.delta;
  const double m_out = neumann
                           ? problem.tails.m_phi_eps * std::pow(problem.lambda_next,
                                                                0.5 + problem.tails.eps)
                           : problem.tails.m_phi;

  // F0 = -G0: constant parts are the mu offsets
  for (int i = 0; i < dim; ++i) b.add(0, 1, tdim + i + 1, tdim + i + 1, mu);
  b.add(0, 2, 2, 2, mu);
  b.add(0, 2, 3, 3, mu);

  // P variables
  int var = 1;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j, ++var) {
      Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(dim, dim);
      basis(i, j) = 1.0;
      basis(j, i) = 1.0;  // no-op when i == j
      const Eigen::MatrixXd top = -(red.f.transpose() * basis + basis * red.f +
                                    2.0 * problem.delta * basis);
      b.add_matrix(var, 1, 0, top);
      const Eigen::VectorXd border = -(basis * red.lcal);
      for (int r = 0; r < dim; ++r) b.add(var, 1, r + 1, tdim, border(r));
      b.add_matrix(var, 1, tdim, basis);  // P - mu I sub-block
    }
  }

  // beta
  const int var_beta = var++;
  b.add(var_beta, 1, tdim, tdim, exp_ho);
  b.add(var_beta, 2, 1, 1, -m_out);
  b.add(var_beta, 2, 2, 2, 1.0);
  if (neumann) {
    b.add(var_beta, 3, 1, 1,
          -problem.tails.m_phi_eps / std::pow(problem.lambda_next, 0.5 - problem.tails.eps));
  }

  // gamma
  const int var_gamma = var++;
  if (!joint) {
    const Eigen::MatrixXd kk = problem.k.transpose() * problem.k;
    b.add_matrix(var_gamma, 1, 0, Eigen::MatrixXd(-alpha * problem.tails.tail_a * kk));
    const Eigen::MatrixXd ee = red.e.transpose() * red.e;
    b.add_matrix(var_gamma, 1, 0, Eigen::MatrixXd(-alpha * problem.tails.tail_b * ee));
  }
  b.add(var_gamma, 2, 1, 1, -2.0 * bracket);
  b.add(var_gamma, 2, 3, 3, 1.0);
  if (neumann) b.add(var_gamma, 3, 1, 1, 2.0 * (1.0 - 1.0 / alpha));
  if (joint) {
    const int blk_r1 = 3, blk_r2 = 4;
    const Eigen::MatrixXd kk = problem.k.transpose() * problem.k;
    b.add_matrix(var_gamma, blk_r1, 0, Eigen::MatrixXd(-alpha * problem.tails.tail_a * kk));
    b.add(var_gamma, blk_r2, 1, 1, -alpha * problem.tails.tail_b);

    // Q1 entries enter -Theta1 and -R1
    int qvar = var;
    for (int i = 0; i < n0; ++i) {
      for (int j = i; j < n0; ++j, ++qvar) {
        Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n0, n0);
        basis(i, j) = 1.0;
        basis(j, i) = 1.0;
        b.add_matrix(qvar, 1, 0, Eigen::MatrixXd(-basis));
        b.add_matrix(qvar, blk_r1, 0, Eigen::MatrixXd(exp_hi * basis));
      }
    }
    var = qvar;
    const int var_q2 = var++;
    const Eigen::MatrixXd ee = red.e.transpose() * red.e;
    b.add_matrix(var_q2, 1, 0, Eigen::MatrixXd(-ee));
    b.add(var_q2, blk_r2, 1, 1, exp_hi);
  }

  out.entries = b.take();
  return out;
}

std::string sdpa_to_string(const SdpaProblem& problem) {
  std::ostringstream os;
  for (const auto& line : problem.comments) os << line << "\n";
  os << problem.num_vars << "\n";
  os << problem.block_sizes.size() << "\n";
  for (size_t i = 0; i < problem.block_sizes.size(); ++i) {
    os << (i ? " " : "") << problem.block_sizes[i];
  }
  os << "\n";
  if (problem.objective.empty()) {
    os << "0";
  } else {
    for (size_t i = 0; i < problem.objective.size(); ++i) {
      os << (i ? " " : "") << format_value(problem.objective[i]);
    }
  }
  os << "\n";
  for (const auto& e : problem.entries) {
    os << e.var << " " << e.block << " " << e.i << " " << e.j << " " << format_value(e.value)
       << "\n";
  }
  return os.str();
}

void write_sdpa(const SdpaProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(kModule, "export_sdpa", "IoError", "cannot open " + path);
  out << sdpa_to_string(problem);
  if (!out) fail(kModule, "export_sdpa", "IoError", "write failed for " + path);
}

SdpaProblem parse_sdpa(std::istream& in) {
  SdpaProblem out;
  std::string line;
  // leading comment lines start with * or "
  while (std::getline(in, line)) {
    if (!line.empty() && (line[0] == '*' || line[0] == '"')) {
      out.comments.push_back(line);
      continue;
    }
    break;
  }
  if (line.empty() && out.comments.empty()) {
    fail(kModule, "export_sdpa", "ParseError", "empty SDPA stream");
  }
  out.num_vars = std::stoi(line);
  if (!std::getline(in, line)) fail(kModule, "export_sdpa", "ParseError", "missing block count");
  const int nblocks = std::stoi(line);
  if (!std::getline(in, line)) fail(kModule, "export_sdpa", "ParseError", "missing block sizes");
  {
    std::istringstream ls(line);
    int v;
    while (ls >> v) out.block_sizes.push_back(v);
  }
  if (static_cast<int>(out.block_sizes.size()) != nblocks) {
    fail(kModule, "export_sdpa", "ParseError", "block size count mismatch");
  }
  if (!std::getline(in, line)) fail(kModule, "export_sdpa", "ParseError", "missing objective");
  {
    std::istringstream ls(line);
    double v;
    while (ls >> v) out.objective.push_back(v);
  }
  SdpaEntry e;
  while (in >> e.var >> e.block >> e.i >> e.j >> e.value) out.entries.push_back(e);
  return out;
}

SdpaProblem parse_sdpa_string(const std::string& text) {
  std::istringstream in(text);
  return parse_sdpa(in);
}

SdpaProblem read_sdpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(kModule, "export_sdpa", "IoError", "cannot open " + path);
  return parse_sdpa(in);
}

Eigen::VectorXd sdpa_point(const CertificateProblem& problem, const CertificateReport& report) {
  const int dim = static_cast<int>(problem.reduced.f.rows());
  const bool joint = problem.variant() == synthesis::Variant::JointDelay;
  const int n0 = problem.reduced.n0;
  const int np = dim * (dim + 1) / 2;
  Eigen::VectorXd x(np + 2 + (joint ? n0 * (n0 + 1) / 2 + 1 : 0));
  int var = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) x(var++) = report.p_matrix(i, j);
  x(var++) = report.beta;
  x(var++) = report.gamma;
  if (joint) {
    for (int i = 0; i < n0; ++i)
      for (int j = i; j < n0; ++j) x(var++) = report.q1(i, j);
    x(var++) = report.q2;
  }
  return x;
}

std::vector<Eigen::MatrixXd> sdpa_evaluate(const SdpaProblem& problem, const Eigen::VectorXd& x) {
  if (x.size() != problem.num_vars) {
    fail(kModule, "export_sdpa", "DimensionMismatch", "point size != num_vars");
  }
  std::vector<Eigen::MatrixXd> blocks;
  for (int size : problem.block_sizes) {
    const int s = std::abs(size);
    blocks.push_back(Eigen::MatrixXd::Zero(s, s));
  }
  for (const auto& e : problem.entries) {
    const double weight = e.var == 0 ? -1.0 : x(e.var - 1);
    auto& blk = blocks.at(e.block - 1);
    blk(e.i - 1, e.j - 1) += weight * e.value;
    if (e.i != e.j) blk(e.j - 1, e.i - 1) += weight * e.value;
  }
  return blocks;
}

}  // namespace delaystab::certification
