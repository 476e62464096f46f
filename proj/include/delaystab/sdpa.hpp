#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "delaystab/certification.hpp"

namespace delaystab::certification {

/// One coefficient entry of an SDPA sparse-format problem; indices are the
/// format's 1-based conventions, var 0 addresses the constant matrix F0.
struct SdpaEntry {
  int var = 0;
  int block = 1;
  int i = 1;
  int j = 1;
  double value = 0.0;
};

struct SdpaProblem {
  std::vector<std::string> comments;
  int num_vars = 0;
  std::vector<int> block_sizes;  // negative size marks a diagonal block
  std::vector<double> objective;
  std::vector<SdpaEntry> entries;
};

/// Feasibility export for a fixed alpha: find x with sum x_v F_v - F0 >= 0
/// per block. Variables are the upper triangle of P, then beta, gamma, and
/// for the joint variant the upper triangle of Q1 and the scalar Q2.
/// Blocks: [ -Theta1 (+) P - mu I ], [ -Theta2, beta - mu, gamma - mu ]diag,
/// then Theta3 (Neumann) or -R1, -R2 (joint).
SdpaProblem build_sdpa(const CertificateProblem& problem, double alpha, double mu = 1e-6);

std::string sdpa_to_string(const SdpaProblem& problem);
void write_sdpa(const SdpaProblem& problem, const std::string& path);
SdpaProblem parse_sdpa(std::istream& in);
SdpaProblem parse_sdpa_string(const std::string& text);
SdpaProblem read_sdpa(const std::string& path);

/// Variable vector of a certified report in the export's ordering.
Eigen::VectorXd sdpa_point(const CertificateProblem& problem, const CertificateReport& report);

/// Assembles sum_v x_v F_v - F0 per block (diagonal blocks returned dense).
std::vector<Eigen::MatrixXd> sdpa_evaluate(const SdpaProblem& problem, const Eigen::VectorXd& x);

}  // namespace delaystab::certification
