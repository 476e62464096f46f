#include "delaystab/function_input.hpp"

#include <algorithm>
#include <cmath>

namespace delaystab {

FunctionInput FunctionInput::polynomial(Eigen::VectorXd coeffs) {
  if (coeffs.size() == 0) fail("plant_spectral", "function_input", "BadFunction", "empty polynomial");
  return FunctionInput(Kind::Polynomial, std::move(coeffs));
}

FunctionInput FunctionInput::table(Eigen::VectorXd samples) {
  if (samples.size() < 2) fail("plant_spectral", "function_input", "BadFunction", "table needs two samples");
  return FunctionInput(Kind::Table, std::move(samples));
}

double FunctionInput::eval(double x) const {
  if (kind_ == Kind::Polynomial) {
    double v = 0.0;
    for (Eigen::Index i = data_.size() - 1; i >= 0; --i) v = v * x + data_(i);
    return v;
  }
  // linear interpolation on the table's own uniform grid
  const Eigen::Index n = data_.size();
  const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(n - 1);
  const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), n - 2);
  const double frac = pos - static_cast<double>(i);
  return (1.0 - frac) * data_(i) + frac * data_(i + 1);
}

double FunctionInput::deriv(double x) const {
  if (kind_ == Kind::Polynomial) {
    double v = 0.0;
    for (Eigen::Index i = data_.size() - 1; i >= 1; --i) v = v * x + data_(i) * static_cast<double>(i);
    return v;
  }
  const Eigen::Index n = data_.size();
  const double dx = 1.0 / static_cast<double>(n - 1);
  const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(n - 1);
  Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::lround(pos)), n - 1);
  if (i == 0) return (data_(1) - data_(0)) / dx;
  if (i == n - 1) return (data_(n - 1) - data_(n - 2)) / dx;
  return (data_(i + 1) - data_(i - 1)) / (2.0 * dx);
}

Eigen::VectorXd FunctionInput::sample(const Eigen::VectorXd& grid) const {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out(i) = eval(grid(i));
  return out;
}

Eigen::VectorXd FunctionInput::sample_deriv(const Eigen::VectorXd& grid) const {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out(i) = deriv(grid(i));
  return out;
}

}  // namespace delaystab
