#pragma once

#include <Eigen/Dense>

#include "delaystab/errors.hpp"

namespace delaystab {

/// A coefficient function on [0,1], given either as polynomial coefficients
/// (ascending powers, exact derivative) or as equispaced samples (derivative
/// by centered differences).
class FunctionInput {
public:
  enum class Kind { Polynomial, Table };

  static FunctionInput polynomial(Eigen::VectorXd coeffs);
  static FunctionInput constant(double value) {
    return polynomial(Eigen::VectorXd::Constant(1, value));
  }
  static FunctionInput table(Eigen::VectorXd samples);

  double eval(double x) const;
  double deriv(double x) const;

  Eigen::VectorXd sample(const Eigen::VectorXd& grid) const;
  Eigen::VectorXd sample_deriv(const Eigen::VectorXd& grid) const;

  Kind kind() const { return kind_; }
  const Eigen::VectorXd& data() const { return data_; }

private:
  FunctionInput(Kind kind, Eigen::VectorXd data) : kind_(kind), data_(std::move(data)) {}

  Kind kind_ = Kind::Polynomial;
  Eigen::VectorXd data_;
};

}  // namespace delaystab
