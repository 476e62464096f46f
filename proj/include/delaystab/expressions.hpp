#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace delaystab::io_cli {

/// Sum of terms c*x^a (non-negative integer a) and c*sin/cos(w*x + p).
/// Small closed grammar for initial profiles and output histories; supports
/// exact evaluation and differentiation. The variable letter may be x or t.
class ExprFunction {
public:
  struct Term {
    enum class Kind { Power, Sin, Cos };
    Kind kind = Kind::Power;
    double coef = 0.0;
    int exponent = 0;    // Power terms
    double omega = 0.0;  // trig terms: argument w*x + phase
    double phase = 0.0;
  };

  static ExprFunction parse(const std::string& text);
  static ExprFunction zero() { return ExprFunction{}; }

  double eval(double x) const;
  double deriv(double x) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& grid) const;
  const std::vector<Term>& terms() const { return terms_; }
  std::string to_string() const;

private:
  std::vector<Term> terms_;
};

}  // namespace delaystab::io_cli
