#include "delaystab/expressions.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <sstream>

#include "delaystab/errors.hpp"

namespace delaystab::io_cli {

namespace {
constexpr const char* kModule = "io_cli";
constexpr double kPi = 3.14159265358979323846;

struct Lexer {
  std::string text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  bool consume(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  bool consume_word(const char* word) {
    skip_ws();
    const size_t len = std::strlen(word);
    if (text.compare(pos, len, word) == 0) {
      const char next = pos + len < text.size() ? text[pos + len] : '\0';
      if (!std::isalnum(static_cast<unsigned char>(next)) && next != '_') {
        pos += len;
        return true;
      }
    }
    return false;
  }
  double number() {
    skip_ws();
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text.substr(pos), &used);
    } catch (const std::exception&) {
      fail(kModule, "parse_expression", "ParseError",
           "expected a number at '" + text.substr(pos, 12) + "'");
    }
    pos += used;
    return v;
  }
  [[noreturn]] void error(const std::string& what) {
    fail(kModule, "parse_expression", "ParseError",
         what + " near '" + text.substr(pos, 16) + "'");
  }
};

bool is_variable(Lexer& lex) {
  return lex.consume_word("x") || lex.consume_word("t") || lex.consume_word("tau");
}

// linear argument of a trig factor: sum of number products with at most a
// single power of the variable; returns (omega, phase)
std::pair<double, double> parse_linear(Lexer& lex) {
  double omega = 0.0, phase = 0.0;
  bool first = true;
  while (true) {
    double sign = 1.0;
    if (lex.consume('+')) {
    } else if (lex.consume('-')) {
      sign = -1.0;
    } else if (!first) {
      break;
    }
    first = false;

    double coef = 1.0;
    bool has_var = false;
    bool factor_expected = true;
    while (factor_expected) {
      if (is_variable(lex)) {
        if (has_var) lex.error("argument must be linear in the variable");
        has_var = true;
      } else if (lex.consume_word("pi")) {
        coef *= kPi;
      } else {
        const char c = lex.peek();
        if ((c >= '0' && c <= '9') || c == '.') {
          coef *= lex.number();
        } else {
          lex.error("expected number, pi or the variable");
        }
      }
      factor_expected = lex.consume('*');
    }
    if (has_var) {
      omega += sign * coef;
    } else {
      phase += sign * coef;
    }
    if (lex.peek() == ')') break;
  }
  return {omega, phase};
}

ExprFunction::Term parse_term(Lexer& lex, double sign) {
  ExprFunction::Term term;
  term.coef = sign;
  bool structural = false;  // saw x^a or a trig factor already
  bool any_factor = false;

  while (true) {
    if (is_variable(lex)) {
      if (structural) lex.error("at most one x/trig factor per term");
      structural = true;
      term.kind = ExprFunction::Term::Kind::Power;
      term.exponent = 1;
      if (lex.consume('^')) {
        const double e = lex.number();
        if (e < 0.0 || e != std::floor(e)) lex.error("exponent must be a non-negative integer");
        term.exponent = static_cast<int>(e);
      }
    } else if (lex.peek() == 's' || lex.peek() == 'c') {
      bool is_cos = false;
      if (lex.consume_word("sin")) {
        is_cos = false;
      } else if (lex.consume_word("cos")) {
        is_cos = true;
      } else {
        lex.error("expected sin or cos");
      }
      if (structural) lex.error("at most one x/trig factor per term");
      structural = true;
      term.kind = is_cos ? ExprFunction::Term::Kind::Cos : ExprFunction::Term::Kind::Sin;
      if (!lex.consume('(')) lex.error("expected '(' after sin/cos");
      auto [omega, phase] = parse_linear(lex);
      term.omega = omega;
      term.phase = phase;
      if (!lex.consume(')')) lex.error("expected ')' closing the trig argument");
    } else if (lex.consume_word("pi")) {
      term.coef *= kPi;
    } else {
      const char c = lex.peek();
      if ((c >= '0' && c <= '9') || c == '.') {
        term.coef *= lex.number();
      } else if (!any_factor) {
        lex.error("expected a term");
      } else {
        lex.error("unexpected character");
      }
    }
    any_factor = true;
    if (!lex.consume('*')) break;
  }
  if (!structural) {
    term.kind = ExprFunction::Term::Kind::Power;
    term.exponent = 0;
  }
  return term;
}

}  // namespace

ExprFunction ExprFunction::parse(const std::string& text) {
  Lexer lex{text};
  ExprFunction fn;
  if (lex.eof()) fail(kModule, "parse_expression", "ParseError", "empty expression");
  bool first = true;
  while (!lex.eof()) {
    double sign = 1.0;
    if (lex.consume('+')) {
    } else if (lex.consume('-')) {
      sign = -1.0;
    } else if (!first) {
      lex.error("expected '+' or '-' between terms");
    }
    first = false;
    fn.terms_.push_back(parse_term(lex, sign));
  }
  return fn;
}

double ExprFunction::eval(double x) const {
  double v = 0.0;
  for (const auto& term : terms_) {
    switch (term.kind) {
      case Term::Kind::Power: v += term.coef * std::pow(x, term.exponent); break;
      case Term::Kind::Sin: v += term.coef * std::sin(term.omega * x + term.phase); break;
      case Term::Kind::Cos: v += term.coef * std::cos(term.omega * x + term.phase); break;
    }
  }
  return v;
}

double ExprFunction::deriv(double x) const {
  double v = 0.0;
  for (const auto& term : terms_) {
    switch (term.kind) {
      case Term::Kind::Power:
        if (term.exponent > 0) {
          v += term.coef * term.exponent * std::pow(x, term.exponent - 1);
        }
        break;
      case Term::Kind::Sin:
        v += term.coef * term.omega * std::cos(term.omega * x + term.phase);
        break;
      case Term::Kind::Cos:
        v -= term.coef * term.omega * std::sin(term.omega * x + term.phase);
        break;
    }
  }
  return v;
}

Eigen::VectorXd ExprFunction::sample(const Eigen::VectorXd& grid) const {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out(i) = eval(grid(i));
  return out;
}

std::string ExprFunction::to_string() const {
  std::ostringstream os;
  for (size_t i = 0; i < terms_.size(); ++i) {
    const auto& term = terms_[i];
    if (i) os << (term.coef < 0 ? " - " : " + ");
    const double c = i ? std::abs(term.coef) : term.coef;
    switch (term.kind) {
      case Term::Kind::Power:
        os << c;
        if (term.exponent > 0) os << "*x^" << term.exponent;
        break;
      case Term::Kind::Sin: os << c << "*sin(" << term.omega << "*x+" << term.phase << ")"; break;
      case Term::Kind::Cos: os << c << "*cos(" << term.omega << "*x+" << term.phase << ")"; break;
    }
  }
  return os.str();
}

}  // namespace delaystab::io_cli
