#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace delaystab {

// All failures raised by the toolkit carry the module and operation of
// origin plus a stable kind tag that callers (and tests) can match on.
class Error : public std::runtime_error {
public:
  Error(std::string module, std::string op, std::string kind, const std::string& detail)
      : std::runtime_error(module + "." + op + ": " + kind +
                           (detail.empty() ? std::string{} : ": " + detail)),
        module_(std::move(module)),
        op_(std::move(op)),
        kind_(std::move(kind)) {}

  const std::string& module_name() const noexcept { return module_; }
  const std::string& operation() const noexcept { return op_; }
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string module_;
  std::string op_;
  std::string kind_;
};

[[noreturn]] inline void fail(const char* module, const char* op, const char* kind,
                              const std::string& detail = {}) {
  throw Error(module, op, kind, detail);
}

}  // namespace delaystab
