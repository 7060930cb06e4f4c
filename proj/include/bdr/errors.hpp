#pragma once

#include <stdexcept>
#include <string>

namespace bdr {

// Every library failure carries a short machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

// Raised when a requested quantity is an infinite series at the given parameter.
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& what) : Error("divergent", what) {}
};

struct BudgetError : Error {
  explicit BudgetError(const std::string& what) : Error("budget", what) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& what) : Error("no-convergence", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};

struct ConfigError : Error {
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : Error("config", line > 0 ? "line " + std::to_string(line) + ", column " +
                                       std::to_string(column) + ": " + what
                                 : what),
        line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

}  // namespace bdr
