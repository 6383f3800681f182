#pragma once

#include <stdexcept>
#include <string>

namespace flusense {

/// Failure category; the CLI maps it onto its exit code.
enum class ErrorKind {
  Validation,  // bad input, config or precondition
  Runtime,     // numerical failure, non-convergence, I/O during a run
};

/// Base exception for the toolkit. `module` names the component that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

inline Error validation_error(std::string module, const std::string& message) {
  return Error(ErrorKind::Validation, std::move(module), message);
}

inline Error runtime_error(std::string module, const std::string& message) {
  return Error(ErrorKind::Runtime, std::move(module), message);
}

}  // namespace flusense
