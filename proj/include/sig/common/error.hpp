#pragma once

#include <stdexcept>
#include <string>

namespace sig {

/// Broad failure classes. The CLI maps each to an exit code.
enum class ErrorKind {
  kUsage,    // bad flags or subcommand
  kConfig,   // configuration or shape contract violated
  kData,     // missing, malformed or truncated files
  kNumeric,  // non-finite values during evaluation or training
};

/// Exception carrying a kind and a short machine-parsable category such as
/// "missing-checkpoint" or "non-finite".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string category, const std::string& message)
      : std::runtime_error(message), kind_(kind), category_(std::move(category)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& category() const noexcept { return category_; }

 private:
  ErrorKind kind_;
  std::string category_;
};

[[noreturn]] inline void throw_shape_error(const std::string& message) {
  throw Error(ErrorKind::kConfig, "shape-mismatch", message);
}

[[noreturn]] inline void throw_config_error(const std::string& message) {
  throw Error(ErrorKind::kConfig, "config", message);
}

[[noreturn]] inline void throw_data_error(const std::string& category, const std::string& message) {
  throw Error(ErrorKind::kData, category, message);
}

[[noreturn]] inline void throw_numeric_error(const std::string& message) {
  throw Error(ErrorKind::kNumeric, "non-finite", message);
}

}  // namespace sig
