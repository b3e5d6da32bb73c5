#pragma once

#include <stdexcept>
#include <string>

namespace badacost {

enum class ErrorKind {
  invalid_argument,
  invalid_cost_matrix,
  dimension_mismatch,
  empty_input,
  parse,
  class_too_small,
  perfect_baseline,
  version_mismatch,
  truncated,
  checksum,
  io,
};

const char* to_string(ErrorKind kind);

/// Single exception type thrown by the library. `kind()` lets callers
/// (the CLI in particular) map failures to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace badacost
