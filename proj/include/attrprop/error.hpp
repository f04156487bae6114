// Error taxonomy. Every failure mode exposed by the library maps to a stable
// code so the CLI can exit with a machine-readable status.
#pragma once

#include <stdexcept>
#include <string>

namespace attrprop {

enum class ErrorCode : int {
  io_error = 10,
  schema_error = 11,
  dimension_mismatch = 12,
  duplicate_id = 13,
  degenerate_attribute = 14,
  undefined_correlation = 15,
  insufficient_nodes = 16,
  isolated_node = 17,
  no_labeled_data = 18,
  empty_class = 19,
  size_limit = 20,
  nonpositive_box = 21,
  degenerate_trait = 22,
  id_mismatch = 23,
  one_class_absent = 24,
  empty_set = 25,
  infeasible_correlation = 26,
  invalid_config = 27,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace attrprop
