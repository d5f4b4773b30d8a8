#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biomeval {

/// Error categories. The CLI prints the code verbatim as the first field of
/// its single-line error message, so the spellings are part of the interface.
enum class ErrorCode {
  parse,
  validation,
  io,
  missing_id,
  dimension_mismatch,
  degenerate,
  empty_class,
  policy_mismatch,
  extractor_failure,
  invalid_config,
  unknown_preset,
  missing_landmark,
  missing_annotation,
  invalid_argument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace biomeval
