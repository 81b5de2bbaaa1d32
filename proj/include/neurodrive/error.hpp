#pragma once

#include <stdexcept>
#include <string>

namespace neurodrive {

enum class ErrorCode {
  invalid_argument,
  invalid_band,
  too_short,
  empty_band,
  empty_input,
  length_mismatch,
  dimension_mismatch,
  insufficient_peaks,
  single_class,
  undefined_metric,
  degenerate,
  config,
  io,
  parse,
  not_found,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. The code is what the C API maps to a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace neurodrive
