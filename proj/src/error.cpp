#include "neurodrive/error.hpp"

namespace neurodrive {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_band: return "invalid-band";
    case ErrorCode::too_short: return "too-short";
    case ErrorCode::empty_band: return "empty-band";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::insufficient_peaks: return "insufficient-peaks";
    case ErrorCode::single_class: return "single-class";
    case ErrorCode::undefined_metric: return "undefined-metric";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::not_found: return "not-found";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace neurodrive
