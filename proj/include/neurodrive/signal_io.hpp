#pragma once

#include <filesystem>
#include <string>

#include "neurodrive/signal.hpp"

namespace neurodrive {

/// Signal CSV: header `t_s,<label>,...`, one row per sample. The sampling
/// rate comes from the first two timestamps; every timestamp must sit on
/// that grid within 1e-6 s.
SampledSeries read_signal_csv(const std::filesystem::path& path);
void write_signal_csv(const std::filesystem::path& path, const SampledSeries& series,
                      int significant_digits = 9);

/// Shortest round-trip text for a double ("0.1", "1e-07", ...).
std::string to_text(double v);
/// Fixed number of significant digits, general format.
std::string to_text(double v, int significant_digits);

double parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace neurodrive
