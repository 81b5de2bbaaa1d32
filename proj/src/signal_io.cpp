#include "neurodrive/signal_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "neurodrive/error.hpp"

namespace neurodrive {
namespace fs = std::filesystem;

std::string to_text(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string to_text(double v, int significant_digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, significant_digits);
  return {buf, res.ptr};
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    fail(ErrorCode::parse, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string trimmed(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

SampledSeries read_signal_csv(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::string_view rest = text;
  auto next_line = [&rest]() -> std::optional<std::string_view> {
    while (!rest.empty()) {
      const auto pos = rest.find('\n');
      std::string_view line = rest.substr(0, pos);
      rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return line;
    }
    return std::nullopt;
  };

  const auto header = next_line();
  if (!header) fail(ErrorCode::parse, path.string() + ": empty file");
  const auto cols = split_commas(*header);
  if (cols.size() < 2 || trimmed(cols[0]) != "t_s") {
    fail(ErrorCode::parse, path.string() + ": header must start with t_s and name at least one channel");
  }
  std::vector<Channel> channels;
  for (std::size_t c = 1; c < cols.size(); ++c) channels.push_back({trimmed(cols[c]), {}});

  std::vector<double> times;
  std::size_t row = 1;
  while (auto line = next_line()) {
    ++row;
    const auto fields = split_commas(*line);
    if (fields.size() != cols.size()) {
      fail(ErrorCode::parse, path.string() + ": row " + std::to_string(row) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " + std::to_string(cols.size()));
    }
    times.push_back(parse_double(fields[0]));
    for (std::size_t c = 1; c < fields.size(); ++c) channels[c - 1].samples.push_back(parse_double(fields[c]));
  }
  if (times.size() < 2) fail(ErrorCode::too_short, path.string() + ": need at least two samples");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) fail(ErrorCode::parse, path.string() + ": timestamps must ascend");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - (times[0] + static_cast<double>(i) * dt)) > 1e-6) {
      fail(ErrorCode::parse, path.string() + ": non-uniform timestamp at row " + std::to_string(i + 2));
    }
  }
  return SampledSeries(1.0 / dt, std::move(channels));
}

void write_signal_csv(const fs::path& path, const SampledSeries& series, int significant_digits) {
  std::string out = "t_s";
  for (const auto& ch : series.channels()) out += "," + ch.label;
  out += '\n';
  for (std::size_t i = 0; i < series.length(); ++i) {
    out += to_text(static_cast<double>(i) / series.sampling_rate_hz());
    for (const auto& ch : series.channels()) {
      out += ',';
      out += to_text(ch.samples[i], significant_digits);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace neurodrive
