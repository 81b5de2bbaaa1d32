#include "neurodrive/peripheral.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "neurodrive/assets.hpp"
#include "neurodrive/error.hpp"

namespace neurodrive {

namespace {

std::span<const double> only_channel(const SampledSeries& s) {
  if (s.channel_count() != 1) {
    fail(ErrorCode::invalid_argument, "expected a single-channel series, got " + std::to_string(s.channel_count()));
  }
  return s.samples(0);
}

}  // namespace

PulseAnalysis analyze_pulse(const SampledSeries& ppg) {
  const auto x = only_channel(ppg);
  const double rate = ppg.sampling_rate_hz();
  const auto smoothed = moving_average(x, odd_window_samples(kPulseSmoothingS, rate));
  const auto scaled = minmax_scale(smoothed);
  PulseAnalysis out;
  out.peaks = detect_peaks(scaled.values, kPulseMinPeakDistanceS, rate);
  for (std::size_t i = 1; i < out.peaks.size(); ++i) {
    out.rr.intervals_s.push_back(static_cast<double>(out.peaks[i] - out.peaks[i - 1]) / rate);
  }
  return out;
}

RrSequence rr_intervals(const SampledSeries& ppg) {
  auto analysis = analyze_pulse(ppg);
  if (analysis.peaks.size() < 2) {
    fail(ErrorCode::insufficient_peaks, "found " + std::to_string(analysis.peaks.size()) + " pulse peaks, need 2");
  }
  return std::move(analysis.rr);
}

double heart_rate(std::size_t peak_count, double duration_s) {
  if (!(duration_s > 0.0)) fail(ErrorCode::invalid_argument, "duration must be positive");
  return static_cast<double>(peak_count) * 60.0 / duration_s;
}

double pnn50(const RrSequence& rr) {
  const auto& v = rr.intervals_s;
  if (v.size() < 2) fail(ErrorCode::insufficient_peaks, "pNN50 needs at least two RR intervals");
  std::size_t over = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    // milliseconds rounded to 1e-9 ms, absorbing representation error in the intervals
    const double diff_ms = std::round(std::abs(v[i] - v[i - 1]) * 1e3 * 1e9) / 1e9;
    if (diff_ms > 50.0) ++over;
  }
  return static_cast<double>(over) / static_cast<double>(v.size() - 1);
}

StatSix stat_six(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3) fail(ErrorCode::too_short, "statistical features need at least 3 samples");
  StatSix s;
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean_raw = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean_raw) * (v - s.mean_raw);
  s.std_raw = std::sqrt(ss / static_cast<double>(n));

  std::vector<double> z(n, 0.0);
  if (s.std_raw > 0.0) {
    for (std::size_t i = 0; i < n; ++i) z[i] = (x[i] - s.mean_raw) / s.std_raw;
  }
  double d1 = 0.0, d1z = 0.0, d2 = 0.0, d2z = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d1 += std::abs(x[i + 1] - x[i]);
    d1z += std::abs(z[i + 1] - z[i]);
  }
  for (std::size_t i = 0; i + 2 < n; ++i) {
    d2 += std::abs(x[i + 2] - 2.0 * x[i + 1] + x[i]);
    d2z += std::abs(z[i + 2] - 2.0 * z[i + 1] + z[i]);
  }
  s.mean_abs_d1_raw = d1 / static_cast<double>(n - 1);
  s.mean_abs_d1_std = d1z / static_cast<double>(n - 1);
  s.mean_abs_d2_raw = d2 / static_cast<double>(n - 2);
  s.mean_abs_d2_std = d2z / static_cast<double>(n - 2);
  return s;
}

PpgFeatures ppg_feature_vector(const SampledSeries& ppg) {
  const auto x = only_channel(ppg);
  const double rate = ppg.sampling_rate_hz();
  PpgFeatures out;
  const auto analysis = analyze_pulse(ppg);
  out.heart_rate_bpm = heart_rate(analysis.peaks.size(), ppg.duration_s());

  double hrv = 0.0;
  out.hrv_available = ppg.duration_s() >= kHrvMinDurationS && analysis.rr.intervals_s.size() >= 2;
  if (out.hrv_available) hrv = pnn50(analysis.rr);

  const auto smoothed = moving_average(x, odd_window_samples(kPulseSmoothingS, rate));
  out.values.push_back(hrv);
  for (double v : stat_six(smoothed).as_array()) out.values.push_back(v);
  return out;
}

std::vector<double> gsr_feature_vector(const SampledSeries& gsr, const GsrOptions& options) {
  const auto x = only_channel(gsr);
  const double rate = gsr.sampling_rate_hz();
  const auto smoothed = moving_average(x, odd_window_samples(options.smoothing_s, rate));
  const auto peaks = detect_peaks(smoothed, options.min_peak_distance_s, rate);
  double height = 0.0;
  for (auto p : peaks) height += std::abs(smoothed[p]);
  if (!peaks.empty()) height /= static_cast<double>(peaks.size());

  std::vector<double> out = {static_cast<double>(peaks.size()), height};
  for (double v : stat_six(smoothed).as_array()) out.push_back(v);
  return out;
}

Colormap load_colormap(std::string_view json_text) {
  const auto doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::parse, "malformed colormap JSON");
  const auto& entries = doc.is_array() ? doc : doc.value("entries", nlohmann::json::array());
  if (!entries.is_array() || entries.size() != 256) fail(ErrorCode::parse, "colormap needs 256 [r,g,b] entries");
  Colormap map{};
  for (std::size_t i = 0; i < 256; ++i) {
    const auto& e = entries[i];
    if (!e.is_array() || e.size() != 3) fail(ErrorCode::parse, "colormap entry " + std::to_string(i) + " is not [r,g,b]");
    for (std::size_t c = 0; c < 3; ++c) {
      const int v = e[c].get<int>();
      if (v < 0 || v > 255) fail(ErrorCode::parse, "colormap value out of range");
      map[i][c] = static_cast<std::uint8_t>(v);
    }
  }
  return map;
}

const Colormap& default_colormap() {
  static const Colormap map = load_colormap(assets::colormap_json());
  return map;
}

RgbImage spectrogram_image(std::span<const double> x, double sampling_rate_hz, double fmax_hz,
                           const Colormap& colormap) {
  // The floor sits 80 dB under the peak rather than at an absolute level, so
  // a gain on the input cancels in the normalization.
  StftParams params;
  params.floor_db = -300.0;
  const auto spec = stft_spectrogram(x, sampling_rate_hz, fmax_hz, params);
  const double top = spec.log_power.maxCoeff();
  const Eigen::MatrixXd m = spec.log_power.array().max(top - 80.0).matrix();
  const double lo = m.minCoeff();
  const double range = top - lo;
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  RgbImage raw(cols, rows);
  for (int r = 0; r < rows; ++r) {
    const int y = rows - 1 - r;
    for (int c = 0; c < cols; ++c) {
      const double v = range > 0.0 ? (m(r, c) - lo) / range : 0.0;
      const auto& rgb = colormap[static_cast<std::size_t>(std::clamp(std::lround(v * 255.0), 0L, 255L))];
      for (int k = 0; k < 3; ++k) raw.at(c, y, k) = rgb[k];
    }
  }
  return resize_bilinear(raw, kImageSide, kImageSide);
}

}  // namespace neurodrive
