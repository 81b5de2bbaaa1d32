#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "neurodrive/image.hpp"
#include "neurodrive/signal.hpp"

namespace neurodrive {

inline constexpr double kPulseSmoothingS = 0.25;
inline constexpr double kPulseMinPeakDistanceS = 0.5;
inline constexpr double kGsrMinPeakDistanceS = 1.0;
inline constexpr double kHrvMinDurationS = 10.0;
inline constexpr double kPpgSpectrogramFmaxHz = 5.0;
inline constexpr double kGsrSpectrogramFmaxHz = 2.0;
inline constexpr std::size_t kPpgFeatureCount = 7;
inline constexpr std::size_t kGsrFeatureCount = 8;

struct RrSequence {
  std::vector<double> intervals_s;
};

struct PulseAnalysis {
  std::vector<std::size_t> peaks;
  RrSequence rr;
};

/// moving average (0.25 s) -> min-max scaling -> peaks at least 0.5 s apart.
PulseAnalysis analyze_pulse(const SampledSeries& ppg);
RrSequence rr_intervals(const SampledSeries& ppg);

double heart_rate(std::size_t peak_count, double duration_s);

/// Fraction of successive RR differences strictly above 50 ms.
double pnn50(const RrSequence& rr);

struct StatSix {
  double mean_raw = 0.0;
  double std_raw = 0.0;
  double mean_abs_d1_raw = 0.0;
  double mean_abs_d1_std = 0.0;
  double mean_abs_d2_raw = 0.0;
  double mean_abs_d2_std = 0.0;

  std::array<double, 6> as_array() const {
    return {mean_raw, std_raw, mean_abs_d1_raw, mean_abs_d1_std, mean_abs_d2_raw, mean_abs_d2_std};
  }
};

/// Population std; second difference is x[i+2] - 2 x[i+1] + x[i].
StatSix stat_six(std::span<const double> x);

struct PpgFeatures {
  std::vector<double> values;  // pnn50 followed by stat_six of the smoothed pulse
  double heart_rate_bpm = 0.0;
  bool hrv_available = true;
};

PpgFeatures ppg_feature_vector(const SampledSeries& ppg);

struct GsrOptions {
  double smoothing_s = kPulseSmoothingS;
  double min_peak_distance_s = kGsrMinPeakDistanceS;
};

/// [peak count, mean |peak height|] followed by stat_six of the smoothed signal.
std::vector<double> gsr_feature_vector(const SampledSeries& gsr, const GsrOptions& options = {});

Colormap load_colormap(std::string_view json_text);
const Colormap& default_colormap();

/// STFT -> dB matrix normalized to [0, 1] -> colormap -> bilinear 224x224,
/// low frequencies at the bottom.
RgbImage spectrogram_image(std::span<const double> x, double sampling_rate_hz, double fmax_hz,
                           const Colormap& colormap = default_colormap());

}  // namespace neurodrive
