#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace neurodrive {

struct Channel {
  std::string label;
  std::vector<double> samples;
};

/// Uniformly sampled multi-channel signal. Construction enforces a positive
/// rate, equal channel lengths and finite samples.
class SampledSeries {
 public:
  SampledSeries(double sampling_rate_hz, std::vector<Channel> channels);

  static SampledSeries mono(double sampling_rate_hz, std::vector<double> samples,
                            std::string label = "x");

  double sampling_rate_hz() const { return rate_; }
  std::size_t channel_count() const { return channels_.size(); }
  std::size_t length() const { return channels_.empty() ? 0 : channels_.front().samples.size(); }
  double duration_s() const { return static_cast<double>(length()) / rate_; }

  const std::vector<Channel>& channels() const { return channels_; }
  const Channel& channel(std::size_t i) const { return channels_.at(i); }
  std::span<const double> samples(std::size_t i) const { return channels_.at(i).samples; }
  std::optional<std::size_t> find(std::string_view label) const;

  /// Samples [begin, begin + count) of every channel.
  SampledSeries slice(std::size_t begin, std::size_t count) const;

 private:
  double rate_;
  std::vector<Channel> channels_;
};

/// Half-open frequency interval [low_hz, high_hz).
struct Band {
  double low_hz;
  double high_hz;
};

inline constexpr Band kTheta{4.0, 7.0};
inline constexpr Band kAlpha{7.0, 13.0};
inline constexpr Band kBeta{13.0, 30.0};

struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> power;  // one-sided density, units^2/Hz
};

/// Rows are frequency bins (ascending), columns are time bins.
struct SpectrogramMatrix {
  std::vector<double> time_bins_s;
  std::vector<double> freq_bins_hz;
  Eigen::MatrixXd log_power;  // dB
};

struct WelchParams {
  double window_s = 2.0;
  double overlap = 0.5;
};

struct StftParams {
  std::size_t window = 128;
  std::size_t hop = 32;
  std::size_t nfft = 512;
  double floor_db = -80.0;
};

inline constexpr int kBandpassOrder = 4;

/// Butterworth high-pass + low-pass (order kBandpassOrder each), run forward
/// then backward so the result has zero phase.
SampledSeries bandpass_filter(const SampledSeries& series, double low_hz, double high_hz);

/// Centered moving average; the window is rounded to the nearest odd sample
/// count and truncated at the edges.
SampledSeries moving_average(const SampledSeries& series, double window_s);
std::vector<double> moving_average(std::span<const double> x, std::size_t window_samples);
std::size_t odd_window_samples(double window_s, double sampling_rate_hz);

struct ScaledSignal {
  std::vector<double> values;
  bool degenerate = false;  // constant input, all zeros returned
};

ScaledSignal minmax_scale(std::span<const double> x);

/// Strict local maxima, chosen greedily by height (ties: earliest index) so
/// that every kept pair is at least ceil(min_distance_s * rate) samples apart.
/// Returned ascending.
std::vector<std::size_t> detect_peaks(std::span<const double> x, double min_distance_s,
                                      double sampling_rate_hz);

/// Welch PSD with Hann windows and per-segment mean removal; FFT length equals
/// the window length.
Spectrum welch_psd(std::span<const double> x, double sampling_rate_hz,
                   const WelchParams& params = {});

/// Single Hann-windowed periodogram of the whole input, zero-padded to nfft.
Spectrum periodogram(std::span<const double> x, double sampling_rate_hz, std::size_t nfft);

/// Mean power over bins with low <= f < high.
double band_power(const Spectrum& spectrum, Band band);

double welch_band_power(std::span<const double> x, double sampling_rate_hz, Band band,
                        const WelchParams& params = {});

SpectrogramMatrix stft_spectrogram(std::span<const double> x, double sampling_rate_hz,
                                   double fmax_hz, const StftParams& params = {});

}  // namespace neurodrive
