#include "neurodrive/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "fft.hpp"
#include "neurodrive/error.hpp"

namespace neurodrive {

SampledSeries::SampledSeries(double sampling_rate_hz, std::vector<Channel> channels)
    : rate_(sampling_rate_hz), channels_(std::move(channels)) {
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
    fail(ErrorCode::invalid_argument, "sampling rate must be positive");
  }
  for (const auto& ch : channels_) {
    if (ch.samples.size() != channels_.front().samples.size()) {
      fail(ErrorCode::length_mismatch, "channel '" + ch.label + "' length differs");
    }
    for (double v : ch.samples) {
      if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "non-finite sample in '" + ch.label + "'");
    }
  }
}

SampledSeries SampledSeries::mono(double sampling_rate_hz, std::vector<double> samples,
                                  std::string label) {
  std::vector<Channel> chans;
  chans.push_back({std::move(label), std::move(samples)});
  return SampledSeries(sampling_rate_hz, std::move(chans));
}

std::optional<std::size_t> SampledSeries::find(std::string_view label) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].label == label) return i;
  }
  return std::nullopt;
}

SampledSeries SampledSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > length()) fail(ErrorCode::invalid_argument, "slice out of range");
  std::vector<Channel> out;
  out.reserve(channels_.size());
  for (const auto& ch : channels_) {
    out.push_back({ch.label, std::vector<double>(ch.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                                                 ch.samples.begin() + static_cast<std::ptrdiff_t>(begin + count))});
  }
  return SampledSeries(rate_, std::move(out));
}

namespace {

// Direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

std::array<double, kBandpassOrder / 2> butterworth_qs() {
  std::array<double, kBandpassOrder / 2> qs{};
  for (int k = 1; k <= kBandpassOrder / 2; ++k) {
    qs[k - 1] = 1.0 / (2.0 * std::cos((2.0 * k - 1.0) * std::numbers::pi / (2.0 * kBandpassOrder)));
  }
  return qs;
}

Biquad make_section(double cutoff_hz, double rate_hz, double q, bool highpass) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate_hz;
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s{};
  if (highpass) {
    s.b0 = (1.0 + c) / 2.0;
    s.b1 = -(1.0 + c);
  } else {
    s.b0 = (1.0 - c) / 2.0;
    s.b1 = 1.0 - c;
  }
  s.b2 = s.b0;
  s.b0 /= a0;
  s.b1 /= a0;
  s.b2 /= a0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

// Runs the cascade starting from the steady state for a constant input equal
// to x[0], which suppresses the start-up transient.
void run_cascade(const std::vector<Biquad>& sections, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const auto& s : sections) {
    const double gain = s.dc_gain();
    double z1 = (gain - s.b0) * level;
    double z2 = (s.b2 - s.a2 * gain) * level;
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
    level *= gain;
  }
}

std::vector<double> filtfilt(const std::vector<Biquad>& sections, std::span<const double> x,
                             std::size_t padlen) {
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

// Accumulates the one-sided density of one Hann-windowed, mean-removed segment.
void accumulate_segment(std::span<const double> seg, const std::vector<double>& window,
                        double rate, std::size_t nfft, std::vector<double>& acc) {
  double mean = 0.0;
  for (double v : seg) mean += v;
  mean /= static_cast<double>(seg.size());
  double wss = 0.0;
  std::vector<double> buf(seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) {
    buf[i] = (seg[i] - mean) * window[i];
    wss += window[i] * window[i];
  }
  const auto spec = detail::rfft(buf, nfft);
  if (wss <= 0.0) return;
  const double scale = 1.0 / (rate * wss);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    double p = std::norm(spec[k]) * scale;
    const bool edge = k == 0 || (nfft % 2 == 0 && k == nfft / 2);
    if (!edge) p *= 2.0;
    acc[k] += p;
  }
}

std::vector<double> bin_freqs(std::size_t nfft, double rate) {
  std::vector<double> f(nfft / 2 + 1);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * rate / static_cast<double>(nfft);
  return f;
}

}  // namespace

SampledSeries bandpass_filter(const SampledSeries& series, double low_hz, double high_hz) {
  const double nyquist = series.sampling_rate_hz() / 2.0;
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist)) {
    std::ostringstream msg;
    msg << "band [" << low_hz << ", " << high_hz << "] Hz outside (0, " << nyquist << ")";
    fail(ErrorCode::invalid_band, msg.str());
  }
  constexpr std::size_t padlen = 3 * 2 * kBandpassOrder;
  if (series.length() <= padlen) {
    fail(ErrorCode::too_short, "band-pass needs more than " + std::to_string(padlen) + " samples");
  }
  std::vector<Biquad> sections;
  for (double q : butterworth_qs()) sections.push_back(make_section(low_hz, series.sampling_rate_hz(), q, true));
  for (double q : butterworth_qs()) sections.push_back(make_section(high_hz, series.sampling_rate_hz(), q, false));

  std::vector<Channel> out;
  for (const auto& ch : series.channels()) {
    out.push_back({ch.label, filtfilt(sections, ch.samples, padlen)});
  }
  return SampledSeries(series.sampling_rate_hz(), std::move(out));
}

std::size_t odd_window_samples(double window_s, double sampling_rate_hz) {
  if (!(window_s > 0.0)) fail(ErrorCode::invalid_argument, "window must be positive");
  const double half = std::floor((window_s * sampling_rate_hz - 1.0) / 2.0 + 0.5);
  return 2 * static_cast<std::size_t>(std::max(0.0, half)) + 1;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window_samples) {
  if (window_samples == 0) fail(ErrorCode::invalid_argument, "window must hold at least one sample");
  if (window_samples > x.size()) {
    fail(ErrorCode::too_short, "moving-average window longer than series");
  }
  const std::size_t half = window_samples / 2;
  const std::size_t n = x.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += x[j];
    y[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return y;
}

SampledSeries moving_average(const SampledSeries& series, double window_s) {
  const std::size_t w = odd_window_samples(window_s, series.sampling_rate_hz());
  std::vector<Channel> out;
  for (const auto& ch : series.channels()) out.push_back({ch.label, moving_average(ch.samples, w)});
  return SampledSeries(series.sampling_rate_hz(), std::move(out));
}

ScaledSignal minmax_scale(std::span<const double> x) {
  if (x.empty()) fail(ErrorCode::empty_input, "cannot scale an empty series");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  ScaledSignal out;
  out.values.resize(x.size(), 0.0);
  if (range == 0.0) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = (x[i] - lo) / range;
  return out;
}

std::vector<std::size_t> detect_peaks(std::span<const double> x, double min_distance_s,
                                      double sampling_rate_hz) {
  if (min_distance_s < 0.0) fail(ErrorCode::invalid_argument, "negative peak distance");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] > x[i - 1] && x[i] > x[i + 1]) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });

  const auto min_gap = static_cast<std::size_t>(std::ceil(min_distance_s * sampling_rate_hz - 1e-9));
  std::set<std::size_t> kept;
  for (std::size_t idx : candidates) {
    auto above = kept.lower_bound(idx);
    if (above != kept.end() && *above - idx < min_gap) continue;
    if (above != kept.begin() && idx - *std::prev(above) < min_gap) continue;
    kept.insert(idx);
  }
  return {kept.begin(), kept.end()};
}

Spectrum welch_psd(std::span<const double> x, double sampling_rate_hz, const WelchParams& params) {
  const auto nperseg = static_cast<std::size_t>(std::lround(params.window_s * sampling_rate_hz));
  if (nperseg < 2) fail(ErrorCode::invalid_argument, "Welch window too small");
  if (x.size() < nperseg) {
    fail(ErrorCode::too_short, "series shorter than one Welch window (" + std::to_string(nperseg) + " samples)");
  }
  const auto overlap = static_cast<std::size_t>(std::lround(params.overlap * static_cast<double>(nperseg)));
  const std::size_t step = std::max<std::size_t>(1, nperseg - overlap);
  const auto window = hann_periodic(nperseg);

  std::vector<double> acc(nperseg / 2 + 1, 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + nperseg <= x.size(); start += step) {
    accumulate_segment(x.subspan(start, nperseg), window, sampling_rate_hz, nperseg, acc);
    ++segments;
  }
  for (double& p : acc) p /= static_cast<double>(segments);
  return {bin_freqs(nperseg, sampling_rate_hz), std::move(acc)};
}

Spectrum periodogram(std::span<const double> x, double sampling_rate_hz, std::size_t nfft) {
  if (x.size() < 2) fail(ErrorCode::too_short, "periodogram needs at least 2 samples");
  if (nfft < x.size()) fail(ErrorCode::invalid_argument, "nfft shorter than input");
  std::vector<double> acc(nfft / 2 + 1, 0.0);
  accumulate_segment(x, hann_periodic(x.size()), sampling_rate_hz, nfft, acc);
  return {bin_freqs(nfft, sampling_rate_hz), std::move(acc)};
}

double band_power(const Spectrum& spectrum, Band band) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < spectrum.freqs_hz.size(); ++k) {
    const double f = spectrum.freqs_hz[k];
    if (f >= band.low_hz && f < band.high_hz) {
      sum += spectrum.power[k];
      ++count;
    }
  }
  if (count == 0) {
    std::ostringstream msg;
    msg << "no spectral bins in [" << band.low_hz << ", " << band.high_hz << ") Hz";
    fail(ErrorCode::empty_band, msg.str());
  }
  return sum / static_cast<double>(count);
}

double welch_band_power(std::span<const double> x, double sampling_rate_hz, Band band,
                        const WelchParams& params) {
  if (!(band.low_hz > 0.0 && band.low_hz < band.high_hz && band.high_hz <= sampling_rate_hz / 2.0)) {
    fail(ErrorCode::invalid_band, "band outside (0, Nyquist)");
  }
  return band_power(welch_psd(x, sampling_rate_hz, params), band);
}

SpectrogramMatrix stft_spectrogram(std::span<const double> x, double sampling_rate_hz,
                                   double fmax_hz, const StftParams& params) {
  if (!(fmax_hz > 0.0 && fmax_hz < sampling_rate_hz / 2.0)) {
    fail(ErrorCode::invalid_band, "fmax must lie in (0, Nyquist)");
  }
  if (x.size() < params.window) {
    fail(ErrorCode::too_short, "series shorter than one STFT window (" + std::to_string(params.window) + " samples)");
  }
  SpectrogramMatrix out;
  const double df = sampling_rate_hz / static_cast<double>(params.nfft);
  for (std::size_t k = 0; static_cast<double>(k) * df <= fmax_hz + 1e-9 * sampling_rate_hz; ++k) {
    out.freq_bins_hz.push_back(static_cast<double>(k) * df);
  }
  for (std::size_t start = 0; start + params.window <= x.size(); start += params.hop) {
    out.time_bins_s.push_back((static_cast<double>(start) + static_cast<double>(params.window) / 2.0) /
                              sampling_rate_hz);
  }
  const auto window = hann_periodic(params.window);
  const double floor_power = std::pow(10.0, params.floor_db / 10.0);
  out.log_power.resize(static_cast<Eigen::Index>(out.freq_bins_hz.size()),
                       static_cast<Eigen::Index>(out.time_bins_s.size()));
  std::vector<double> buf(params.window);
  for (std::size_t col = 0; col < out.time_bins_s.size(); ++col) {
    const std::size_t start = col * params.hop;
    for (std::size_t i = 0; i < params.window; ++i) buf[i] = x[start + i] * window[i];
    const auto spec = detail::rfft(buf, params.nfft);
    for (std::size_t row = 0; row < out.freq_bins_hz.size(); ++row) {
      const double p = std::max(std::norm(spec[row]), floor_power);
      out.log_power(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
          std::max(10.0 * std::log10(p), params.floor_db);
    }
  }
  return out;
}

}  // namespace neurodrive
