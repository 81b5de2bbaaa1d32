#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "neurodrive/image.hpp"
#include "neurodrive/signal.hpp"

namespace neurodrive {

inline constexpr std::size_t kEegChannels = 14;
inline constexpr std::array<std::string_view, kEegChannels> kCanonicalChannels = {
    "AF3", "AF4", "F3", "F4", "F7", "F8", "FC5", "FC6", "T7", "T8", "P7", "P8", "O1", "O2"};
inline constexpr std::size_t kEntropyFeatureCount = kEegChannels * (kEegChannels - 1) / 2;
inline constexpr int kDefaultEntropyBins = 16;
inline constexpr double kEegLowCutHz = 4.0;
inline constexpr double kEegHighCutHz = 45.0;

/// 14-channel EEG in canonical channel order. Any permutation of the
/// canonical labels is accepted and reordered.
class EegTrial {
 public:
  explicit EegTrial(const SampledSeries& series);

  const SampledSeries& series() const { return series_; }
  double sampling_rate_hz() const { return series_.sampling_rate_hz(); }
  std::size_t length() const { return series_.length(); }
  double duration_s() const { return series_.duration_s(); }
  std::span<const double> channel(std::size_t i) const { return series_.samples(i); }

  EegTrial slice(std::size_t begin, std::size_t count) const { return EegTrial(series_.slice(begin, count)); }

 private:
  SampledSeries series_;
};

/// Band-pass 4-45 Hz, the only preprocessing applied before feature extraction.
EegTrial preprocess_eeg(const SampledSeries& raw);

/// Stand-in for external artifact rejection: counts samples whose absolute
/// value exceeds the threshold on any channel.
std::size_t count_amplitude_flags(const EegTrial& trial, double threshold);

// Plug-in estimators over equal-width histograms (bins per variable spanning
// that variable's own range). Results in bits, clamped at zero.
double entropy(std::span<const double> x, int bins);
double mutual_information(std::span<const double> x, std::span<const double> y, int bins);
/// H(Y|X) = H(Y) - I(X;Y).
double conditional_entropy(std::span<const double> x, std::span<const double> y, int bins);

/// H(ch_j | ch_i) for i < j in canonical order: AF3-AF4, AF3-F3, ...
std::vector<double> pairwise_entropy_features(const EegTrial& trial, int bins = kDefaultEntropyBins);

enum class EegBand { theta, alpha, beta };

struct BandPowerMap {
  EegBand band;
  std::array<double, kEegChannels> power{};
};

struct BandPowerMaps {
  BandPowerMap theta{EegBand::theta};
  BandPowerMap alpha{EegBand::alpha};
  BandPowerMap beta{EegBand::beta};
};

enum class PsdMethod {
  welch,        // 2 s Hann windows, 50% overlap; trial must hold one window
  periodogram,  // one zero-padded periodogram; for slices shorter than a window
};

BandPowerMaps band_power_maps(const EegTrial& trial, PsdMethod method = PsdMethod::welch);

/// Electrode positions inside the unit disc, nose toward +y.
struct ElectrodeLayout {
  std::array<std::array<double, 2>, kEegChannels> positions{};

  static ElectrodeLayout from_json(std::string_view json_text);
  static const ElectrodeLayout& standard();
};

struct RenderOptions {
  int grid = 32;
  double idw_power = 2.0;
  bool joint_normalization = true;
};

struct TopoImage {
  RgbImage image;
  std::array<double, 3> band_maxima{};
  bool degenerate = false;
};

/// theta -> red, alpha -> green, beta -> blue; black outside the scalp disc.
TopoImage render_topo_image(const BandPowerMap& theta, const BandPowerMap& alpha, const BandPowerMap& beta,
                            const ElectrodeLayout& layout, const RenderOptions& options = {});

/// Continuous pixel coordinate (x right, y down) of an electrode in the image.
std::array<double, 2> electrode_pixel(const ElectrodeLayout& layout, std::size_t channel);

}  // namespace neurodrive
