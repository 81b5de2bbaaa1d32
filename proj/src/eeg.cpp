#include "neurodrive/eeg.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "neurodrive/assets.hpp"
#include "neurodrive/error.hpp"

namespace neurodrive {

namespace {

SampledSeries canonical_order(const SampledSeries& series) {
  if (series.channel_count() != kEegChannels) {
    fail(ErrorCode::invalid_argument,
         "EEG trial needs 14 channels, got " + std::to_string(series.channel_count()));
  }
  std::vector<Channel> ordered;
  ordered.reserve(kEegChannels);
  for (auto label : kCanonicalChannels) {
    const auto idx = series.find(label);
    if (!idx) fail(ErrorCode::invalid_argument, "EEG trial is missing channel " + std::string(label));
    ordered.push_back(series.channel(*idx));
  }
  return SampledSeries(series.sampling_rate_hz(), std::move(ordered));
}

std::vector<int> bin_codes(std::span<const double> x, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<int> codes(x.size(), 0);
  if (range == 0.0) return codes;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int b = static_cast<int>(std::floor((x[i] - lo) / range * bins));
    codes[i] = std::clamp(b, 0, bins - 1);
  }
  return codes;
}

void check_pair(std::span<const double> x, std::span<const double> y, int bins) {
  if (x.size() != y.size()) {
    fail(ErrorCode::length_mismatch,
         "variables have " + std::to_string(x.size()) + " and " + std::to_string(y.size()) + " samples");
  }
  if (x.size() < 2) fail(ErrorCode::too_short, "need at least two samples");
  if (bins < 2) fail(ErrorCode::invalid_argument, "need at least two bins");
}

double entropy_of_codes(const std::vector<int>& codes, int bins) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (int c : codes) ++counts[c];
  const double n = static_cast<double>(codes.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

double mi_of_codes(const std::vector<int>& cx, const std::vector<int>& cy, int bins) {
  const auto b = static_cast<std::size_t>(bins);
  std::vector<std::size_t> joint(b * b, 0), px(b, 0), py(b, 0);
  for (std::size_t i = 0; i < cx.size(); ++i) {
    ++joint[static_cast<std::size_t>(cx[i]) * b + static_cast<std::size_t>(cy[i])];
    ++px[cx[i]];
    ++py[cy[i]];
  }
  const double n = static_cast<double>(cx.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const auto c = joint[i * b + j];
      if (c == 0) continue;
      const double pxy = static_cast<double>(c) / n;
      mi += pxy * std::log2(static_cast<double>(c) * n / (static_cast<double>(px[i]) * static_cast<double>(py[j])));
    }
  }
  return std::max(0.0, mi);
}

double ce_of_codes(const std::vector<int>& cx, const std::vector<int>& cy, int bins) {
  return std::max(0.0, entropy_of_codes(cy, bins) - mi_of_codes(cx, cy, bins));
}

// Keys cubic convolution kernel, a = -0.5.
double cubic_weight(double t) {
  t = std::abs(t);
  constexpr double a = -0.5;
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

using Plane = std::vector<double>;

Plane idw_grid(const std::array<double, kEegChannels>& values, const ElectrodeLayout& layout, int grid,
               double power) {
  Plane out(static_cast<std::size_t>(grid) * grid, 0.0);
  for (int r = 0; r < grid; ++r) {
    const double y = 1.0 - (r + 0.5) * 2.0 / grid;
    for (int c = 0; c < grid; ++c) {
      const double x = -1.0 + (c + 0.5) * 2.0 / grid;
      double num = 0.0;
      double den = 0.0;
      bool exact = false;
      for (std::size_t e = 0; e < kEegChannels; ++e) {
        const double dx = x - layout.positions[e][0];
        const double dy = y - layout.positions[e][1];
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < 1e-12) {
          out[static_cast<std::size_t>(r) * grid + c] = values[e];
          exact = true;
          break;
        }
        const double w = 1.0 / std::pow(d, power);
        num += w * values[e];
        den += w;
      }
      if (!exact) out[static_cast<std::size_t>(r) * grid + c] = num / den;
    }
  }
  return out;
}

Plane bicubic_upsample(const Plane& src, int n, int side) {
  Plane out(static_cast<std::size_t>(side) * side, 0.0);
  const double scale = static_cast<double>(n) / side;
  auto sample = [&](int r, int c) {
    r = std::clamp(r, 0, n - 1);
    c = std::clamp(c, 0, n - 1);
    return src[static_cast<std::size_t>(r) * n + c];
  };
  for (int py = 0; py < side; ++py) {
    const double sy = (py + 0.5) * scale - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    for (int px = 0; px < side; ++px) {
      const double sx = (px + 0.5) * scale - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      double acc = 0.0;
      for (int m = -1; m <= 2; ++m) {
        const double wy = cubic_weight(sy - (y0 + m));
        double row = 0.0;
        for (int k = -1; k <= 2; ++k) row += cubic_weight(sx - (x0 + k)) * sample(y0 + m, x0 + k);
        acc += wy * row;
      }
      out[static_cast<std::size_t>(py) * side + px] = std::max(0.0, acc);
    }
  }
  return out;
}

bool inside_disc(int px, int py) {
  const double c = kImageSide / 2.0;
  const double dx = px + 0.5 - c;
  const double dy = py + 0.5 - c;
  return dx * dx + dy * dy <= c * c;
}

}  // namespace

EegTrial::EegTrial(const SampledSeries& series) : series_(canonical_order(series)) {}

EegTrial preprocess_eeg(const SampledSeries& raw) {
  return EegTrial(bandpass_filter(EegTrial(raw).series(), kEegLowCutHz, kEegHighCutHz));
}

std::size_t count_amplitude_flags(const EegTrial& trial, double threshold) {
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < trial.length(); ++i) {
    for (std::size_t c = 0; c < kEegChannels; ++c) {
      if (std::abs(trial.channel(c)[i]) > threshold) {
        ++flagged;
        break;
      }
    }
  }
  return flagged;
}

double entropy(std::span<const double> x, int bins) {
  if (x.empty()) fail(ErrorCode::empty_input, "entropy of an empty variable");
  if (bins < 2) fail(ErrorCode::invalid_argument, "need at least two bins");
  return entropy_of_codes(bin_codes(x, bins), bins);
}

double mutual_information(std::span<const double> x, std::span<const double> y, int bins) {
  check_pair(x, y, bins);
  return mi_of_codes(bin_codes(x, bins), bin_codes(y, bins), bins);
}

double conditional_entropy(std::span<const double> x, std::span<const double> y, int bins) {
  check_pair(x, y, bins);
  return ce_of_codes(bin_codes(x, bins), bin_codes(y, bins), bins);
}

std::vector<double> pairwise_entropy_features(const EegTrial& trial, int bins) {
  if (trial.length() < 2) fail(ErrorCode::too_short, "entropy features need at least two samples per channel");
  if (bins < 2) fail(ErrorCode::invalid_argument, "need at least two bins");
  std::vector<std::vector<int>> codes;
  codes.reserve(kEegChannels);
  for (std::size_t c = 0; c < kEegChannels; ++c) codes.push_back(bin_codes(trial.channel(c), bins));
  std::vector<double> out;
  out.reserve(kEntropyFeatureCount);
  for (std::size_t i = 0; i < kEegChannels; ++i) {
    for (std::size_t j = i + 1; j < kEegChannels; ++j) out.push_back(ce_of_codes(codes[i], codes[j], bins));
  }
  return out;
}

BandPowerMaps band_power_maps(const EegTrial& trial, PsdMethod method) {
  const double rate = trial.sampling_rate_hz();
  BandPowerMaps maps;
  const WelchParams welch{};
  const auto nfft = static_cast<std::size_t>(std::lround(welch.window_s * rate));
  for (std::size_t c = 0; c < kEegChannels; ++c) {
    Spectrum spec;
    if (method == PsdMethod::welch) {
      spec = welch_psd(trial.channel(c), rate, welch);
    } else {
      spec = periodogram(trial.channel(c), rate, std::max(nfft, trial.length()));
    }
    maps.theta.power[c] = band_power(spec, kTheta);
    maps.alpha.power[c] = band_power(spec, kAlpha);
    maps.beta.power[c] = band_power(spec, kBeta);
  }
  return maps;
}

ElectrodeLayout ElectrodeLayout::from_json(std::string_view json_text) {
  const auto doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.contains("electrodes")) fail(ErrorCode::parse, "malformed electrode layout");
  if (doc.value("version", 0) != 1) fail(ErrorCode::parse, "unsupported electrode layout version");
  ElectrodeLayout layout;
  std::array<bool, kEegChannels> seen{};
  for (const auto& e : doc["electrodes"]) {
    const auto label = e.at("label").get<std::string>();
    const auto it = std::find(kCanonicalChannels.begin(), kCanonicalChannels.end(), label);
    if (it == kCanonicalChannels.end()) fail(ErrorCode::parse, "layout names unknown electrode " + label);
    const auto idx = static_cast<std::size_t>(it - kCanonicalChannels.begin());
    const double x = e.at("x").get<double>();
    const double y = e.at("y").get<double>();
    if (!(x * x + y * y < 1.0)) fail(ErrorCode::parse, "electrode " + label + " lies outside the unit disc");
    layout.positions[idx] = {x, y};
    seen[idx] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    fail(ErrorCode::parse, "layout must cover all 14 electrodes");
  }
  return layout;
}

const ElectrodeLayout& ElectrodeLayout::standard() {
  static const ElectrodeLayout layout = from_json(assets::electrode_layout_json());
  return layout;
}

std::array<double, 2> electrode_pixel(const ElectrodeLayout& layout, std::size_t channel) {
  const auto& p = layout.positions.at(channel);
  return {(p[0] + 1.0) / 2.0 * kImageSide, (1.0 - p[1]) / 2.0 * kImageSide};
}

TopoImage render_topo_image(const BandPowerMap& theta, const BandPowerMap& alpha, const BandPowerMap& beta,
                            const ElectrodeLayout& layout, const RenderOptions& options) {
  const std::array<const BandPowerMap*, 3> maps = {&theta, &alpha, &beta};
  TopoImage out;
  out.image = RgbImage(kImageSide, kImageSide, 0);

  double joint_max = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    double m = 0.0;
    for (double v : maps[b]->power) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::invalid_argument, "band power must be finite and >= 0");
      m = std::max(m, v);
    }
    out.band_maxima[b] = m;
    joint_max = std::max(joint_max, m);
  }
  if (joint_max == 0.0) {
    out.degenerate = true;
    return out;
  }

  // Inputs are brought to [0, 1] first so that a common gain on all three
  // maps cancels before any interpolation arithmetic.
  std::array<Plane, 3> planes;
  for (std::size_t b = 0; b < 3; ++b) {
    const double denom = options.joint_normalization ? joint_max : out.band_maxima[b];
    std::array<double, kEegChannels> values{};
    if (denom > 0.0) {
      for (std::size_t e = 0; e < kEegChannels; ++e) values[e] = maps[b]->power[e] / denom;
    }
    planes[b] = bicubic_upsample(idw_grid(values, layout, options.grid, options.idw_power), options.grid, kImageSide);
  }

  std::array<double, 3> plane_max{};
  for (std::size_t b = 0; b < 3; ++b) {
    for (int y = 0; y < kImageSide; ++y) {
      for (int x = 0; x < kImageSide; ++x) {
        if (inside_disc(x, y)) plane_max[b] = std::max(plane_max[b], planes[b][static_cast<std::size_t>(y) * kImageSide + x]);
      }
    }
  }
  const double global_max = std::max({plane_max[0], plane_max[1], plane_max[2]});
  if (global_max <= 0.0) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t b = 0; b < 3; ++b) {
    const double denom = options.joint_normalization ? global_max : plane_max[b];
    if (denom <= 0.0) continue;
    for (int y = 0; y < kImageSide; ++y) {
      for (int x = 0; x < kImageSide; ++x) {
        if (!inside_disc(x, y)) continue;
        const double v = planes[b][static_cast<std::size_t>(y) * kImageSide + x] / denom;
        out.image.at(x, y, static_cast<int>(b)) =
            static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace neurodrive
