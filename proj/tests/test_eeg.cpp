#include <algorithm>
#include <chrono>
#include <cmath>

#include "doctest.h"
#include "neurodrive/assets.hpp"
#include "neurodrive/eeg.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace neurodrive;
using testing::error_of;

namespace {

std::vector<int> codes_of(const std::vector<double>& x, int bins) {
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  std::vector<int> c(x.size(), 0);
  if (hi == lo) return c;
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = std::min(bins - 1, static_cast<int>((x[i] - lo) / (hi - lo) * bins));
  return c;
}

SampledSeries eeg_series(const std::vector<std::vector<double>>& channels, double fs = 128.0) {
  std::vector<Channel> ch;
  for (std::size_t i = 0; i < kEegChannels; ++i) ch.push_back({std::string(kCanonicalChannels[i]), channels[i]});
  return SampledSeries(fs, ch);
}

EegTrial noise_trial(oracle::Gen& g, std::size_t n) {
  std::vector<std::vector<double>> ch;
  for (std::size_t i = 0; i < kEegChannels; ++i) ch.push_back(g.normals(n));
  return EegTrial(eeg_series(ch));
}

BandPowerMap map_of(EegBand b, std::array<double, kEegChannels> p) {
  BandPowerMap m{b};
  m.power = p;
  return m;
}

}  // namespace

TEST_SUITE("eeg") {

TEST_CASE("mutual information examples") {
  std::vector<double> alt(1000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 3.0 : -1.0;
  CHECK(mutual_information(alt, alt, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(conditional_entropy(alt, alt, 2) == doctest::Approx(0.0));

  // exactly uniform joint counts -> independent
  const std::vector<double> x{0, 0, 1, 1}, y{0, 1, 0, 1};
  CHECK(std::fabs(mutual_information(x, y, 2)) < 1e-15);
  CHECK(conditional_entropy(x, y, 2) == doctest::Approx(1.0).epsilon(1e-12));

  // joint counts [[2,1],[0,1]]
  const std::vector<double> a{0, 0, 0, 1}, b{0, 0, 1, 1};
  CHECK(mutual_information(a, b, 2) == doctest::Approx(0.31128).epsilon(1e-5));
  CHECK(conditional_entropy(a, b, 2) == doctest::Approx(0.68872).epsilon(1e-5));

  std::vector<double> flat(10, 2.0);
  CHECK(mutual_information(flat, std::vector<double>(alt.begin(), alt.begin() + 10), 4) == 0.0);
}

TEST_CASE("mutual information errors") {
  const std::vector<double> a{1, 2, 3}, b{1, 2};
  CHECK(error_of([&] { mutual_information(a, b, 4); }) == ErrorCode::length_mismatch);
  CHECK(error_of([&] { conditional_entropy(a, a, 1); }) == ErrorCode::invalid_argument);
  CHECK(error_of([] { mutual_information(std::vector<double>{1}, std::vector<double>{1}, 4); }) == ErrorCode::too_short);
}

TEST_CASE("entropy measures match the plug-in oracle on random discrete tables") {
  oracle::Gen g(99);
  const auto start = std::chrono::steady_clock::now();
  for (int t = 0; t < 1000; ++t) {
    const int kx = 2 + g.integer(15), ky = 2 + g.integer(15);
    const std::size_t n = 2 + static_cast<std::size_t>(g.integer(400));
    std::vector<int> cx(n), cy(n);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      cx[i] = g.integer(kx);
      cy[i] = g.integer(ky);
    }
    // pin both ends of each range so equal-width binning is a bijection on the values
    cx[0] = 0;
    cx[1] = kx - 1;
    cy[0] = ky - 1;
    cy[n - 1] = 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = cx[i];
      y[i] = cy[i];
    }
    const int bins = std::max(kx, ky);
    // re-derive codes through the test's own binning, then compare
    const auto bx = codes_of(x, bins), by = codes_of(y, bins);
    const double mi = static_cast<double>(oracle::plugin_mi(bx, by));
    const double ce = static_cast<double>(oracle::plugin_conditional_entropy(bx, by));
    CHECK(std::fabs(mutual_information(x, y, bins) - std::max(0.0, mi)) < 1e-12);
    CHECK(std::fabs(conditional_entropy(x, y, bins) - std::max(0.0, ce)) < 1e-12);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 10.0);
}

TEST_CASE("mutual information symmetry and bounds") {
  oracle::Gen g(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 5 + static_cast<std::size_t>(g.integer(300));
    auto x = g.normals(n), y = g.normals(n);
    for (std::size_t i = 0; i < n; ++i) y[i] += g.uniform(0, 2) * x[i];
    const int bins = 2 + g.integer(20);
    const double ixy = mutual_information(x, y, bins);
    CHECK(std::fabs(ixy - mutual_information(y, x, bins)) < 1e-12);
    CHECK(ixy >= 0.0);
    CHECK(ixy <= std::min(entropy(x, bins), entropy(y, bins)) + 1e-12);
  }
}

TEST_CASE("pairwise entropy features") {
  oracle::Gen g(4);
  const auto trial = noise_trial(g, 256);
  const auto f = pairwise_entropy_features(trial, 16);
  REQUIRE(f.size() == 91);
  // AF3-AF4 then AF3-F3: conditional entropy of the second given the first
  CHECK(f[0] == conditional_entropy(trial.channel(0), trial.channel(1), 16));
  CHECK(f[1] == conditional_entropy(trial.channel(0), trial.channel(2), 16));
  CHECK(f[90] == conditional_entropy(trial.channel(12), trial.channel(13), 16));

  const auto same = g.normals(256);
  const auto ident = pairwise_entropy_features(EegTrial(eeg_series(std::vector<std::vector<double>>(14, same))));
  for (double v : ident) CHECK(v == 0.0);
}

TEST_CASE("entropy features ignore the input channel order") {
  oracle::Gen g(12);
  std::vector<std::vector<double>> ch;
  for (std::size_t i = 0; i < kEegChannels; ++i) ch.push_back(g.normals(200));
  const auto ordered = pairwise_entropy_features(EegTrial(eeg_series(ch)));
  for (int t = 0; t < 5; ++t) {
    std::vector<Channel> shuffled;
    for (std::size_t i = 0; i < kEegChannels; ++i) shuffled.push_back({std::string(kCanonicalChannels[i]), ch[i]});
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(g.integer(static_cast<int>(i)))]);
    CHECK(pairwise_entropy_features(EegTrial(SampledSeries(128.0, shuffled))) == ordered);
  }
}

TEST_CASE("two-channel toy pair vs oracle") {
  oracle::Gen g(31);
  const auto x = g.normals(500);
  auto y = g.normals(500);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 * y[i] + x[i] * x[i];
  for (int bins : {2, 7, 16, 30}) {
    const auto cx = codes_of(x, bins), cy = codes_of(y, bins);
    CHECK(std::fabs(conditional_entropy(x, y, bins) - static_cast<double>(oracle::plugin_conditional_entropy(cx, cy))) <
          1e-12);
  }
}

TEST_CASE("trial requires the canonical channel set") {
  std::vector<Channel> ch;
  for (std::size_t i = 0; i < 13; ++i) ch.push_back({std::string(kCanonicalChannels[i]), std::vector<double>(10, 0.0)});
  CHECK(error_of([&] { EegTrial(SampledSeries(128.0, ch)); }) == ErrorCode::invalid_argument);
}

TEST_CASE("band power maps") {
  const double fs = 128.0;
  std::vector<std::vector<double>> zero(14, std::vector<double>(1280, 0.0));
  const auto z = band_power_maps(EegTrial(eeg_series(zero)));
  for (std::size_t c = 0; c < 14; ++c) CHECK(z.theta.power[c] + z.alpha.power[c] + z.beta.power[c] == 0.0);

  auto o1 = zero;
  o1[12] = oracle::sine(10.0, fs, 10.0);
  const auto m = band_power_maps(EegTrial(eeg_series(o1)));
  CHECK(std::max_element(m.alpha.power.begin(), m.alpha.power.end()) - m.alpha.power.begin() == 12);

  const std::vector<std::vector<double>> five(14, oracle::sine(5.0, fs, 10.0));
  const auto t = band_power_maps(EegTrial(eeg_series(five)));
  for (std::size_t c = 0; c < 14; ++c) {
    CHECK(t.theta.power[c] == doctest::Approx(t.theta.power[0]).epsilon(1e-9));
    CHECK(t.theta.power[c] > 20.0 * t.alpha.power[c]);
    CHECK(t.theta.power[c] > 20.0 * t.beta.power[c]);
  }
  CHECK(error_of([&] { band_power_maps(EegTrial(eeg_series(std::vector<std::vector<double>>(14, std::vector<double>(100, 1.0))))); }) ==
        ErrorCode::too_short);
  // the periodogram route accepts a short slice
  const EegTrial short_slice(eeg_series(std::vector<std::vector<double>>(14, oracle::sine(6.0, fs, 0.25))));
  CHECK_NOTHROW(band_power_maps(short_slice, PsdMethod::periodogram));
}

TEST_CASE("electrode layout asset") {
  const auto& layout = ElectrodeLayout::standard();
  for (const auto& p : layout.positions) CHECK(p[0] * p[0] + p[1] * p[1] < 1.0);
  CHECK(error_of([] { ElectrodeLayout::from_json(R"({"version":1,"electrodes":[]})"); }) == ErrorCode::parse);
  CHECK(error_of([] { ElectrodeLayout::from_json("not json"); }) == ErrorCode::parse);
  const auto again = ElectrodeLayout::from_json(assets::electrode_layout_json());
  CHECK(again.positions == layout.positions);
}

TEST_CASE("topographic image") {
  const auto& layout = ElectrodeLayout::standard();
  const std::array<double, 14> zero{};
  const auto black = render_topo_image(map_of(EegBand::theta, zero), map_of(EegBand::alpha, zero),
                                       map_of(EegBand::beta, zero), layout);
  CHECK(black.degenerate);
  CHECK(black.image.width == 224);
  CHECK(black.image.height == 224);
  CHECK(std::all_of(black.image.pixels.begin(), black.image.pixels.end(), [](auto v) { return v == 0; }));

  oracle::Gen g(6);
  std::array<double, 14> th{};
  for (auto& v : th) v = g.uniform(0.1, 5.0);
  const auto red = render_topo_image(map_of(EegBand::theta, th), map_of(EegBand::alpha, zero),
                                     map_of(EegBand::beta, zero), layout);
  bool any_red = false;
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      any_red = any_red || red.image.at(x, y, 0) > 0;
      CHECK(red.image.at(x, y, 1) == 0);
      CHECK(red.image.at(x, y, 2) == 0);
    }
  }
  CHECK(any_red);
}

TEST_CASE("topographic image is black outside the scalp disc") {
  oracle::Gen g(7);
  std::array<double, 14> a{}, b{}, c{};
  for (std::size_t i = 0; i < 14; ++i) {
    a[i] = g.uniform(0, 1);
    b[i] = g.uniform(0, 1);
    c[i] = g.uniform(0, 1);
  }
  const auto img = render_topo_image(map_of(EegBand::theta, a), map_of(EegBand::alpha, b), map_of(EegBand::beta, c),
                                     ElectrodeLayout::standard())
                       .image;
  const double r = 112.0;
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      const double dx = x + 0.5 - r, dy = y + 0.5 - r;
      if (dx * dx + dy * dy > r * r) {
        for (int k = 0; k < 3; ++k) CHECK(img.at(x, y, k) == 0);
      }
    }
  }
}

TEST_CASE("single hot electrode peaks near its projected pixel") {
  const auto& layout = ElectrodeLayout::standard();
  const std::array<double, 14> zero{};
  for (std::size_t e = 0; e < kEegChannels; ++e) {
    std::array<double, 14> hot{};
    hot[e] = 1.0;
    const auto img = render_topo_image(map_of(EegBand::theta, hot), map_of(EegBand::alpha, zero),
                                       map_of(EegBand::beta, zero), layout)
                         .image;
    int best = -1, bx = 0, by = 0;
    for (int y = 0; y < 224; ++y) {
      for (int x = 0; x < 224; ++x) {
        if (img.at(x, y, 0) > best) {
          best = img.at(x, y, 0);
          bx = x;
          by = y;
        }
      }
    }
    const auto p = electrode_pixel(layout, e);
    CHECK(std::hypot(bx + 0.5 - p[0], by + 0.5 - p[1]) <= 8.0);
  }
}

TEST_CASE("joint normalization: scaling all maps together changes nothing") {
  oracle::Gen g(21);
  for (int t = 0; t < 10; ++t) {
    std::array<double, 14> a{}, b{}, c{};
    for (std::size_t i = 0; i < 14; ++i) {
      a[i] = g.uniform(0, 3);
      b[i] = g.uniform(0, 3);
      c[i] = g.uniform(0, 3);
    }
    const auto base = render_topo_image(map_of(EegBand::theta, a), map_of(EegBand::alpha, b),
                                        map_of(EegBand::beta, c), ElectrodeLayout::standard());
    const double k = std::exp(g.uniform(-7.0, 7.0));
    auto sa = a, sb = b, sc = c;
    for (std::size_t i = 0; i < 14; ++i) {
      sa[i] *= k;
      sb[i] *= k;
      sc[i] *= k;
    }
    const auto scaled = render_topo_image(map_of(EegBand::theta, sa), map_of(EegBand::alpha, sb),
                                          map_of(EegBand::beta, sc), ElectrodeLayout::standard());
    CHECK(scaled.image == base.image);
  }
}

TEST_CASE("amplitude flags") {
  std::vector<std::vector<double>> ch(14, std::vector<double>(100, 0.0));
  ch[3][10] = 200.0;
  ch[5][10] = -300.0;
  ch[7][50] = 150.0;
  CHECK(count_amplitude_flags(EegTrial(eeg_series(ch)), 100.0) == 2);
}

}  // TEST_SUITE
