#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "neurodrive/trend.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace neurodrive;
using testing::error_of;

namespace {

constexpr double kRate = 128.0;

EegTrial fixture_trial(double seconds, std::uint64_t seed) {
  oracle::Gen g(seed);
  std::vector<Channel> channels;
  for (auto name : kCanonicalChannels) {
    auto x = oracle::sine(g.uniform(5, 25), kRate, seconds, g.uniform(0.5, 2), g.uniform(0, 6));
    for (auto& v : x) v += 0.3 * g.normal();
    channels.push_back({std::string(name), x});
  }
  return EegTrial(SampledSeries(kRate, channels));
}

// One 32-sample period (4 Hz + 12 Hz) tiled, so 0.25 s slices are bit-identical.
// Recomputing sin() per sample would flip histogram bins on rounding noise.
EegTrial periodic_trial(double seconds) {
  std::vector<Channel> channels;
  double phase = 0;
  const auto n = static_cast<std::size_t>(kRate * seconds);
  for (auto name : kCanonicalChannels) {
    auto a = oracle::sine(4.0, kRate, 0.25, 1.0, phase);
    const auto b = oracle::sine(12.0, kRate, 0.25, 0.5, 2 * phase);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i % a.size()];
    channels.push_back({std::string(name), x});
    phase += 0.4;
  }
  return EegTrial(SampledSeries(kRate, channels));
}

// FNV-1a over values rounded to 1e-6, so the digest tolerates last-bit noise
// from different floating point contraction.
std::uint64_t quantized_digest(const std::vector<double>& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : v) {
    const auto q = static_cast<std::int64_t>(std::llround(x * 1e6));
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>(q >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace

TEST_SUITE("trend") {

TEST_CASE("interval counting") {
  CHECK(interval_count(10.0, 1.0) == 10);
  CHECK(interval_count(10.7, 1.0) == 10);
  CHECK(interval_count(2.0, 1.0 / 30.0) == 60);
  CHECK(interval_count(35.0, 1.0) == 35);
  CHECK(error_of([] { interval_count(0.5, 1.0); }) == ErrorCode::too_short);
  CHECK(error_of([] { interval_count(5.0, 0.0); }) == ErrorCode::invalid_argument);

  const auto slices = interval_slices(fixture_trial(2.0, 1), 1.0 / 30.0);
  REQUIRE(slices.size() == 60);
  std::size_t total = 0;
  for (const auto& s : slices) {
    CHECK(s.length() >= 4);
    CHECK(s.length() <= 5);
    total += s.length();
  }
  CHECK(total == 256);
}

TEST_CASE("slices are contiguous and non-overlapping") {
  const auto trial = fixture_trial(3.3, 2);
  const auto slices = interval_slices(trial, 1.0);
  REQUIRE(slices.size() == 3);
  std::size_t offset = 0;
  for (const auto& s : slices) {
    CHECK(s.length() == 128);
    for (std::size_t i = 0; i < s.length(); ++i) REQUIRE(s.channel(5)[i] == trial.channel(5)[offset + i]);
    offset += s.length();
  }
}

TEST_CASE("slice features are the embedding followed by the entropy block") {
  const ProjectionEmbedder emb(42);
  const auto trial = fixture_trial(1.0, 3);
  const auto f = eeg_slice_features(trial.slice(0, 32), emb);
  REQUIRE(f.size() == 4096 + 91);
  const auto slice = trial.slice(0, 32);
  const auto maps = band_power_maps(slice, PsdMethod::periodogram);
  const auto topo = render_topo_image(maps.theta, maps.alpha, maps.beta, ElectrodeLayout::standard());
  const auto e = embed(emb, topo.image);
  const auto h = pairwise_entropy_features(slice);
  CHECK(std::vector<double>(f.begin(), f.begin() + 4096) == e);
  CHECK(std::vector<double>(f.begin() + 4096, f.end()) == h);
}

TEST_CASE("golden digest of the concatenated slice features") {
  const ProjectionEmbedder emb(42);
  const auto m = eeg_trend_features(fixture_trial(2.0, 7), emb, 0.5);
  REQUIRE(m.rows() == 4);
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  CHECK(quantized_digest(flat) == 1754969583970809186ULL);
}

TEST_CASE("stationary signal gives equal rows") {
  const ProjectionEmbedder emb(42);
  const auto m = eeg_trend_features(periodic_trial(2.0), emb, 0.25);
  REQUIRE(m.rows() == 8);
  for (Eigen::Index r = 1; r < m.rows(); ++r) CHECK((m.row(r) - m.row(0)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("trend sequences are 60 wide") {
  const ProjectionEmbedder emb(42);
  const auto trial = fixture_trial(8.0, 4);
  const auto rows = eeg_trend_features(trial, emb, 0.125);
  REQUIRE(rows.rows() == 64);
  const auto chain = ReductionChain::fit(rows, kTrendWidth);
  const auto seq = trend_sequence("t1", rows, chain, 0.125);
  CHECK(seq.values.rows() == 64);
  CHECK(seq.values.cols() == 60);
  CHECK(trend_sequence("t1", trial, emb, chain, 0.125).values == seq.values);

  const auto back = TrendSequence::from_json(seq.to_json());
  CHECK(back.trial_id == "t1");
  CHECK(back.interval_s == 0.125);
  CHECK(back.values == seq.values);

  const auto narrow = ReductionChain::fit(rows, 10);
  CHECK(error_of([&] { trend_sequence("t1", rows, narrow, 0.125); }) == ErrorCode::dimension_mismatch);
  CHECK(error_of([] { TrendSequence::from_json(R"({"format":"neurodrive.trend_sequence","version":2})"); }) ==
        ErrorCode::parse);
}

TEST_CASE("face trend rows") {
  FaceTrial trial;
  trial.fps = 8.0;
  for (int i = 0; i < 16; ++i) {
    LandmarkFrame f;
    f.frame_index = i;
    f.box = {0, 0, 100, 100};
    for (std::size_t k = 0; k < kLandmarkCount; ++k) f.points[k] = {static_cast<double>(k) + 0.1 * i, 50.0 + static_cast<double>(k % 5)};
    trial.frames.push_back(f);
    trial.face_images.emplace_back(64, 64, static_cast<std::uint8_t>(10 * i));
  }
  const ProjectionEmbedder emb(42);
  const auto m = face_trend_features(trial, emb, 2.0, 0.5);
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 90 + 4096);
  trial.fps = 0;
  CHECK(error_of([&] { face_trend_features(trial, emb, 2.0, 0.5); }) == ErrorCode::invalid_argument);
}

}  // TEST_SUITE
