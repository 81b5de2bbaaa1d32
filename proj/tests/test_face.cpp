#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "neurodrive/assets.hpp"
#include "neurodrive/face.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace neurodrive;
using testing::error_of;

namespace {

// Landmark k on a 7-wide grid with 10 px spacing; box covers 70 x 70.
LandmarkFrame grid_frame(int index = 0) {
  LandmarkFrame f;
  f.frame_index = index;
  for (std::size_t k = 0; k < kLandmarkCount; ++k) f.points[k] = {10.0 * static_cast<double>(k % 7), 10.0 * static_cast<double>(k / 7)};
  f.box = {0, 0, 70, 70};
  return f;
}

// Coordinates on a 1/64 px grid, as a landmark CSV at that precision would
// hold; shifts and doublings of such values are exact.
LandmarkFrame random_frame(oracle::Gen& g, int index) {
  LandmarkFrame f;
  f.frame_index = index;
  f.box = {std::floor(g.uniform(0, 100)), std::floor(g.uniform(0, 100)), 64.0 + g.integer(64), 64.0 + g.integer(64)};
  for (auto& p : f.points) {
    p = {f.box.x + g.integer(static_cast<int>(f.box.w) * 64) / 64.0, f.box.y + g.integer(static_cast<int>(f.box.h) * 64) / 64.0};
  }
  return f;
}

std::size_t distance_index(const std::string& name) {
  const auto& names = FaceFeatureTable::standard().distance_names;
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

TEST_SUITE("face") {

TEST_CASE("feature table asset") {
  const auto& t = FaceFeatureTable::standard();
  CHECK(t.distances.size() == 20);
  CHECK(t.angles.size() == 10);
  CHECK(error_of([] { FaceFeatureTable::from_json(R"({"version":2})"); }) == ErrorCode::parse);
  CHECK(error_of([] { FaceFeatureTable::from_json("nope"); }) == ErrorCode::parse);
}

TEST_CASE("grid layout distances match closed-form ratios") {
  const auto f = geometric_features(grid_frame());
  REQUIRE(f.size() == 30);
  const double diag = std::sqrt(70.0 * 70.0 * 2);
  // mouth_r = point 31 at (30, 40), mouth_l = point 37 at (20, 50)
  CHECK(std::fabs(f[distance_index("mouth_width")] - std::sqrt(200.0) / diag) < 1e-12);
  CHECK(std::fabs(f[distance_index("mouth_width")] - 1.0 / 7.0) < 1e-12);
  // upper lid mean of 20 (60, 20) and 21 (0, 30); lower of 23 (20, 30) and 24 (30, 30)
  CHECK(std::fabs(f[distance_index("r_eye_openness")] - 1.0 / 14.0) < 1e-12);
  // inner brows: 4 at (40, 0), 5 at (50, 0)
  CHECK(std::fabs(f[distance_index("inter_brow_inner")] - 10.0 / diag) < 1e-12);
  for (std::size_t k = 20; k < 30; ++k) {
    CHECK(f[k] >= 0.0);
    CHECK(f[k] <= M_PI);
  }
}

TEST_CASE("geometric features are similarity invariant") {
  oracle::Gen g(44);
  for (int t = 0; t < 50; ++t) {
    const auto f = random_frame(g, 0);
    const auto base = geometric_features(f);
    auto moved = f;
    for (auto& p : moved.points) {
      p[0] += 100;
      p[1] += 50;
    }
    moved.box.x += 100;
    moved.box.y += 50;
    CHECK(geometric_features(moved) == base);
    auto doubled = f;
    for (auto& p : doubled.points) {
      p[0] *= 2;
      p[1] *= 2;
    }
    doubled.box = {f.box.x * 2, f.box.y * 2, f.box.w * 2, f.box.h * 2};
    CHECK(geometric_features(doubled) == base);
  }
}

TEST_CASE("zero-area face box") {
  auto f = grid_frame();
  f.box.w = 0;
  CHECK(error_of([&] { geometric_features(f); }) == ErrorCode::degenerate);
}

TEST_CASE("percentile and aggregation") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(percentile_linear(v, 0.95) == doctest::Approx(95.05).epsilon(1e-14));
  CHECK(error_of([] { percentile_linear({}, 0.5); }) == ErrorCode::empty_input);

  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(5, 3, 0.1);
  const auto a = aggregate_trial(c);
  for (int k = 0; k < 3; ++k) {
    CHECK(a[k] == 0.1);
    CHECK(a[3 + k] == 0.1);
    CHECK(a[6 + k] == 0.0);
  }
  Eigen::MatrixXd one(1, 2);
  one << 3.0, -2.0;
  CHECK(aggregate_trial(one) == std::vector<double>{3.0, -2.0, 3.0, -2.0, 0.0, 0.0});
  CHECK(error_of([] { aggregate_trial(Eigen::MatrixXd(0, 3)); }) == ErrorCode::empty_input);

  oracle::Gen g(10);
  for (int t = 0; t < 30; ++t) {
    Eigen::MatrixXd m(1 + g.integer(40), 1 + g.integer(8));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g.normal();
    const auto agg = aggregate_trial(m);
    for (Eigen::Index col = 0; col < m.cols(); ++col) {
      long double s = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) s += m(r, col);
      CHECK(std::fabs(agg[static_cast<std::size_t>(col)] - static_cast<double>(s / m.rows())) < 1e-12);
    }
  }
}

TEST_CASE("trial geometric features") {
  oracle::Gen g(3);
  FaceTrial same;
  for (int i = 0; i < 6; ++i) same.frames.push_back(grid_frame(i));
  const auto f = face_geometric_trial_features(same);
  REQUIRE(f.size() == 90);
  for (std::size_t k = 60; k < 90; ++k) CHECK(f[k] == 0.0);

  FaceTrial two;
  two.frames = {random_frame(g, 0), random_frame(g, 1)};
  const auto a = geometric_features(two.frames[0]), b = geometric_features(two.frames[1]);
  const auto t = face_geometric_trial_features(two);
  for (std::size_t k = 0; k < 30; ++k) {
    const double lo = std::min(a[k], b[k]), hi = std::max(a[k], b[k]);
    CHECK(std::fabs(t[k] - (a[k] + b[k]) / 2) < 1e-12);
    CHECK(std::fabs(t[30 + k] - (lo + 0.95 * (hi - lo))) < 1e-12);
    CHECK(std::fabs(t[60 + k] - (hi - lo) / 2) < 1e-12);
  }
}

TEST_CASE("trial validation") {
  FaceTrial empty;
  CHECK(error_of([&] { empty.validate(); }) == ErrorCode::empty_input);
  FaceTrial back;
  back.frames = {grid_frame(2), grid_frame(1)};
  CHECK(error_of([&] { back.validate(); }) == ErrorCode::invalid_argument);
  FaceTrial bad = back;
  bad.frames = {grid_frame(0)};
  bad.frames[0].points[7][1] = NAN;
  CHECK(error_of([&] { bad.validate(); }) == ErrorCode::invalid_argument);
  FaceTrial crops;
  crops.frames = {grid_frame(0), grid_frame(1)};
  crops.face_images = {RgbImage(8, 8)};
  CHECK(error_of([&] { crops.validate(); }) == ErrorCode::length_mismatch);
}

TEST_CASE("deep trial features") {
  const ProjectionEmbedder emb(42);
  FaceTrial trial;
  RgbImage crop(64, 64);
  for (std::size_t i = 0; i < crop.pixels.size(); ++i) crop.pixels[i] = static_cast<std::uint8_t>(i * 7 % 251);
  for (int i = 0; i < 3; ++i) {
    trial.frames.push_back(grid_frame(i));
    trial.face_images.push_back(crop);
  }
  const auto f = face_deep_trial_features(trial, emb);
  REQUIRE(f.size() == 12288);
  for (std::size_t k = 8192; k < 12288; ++k) CHECK(f[k] == 0.0);
  CHECK(face_deep_trial_features(trial, emb) == f);

  trial.face_images.clear();
  CHECK(error_of([&] { face_deep_trial_features(trial, emb); }) == ErrorCode::not_found);
}

TEST_CASE("landmark csv and crop directory round trip") {
  const auto dir = testing::scratch("face_io");
  oracle::Gen g(9);
  std::vector<LandmarkFrame> frames;
  for (int i = 0; i < 4; ++i) frames.push_back(random_frame(g, i * 3));
  write_landmarks_csv(dir / "lm.csv", frames);
  const auto back = read_landmarks_csv(dir / "lm.csv");
  REQUIRE(back.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back[i].frame_index == frames[i].frame_index);
    CHECK(back[i].points == frames[i].points);
    CHECK(back[i].box.w == frames[i].box.w);
  }
  {
    std::ofstream out(dir / "short.csv");
    out << "frame,box_x,box_y,box_w,box_h,x1,y1\n0,0,0,1,1,2,3\n";
  }
  CHECK(error_of([&] { read_landmarks_csv(dir / "short.csv"); }) == ErrorCode::parse);

  std::filesystem::create_directories(dir / "crops");
  for (int n : {10, 1, 2}) write_png(dir / "crops" / (std::string(n < 10 ? "000" : "00") + std::to_string(n) + ".png"), RgbImage(4, 4, static_cast<std::uint8_t>(n)));
  const auto crops = read_face_images(dir / "crops");
  REQUIRE(crops.size() == 3);
  CHECK(crops[0].pixels[0] == 1);
  CHECK(crops[1].pixels[0] == 2);
  CHECK(crops[2].pixels[0] == 10);
  CHECK(error_of([&] { read_face_images(dir / "nowhere"); }) == ErrorCode::not_found);
}

}  // TEST_SUITE
