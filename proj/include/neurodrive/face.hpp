#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "neurodrive/embedding.hpp"
#include "neurodrive/image.hpp"

namespace neurodrive {

inline constexpr std::size_t kLandmarkCount = 49;
inline constexpr std::size_t kGeometricFeatureCount = 30;
inline constexpr std::size_t kFaceGeometricTrialCount = 3 * kGeometricFeatureCount;
inline constexpr std::size_t kFaceDeepTrialCount = 3 * kEmbeddingDim;

using Point2 = std::array<double, 2>;

struct FaceBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct LandmarkFrame {
  int frame_index = 0;
  std::array<Point2, kLandmarkCount> points{};
  FaceBox box;
};

struct FaceTrial {
  std::vector<LandmarkFrame> frames;
  std::vector<RgbImage> face_images;  // optional, one crop per frame
  double fps = 0.0;                   // 0 when unknown

  /// >= 1 frame, strictly increasing indices, positive boxes, finite points.
  void validate() const;
};

/// The distance/angle table: anchors are landmark sets averaged to a point,
/// distances join two anchors, angles sit between two anchor segments.
struct FaceFeatureTable {
  std::vector<std::string> anchor_names;
  std::vector<std::vector<std::size_t>> anchors;
  std::vector<std::string> distance_names;
  std::vector<std::array<std::size_t, 2>> distances;
  std::vector<std::string> angle_names;
  std::vector<std::array<std::size_t, 4>> angles;

  static FaceFeatureTable from_json(std::string_view json_text);
  static const FaceFeatureTable& standard();
};

/// 20 distances over the face-box diagonal, then 10 angles in radians.
std::vector<double> geometric_features(const LandmarkFrame& frame,
                                       const FaceFeatureTable& table = FaceFeatureTable::standard());

/// Linear interpolation between order statistics (q in [0, 1]).
double percentile_linear(std::vector<double> values, double q);

/// [column means, column 95th percentiles, column population stds].
std::vector<double> aggregate_trial(const Eigen::MatrixXd& per_frame);

std::vector<double> face_geometric_trial_features(const FaceTrial& trial);
std::vector<double> face_deep_trial_features(const FaceTrial& trial, const EmbeddingBackend& embedder);

/// Crops of any size are resized to the network input before embedding.
std::vector<double> embed_face(const EmbeddingBackend& embedder, const RgbImage& crop);

/// `frame,box_x,box_y,box_w,box_h,x1,y1,...,x49,y49`
std::vector<LandmarkFrame> read_landmarks_csv(const std::filesystem::path& path);
void write_landmarks_csv(const std::filesystem::path& path, const std::vector<LandmarkFrame>& frames);

/// Numbered PNGs (0000.png, 0001.png, ...) in ascending numeric order.
std::vector<RgbImage> read_face_images(const std::filesystem::path& dir);

}  // namespace neurodrive
