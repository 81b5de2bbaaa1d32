#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "neurodrive/image.hpp"

namespace neurodrive {

inline constexpr std::size_t kEmbeddingDim = 4096;

/// Maps a 224x224x3 image to a 4096-dim feature vector. Instances are
/// immutable after construction; embed() may be called concurrently.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<double> embed(const RgbImage& image) const = 0;
  virtual std::string kind() const = 0;
  /// JSON object describing the configuration (kind, seed or model path).
  virtual std::string describe() const = 0;
};

struct EmbeddingConfig {
  std::string kind = "deterministic_projection";
  std::uint64_t seed = 42;
  std::filesystem::path model_path;

  static EmbeddingConfig from_json(std::string_view json_text);
  std::string to_json() const;
};

/// Grayscale 32x32 block means -> fixed seeded 1024x4096 projection
/// (entries uniform in [-1, 1] / 32) -> tanh.
class ProjectionEmbedder final : public EmbeddingBackend {
 public:
  explicit ProjectionEmbedder(std::uint64_t seed);

  std::vector<double> embed(const RgbImage& image) const override;
  std::string kind() const override { return "deterministic_projection"; }
  std::string describe() const override;

  static std::vector<double> downsample_gray(const RgbImage& image);

 private:
  std::uint64_t seed_;
  std::vector<double> projection_;  // kEmbeddingDim rows x 1024, row-major
};

std::shared_ptr<const EmbeddingBackend> load_backend(const EmbeddingConfig& config);

/// Validates the 224x224x3 contract, then delegates to the backend.
std::vector<double> embed(const EmbeddingBackend& backend, const RgbImage& image);

}  // namespace neurodrive
