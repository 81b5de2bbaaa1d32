#include "neurodrive/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "json.hpp"

#include "neurodrive/error.hpp"
#include "neurodrive/rng.hpp"

namespace neurodrive {
namespace {

constexpr int kGraySide = 32;
constexpr int kBlock = kImageSide / kGraySide;  // 7
constexpr std::size_t kGrayDim = kGraySide * kGraySide;

// External model: a JSON layer graph over a 3x224x224 tensor scaled to [0, 1].
class LayerGraphEmbedder final : public EmbeddingBackend {
 public:
  explicit LayerGraphEmbedder(std::filesystem::path path) : path_(std::move(path)) { load(); }

  std::vector<double> embed(const RgbImage& image) const override;
  std::string kind() const override { return "external_model"; }
  std::string describe() const override {
    return nlohmann::json{{"kind", kind()}, {"model_path", path_.string()}}.dump();
  }

 private:
  struct Layer {
    std::string type;
    int pool = 1;
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
  };

  void load();

  std::filesystem::path path_;
  std::vector<Layer> layers_;
};

void LayerGraphEmbedder::load() {
  std::ifstream in(path_);
  if (!in) fail(ErrorCode::io, "cannot read embedding model " + path_.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::parse, path_.string() + ": not a layer graph");
  if (doc.value("format", "") != "neurodrive.layer_graph" || doc.value("version", 0) != 1) {
    fail(ErrorCode::parse, path_.string() + ": unsupported model format");
  }
  const auto declared = doc.value("output_dim", 0);
  if (declared != static_cast<int>(kEmbeddingDim)) {
    fail(ErrorCode::dimension_mismatch, path_.string() + ": model output dimension " + std::to_string(declared) +
                                            ", expected " + std::to_string(kEmbeddingDim));
  }

  // Track the tensor shape to validate every layer before any image is seen.
  int channels = 3, side = kImageSide;
  long flat = -1;
  for (const auto& j : doc.at("layers")) {
    Layer layer;
    layer.type = j.at("type").get<std::string>();
    if (layer.type == "avg_pool") {
      layer.pool = j.at("size").get<int>();
      if (flat >= 0 || layer.pool <= 0 || side % layer.pool != 0) {
        fail(ErrorCode::parse, path_.string() + ": invalid avg_pool");
      }
      side /= layer.pool;
    } else if (layer.type == "flatten") {
      flat = static_cast<long>(channels) * side * side;
    } else if (layer.type == "dense") {
      if (flat < 0) flat = static_cast<long>(channels) * side * side;
      const auto in_dim = j.at("in").get<long>();
      const auto out_dim = j.at("out").get<long>();
      if (in_dim != flat) {
        fail(ErrorCode::dimension_mismatch, path_.string() + ": dense input " + std::to_string(in_dim) +
                                                " does not match " + std::to_string(flat));
      }
      const auto& w = j.at("weights");
      const auto& b = j.at("bias");
      if (static_cast<long>(w.size()) != in_dim * out_dim || static_cast<long>(b.size()) != out_dim) {
        fail(ErrorCode::parse, path_.string() + ": dense weight count mismatch");
      }
      layer.weights.resize(out_dim, in_dim);
      for (long r = 0; r < out_dim; ++r) {
        for (long c = 0; c < in_dim; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * in_dim + c)].get<double>();
      }
      layer.bias.resize(out_dim);
      for (long r = 0; r < out_dim; ++r) layer.bias(r) = b[static_cast<std::size_t>(r)].get<double>();
      flat = out_dim;
    } else if (layer.type != "relu" && layer.type != "tanh") {
      fail(ErrorCode::parse, path_.string() + ": unknown layer type " + layer.type);
    }
    layers_.push_back(std::move(layer));
  }
  if (flat < 0) flat = static_cast<long>(channels) * side * side;
  if (flat != static_cast<long>(kEmbeddingDim)) {
    fail(ErrorCode::dimension_mismatch,
         path_.string() + ": model produces " + std::to_string(flat) + " features, expected 4096");
  }
}

std::vector<double> LayerGraphEmbedder::embed(const RgbImage& image) const {
  int side = kImageSide;
  // CHW tensor
  Eigen::VectorXd x(3 * side * side);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < side; ++y) {
      for (int px = 0; px < side; ++px) x(((c * side) + y) * side + px) = image.at(px, y, c) / 255.0;
    }
  }
  for (const auto& layer : layers_) {
    if (layer.type == "avg_pool") {
      const int k = layer.pool, out_side = side / k;
      Eigen::VectorXd y = Eigen::VectorXd::Zero(3 * out_side * out_side);
      for (int c = 0; c < 3; ++c) {
        for (int r = 0; r < side; ++r) {
          for (int q = 0; q < side; ++q) y((c * out_side + r / k) * out_side + q / k) += x((c * side + r) * side + q);
        }
      }
      x = y / static_cast<double>(k * k);
      side = out_side;
    } else if (layer.type == "dense") {
      x = layer.weights * x + layer.bias;
    } else if (layer.type == "relu") {
      x = x.cwiseMax(0.0);
    } else if (layer.type == "tanh") {
      x = x.array().tanh().matrix();
    }
  }
  return {x.data(), x.data() + x.size()};
}

}  // namespace

EmbeddingConfig EmbeddingConfig::from_json(std::string_view json_text) {
  const auto doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::config, "embedding config must be a JSON object");
  EmbeddingConfig cfg;
  try {
    cfg.kind = doc.value("kind", cfg.kind);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("model_path")) cfg.model_path = doc.at("model_path").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("embedding config: ") + e.what());
  }
  return cfg;
}

std::string EmbeddingConfig::to_json() const {
  nlohmann::json j{{"kind", kind}, {"seed", seed}};
  if (!model_path.empty()) j["model_path"] = model_path.string();
  return j.dump();
}

ProjectionEmbedder::ProjectionEmbedder(std::uint64_t seed) : seed_(seed), projection_(kEmbeddingDim * kGrayDim) {
  Rng rng(seed);
  for (auto& w : projection_) w = rng.uniform(-1.0, 1.0) / 32.0;
}

std::vector<double> ProjectionEmbedder::downsample_gray(const RgbImage& image) {
  require_network_size(image);
  std::vector<double> out(kGrayDim, 0.0);
  for (int y = 0; y < kImageSide; ++y) {
    for (int x = 0; x < kImageSide; ++x) {
      const double g = (0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2)) / 255.0;
      out[static_cast<std::size_t>((y / kBlock) * kGraySide + x / kBlock)] += g;
    }
  }
  for (auto& v : out) v /= static_cast<double>(kBlock * kBlock);
  return out;
}

std::vector<double> ProjectionEmbedder::embed(const RgbImage& image) const {
  const auto gray = downsample_gray(image);
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> p(projection_.data(), kEmbeddingDim, kGrayDim);
  const Eigen::Map<const Eigen::VectorXd> g(gray.data(), kGrayDim);
  const Eigen::VectorXd z = p * g;
  std::vector<double> out(kEmbeddingDim);
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) out[i] = std::tanh(z(static_cast<Eigen::Index>(i)));
  return out;
}

std::string ProjectionEmbedder::describe() const {
  return nlohmann::json{{"kind", kind()}, {"seed", seed_}}.dump();
}

std::shared_ptr<const EmbeddingBackend> load_backend(const EmbeddingConfig& config) {
  if (config.kind == "deterministic_projection") return std::make_shared<ProjectionEmbedder>(config.seed);
  if (config.kind == "external_model") {
    if (config.model_path.empty()) fail(ErrorCode::config, "external_model needs model_path");
    if (!std::filesystem::exists(config.model_path)) {
      fail(ErrorCode::not_found, "embedding model " + config.model_path.string() + " not found");
    }
    return std::make_shared<LayerGraphEmbedder>(config.model_path);
  }
  fail(ErrorCode::config, "unknown embedding backend kind '" + config.kind + "'");
}

std::vector<double> embed(const EmbeddingBackend& backend, const RgbImage& image) {
  require_network_size(image);
  auto out = backend.embed(image);
  if (out.size() != kEmbeddingDim) {
    fail(ErrorCode::dimension_mismatch, "backend returned " + std::to_string(out.size()) + " features");
  }
  return out;
}

}  // namespace neurodrive
