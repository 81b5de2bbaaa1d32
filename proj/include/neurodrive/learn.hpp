#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace neurodrive {

/// Column-wise affine map of the training range onto [-1, 1]. Constant
/// columns map to 0; values outside the training range are not clipped.
struct Scaler {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  static Scaler fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

  std::string to_json() const;
  static Scaler from_json(std::string_view text);
};

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;           // d x k, orthonormal columns
  Eigen::VectorXd explained_variance;   // k, descending
  Eigen::VectorXd explained_share;      // fraction of total variance

  /// Largest-magnitude coordinate of every component is made positive.
  static PcaModel fit(const Eigen::MatrixXd& x, int k);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& z) const;
  int dim() const { return static_cast<int>(components.cols()); }

  std::string to_json() const;
  static PcaModel from_json(std::string_view text);
};

inline constexpr int kElmHidden = 170;
inline constexpr double kElmRidge = 1e-6;

inline double tribas(double z) { return z > -1.0 && z < 1.0 ? 1.0 - (z < 0 ? -z : z) : 0.0; }

/// Single hidden layer, triangular basis activation, ridge least-squares
/// output weights against +-1 targets.
struct ElmModel {
  Eigen::MatrixXd input_weights;  // hidden x d
  Eigen::VectorXd biases;         // hidden
  Eigen::VectorXd beta;           // hidden
  std::uint64_t seed = 0;
  double ridge = kElmRidge;

  static ElmModel train(const Eigen::MatrixXd& x, const std::vector<int>& labels, int hidden = kElmHidden,
                        std::uint64_t seed = 0, double ridge = kElmRidge);

  Eigen::MatrixXd hidden_activations(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd scores(const Eigen::MatrixXd& x) const;
  /// 1 where score > 0, else 0.
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  std::string to_json() const;
  static ElmModel from_json(std::string_view text);
};

/// scaler -> PCA(k) -> scaler, every stage fit on the same rows. The first
/// scaler puts blocks with different units on one footing before PCA.
struct ReductionChain {
  Scaler pre;
  PcaModel pca;
  Scaler post;

  static ReductionChain fit(const Eigen::MatrixXd& x, int k);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

  std::string to_json() const;
  static ReductionChain from_json(std::string_view text);
};

/// Throws single_class unless both 0 and 1 occur (and nothing else).
void require_two_classes(const std::vector<int>& labels);

}  // namespace neurodrive
