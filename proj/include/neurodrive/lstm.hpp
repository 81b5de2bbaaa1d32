#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace neurodrive {

struct LstmConfig {
  std::vector<int> widths{200, 100};
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 100;
  std::uint64_t seed = 0;
};

/// One sequence is a T x p matrix (row = timestep).
using Sequence = Eigen::MatrixXd;

/// Stacked LSTM (gate order i, f, g, o) whose last top-layer state feeds a
/// two-class softmax head. Trained full-batch with SGD + momentum on the
/// mean cross-entropy.
class LstmModel {
 public:
  struct Layer {
    Eigen::MatrixXd w;  // 4h x in
    Eigen::MatrixXd u;  // 4h x h
    Eigen::VectorXd b;  // 4h
  };

  LstmModel() = default;
  /// Uniform(+-1/sqrt(h)) weights, forget-gate bias 1, zero head bias.
  LstmModel(int input_dim, const LstmConfig& config);

  static LstmModel train(const std::vector<Sequence>& sequences, const std::vector<int>& labels,
                         const LstmConfig& config);

  /// (p0, p1) per sequence.
  Eigen::Vector2d probabilities(const Sequence& sequence) const;
  /// argmax, ties to class 0.
  int predict(const Sequence& sequence) const;

  double loss(const std::vector<Sequence>& sequences, const std::vector<int>& labels) const;
  /// Mean cross-entropy and its gradient with respect to flat_parameters().
  double loss_and_gradient(const std::vector<Sequence>& sequences, const std::vector<int>& labels,
                           Eigen::VectorXd& gradient) const;

  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& theta);
  std::size_t parameter_count() const;

  int input_dim() const { return input_dim_; }
  const LstmConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<double>& loss_history() const { return loss_history_; }

  std::string to_json() const;
  static LstmModel from_json(std::string_view text);

 private:
  int input_dim_ = 0;
  LstmConfig config_;
  std::vector<Layer> layers_;
  Eigen::MatrixXd head_w_;  // 2 x h_last
  Eigen::Vector2d head_b_ = Eigen::Vector2d::Zero();
  std::vector<double> loss_history_;
};

/// Throws unless every sequence is T x p with the same T and p (T, p >= 1).
void require_uniform_sequences(const std::vector<Sequence>& sequences);

}  // namespace neurodrive
