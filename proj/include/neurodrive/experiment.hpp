#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "neurodrive/dataset.hpp"
#include "neurodrive/embedding.hpp"
#include "neurodrive/learn.hpp"
#include "neurodrive/lstm.hpp"
#include "neurodrive/stats.hpp"

namespace neurodrive {

/// A modality set evaluated as one fused feature vector, e.g. "eeg+face".
struct ExperimentCase {
  std::string name;
  std::vector<std::string> modalities;
};

/// "eeg,face,eeg+face" -> three cases; '+' fuses modalities by concatenation.
std::vector<ExperimentCase> parse_cases(std::string_view list);

struct ExperimentConfig {
  Task task = Task::attention;
  std::vector<ExperimentCase> cases{{"eeg", {"eeg"}}};
  std::string classifier = "elm";  // elm | lstm
  int pca_dim = 30;
  int elm_hidden = kElmHidden;
  LstmConfig lstm;                 // seed is replaced per fold
  double interval_s = 0.25;        // trend slices for the lstm path
  int bins = 16;
  EmbeddingConfig embedding;
  std::uint64_t seed = 1;
  std::string pca_fit_scope = "train";  // train | all
  std::filesystem::path features_dir;   // optional cache written by extract
  std::size_t threads = 0;              // 0 = NEURODRIVE_THREADS / hardware

  void validate() const;
  /// Keys mirror the fields; absent keys keep their defaults.
  static ExperimentConfig from_json(std::string_view text);
  std::string to_json() const;
};

/// Raw per-trial features for each modality. For the ELM path every trial has
/// one row; for the LSTM path one matrix of interval rows.
struct FeatureTable {
  std::map<std::string, std::vector<std::vector<double>>> vectors;
  std::map<std::string, std::vector<Eigen::MatrixXd>> trends;
};

FeatureTable collect_features(const Dataset& ds, const std::vector<TrialRecord>& records,
                              const std::vector<std::string>& modalities, const EmbeddingBackend& embedder,
                              const ExperimentConfig& config);

/// Rows = the given trial indices, columns = the case's modalities in order.
Eigen::MatrixXd case_matrix(const FeatureTable& table, const ExperimentCase& c, const std::vector<std::size_t>& rows);

struct ElmFoldModel {
  ReductionChain reduction;
  ElmModel elm;

  static ElmFoldModel fit(const Eigen::MatrixXd& x_train, const std::vector<int>& y_train,
                          const ExperimentConfig& config, std::uint64_t fold_seed);
  Eigen::VectorXd scores(const Eigen::MatrixXd& x) const { return elm.scores(reduction.apply(x)); }
  std::string to_json() const;
};

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold_index);

struct FoldResult {
  std::string subject_id;
  std::vector<std::string> trial_ids;
  std::vector<int> labels;
  std::vector<double> scores;
  std::vector<int> predictions;
  double accuracy = 0.0;
  std::optional<double> auc;  // empty when the held-out subject has one class
};

struct CaseResult {
  ExperimentCase spec;
  std::vector<FoldResult> folds;
  MeanStd accuracy;
  std::optional<MeanStd> auc;
  std::optional<TTestResult> vs_chance;  // paired over folds against 0.5
};

struct PairwiseTest {
  std::string a;
  std::string b;
  TTestResult test;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t trial_count = 0;
  std::vector<CaseResult> cases;
  std::vector<PairwiseTest> pairwise;
  std::optional<AnovaResult> anova;
  std::string embedder;  // backend description

  std::string to_json() const;
  std::string table() const;
};

ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& config);

}  // namespace neurodrive
