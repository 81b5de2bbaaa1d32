#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "neurodrive/eeg.hpp"
#include "neurodrive/embedding.hpp"
#include "neurodrive/face.hpp"
#include "neurodrive/learn.hpp"

namespace neurodrive {

inline constexpr int kTrendWidth = 60;
inline constexpr double kDefaultTrendIntervalS = 0.25;

/// Number of whole intervals in a recording; a trailing remainder is dropped.
std::size_t interval_count(double duration_s, double interval_s);

/// Consecutive non-overlapping slices; slice k covers samples
/// [round(k * interval * fs), round((k + 1) * interval * fs)).
std::vector<EegTrial> interval_slices(const EegTrial& trial, double interval_s);

/// embed(topo image of the slice) ++ pairwise entropy features: 4096 + 91.
/// Slices shorter than one Welch window use a single periodogram.
std::vector<double> eeg_slice_features(const EegTrial& slice, const EmbeddingBackend& embedder,
                                       int bins = kDefaultEntropyBins);

/// One row of eeg_slice_features per interval.
Eigen::MatrixXd eeg_trend_features(const EegTrial& trial, const EmbeddingBackend& embedder, double interval_s,
                                   int bins = kDefaultEntropyBins);

/// Per interval: aggregated geometric features of the frames inside it (90)
/// ++ mean embedding of their crops (4096). An interval without frames uses
/// the latest frame before its end.
Eigen::MatrixXd face_trend_features(const FaceTrial& trial, const EmbeddingBackend& embedder, double duration_s,
                                    double interval_s);

struct TrendSequence {
  std::string trial_id;
  double interval_s = 0.0;
  Eigen::MatrixXd values;  // T x 60

  std::string to_json() const;
  static TrendSequence from_json(std::string_view text);
};

/// Applies a reduction fit on training-split slices; its output must be 60 wide.
TrendSequence trend_sequence(const std::string& trial_id, const Eigen::MatrixXd& slice_features,
                             const ReductionChain& reduction, double interval_s);

TrendSequence trend_sequence(const std::string& trial_id, const EegTrial& trial, const EmbeddingBackend& embedder,
                             const ReductionChain& reduction, double interval_s);

}  // namespace neurodrive
