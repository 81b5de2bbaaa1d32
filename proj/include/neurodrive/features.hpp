#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "neurodrive/dataset.hpp"
#include "neurodrive/eeg.hpp"
#include "neurodrive/embedding.hpp"
#include "neurodrive/face.hpp"
#include "neurodrive/image.hpp"

namespace neurodrive {

inline constexpr std::string_view kModalities[] = {"eeg", "ppg", "gsr", "face"};

/// Throws config for anything outside eeg, ppg, gsr, face.
void require_modality(std::string_view modality);

struct FeatureBlock {
  std::string name;
  std::vector<double> values;
};

/// Named, ordered blocks for one trial and modality:
///   eeg  = eeg_deep (4096), eeg_entropy (91)
///   ppg  = ppg_stats (7), ppg_deep (4096)
///   gsr  = gsr_stats (8), gsr_deep (4096)
///   face = face_geometric (90), face_deep (12288)
struct TrialFeatures {
  std::string trial_id;
  std::string modality;
  std::vector<FeatureBlock> blocks;

  std::vector<double> flatten() const;
  const FeatureBlock& block(std::string_view name) const;

  std::string to_json() const;
  static TrialFeatures from_json(std::string_view text);
};

std::size_t modality_width(std::string_view modality);

struct ExtractOptions {
  int bins = kDefaultEntropyBins;
  bool render_images = false;
};

struct NamedImage {
  std::string name;  // file stem, e.g. "topo" or "ppg_spectrogram"
  RgbImage image;
};

struct Extraction {
  TrialFeatures features;
  std::vector<NamedImage> images;
};

// Payload loaders; a record without the payload throws not_found.
EegTrial load_eeg(const Dataset& ds, const TrialRecord& record);
SampledSeries load_peripheral(const Dataset& ds, const TrialRecord& record, std::string_view modality);
FaceTrial load_face(const Dataset& ds, const TrialRecord& record, bool with_images);

Extraction extract_trial(const Dataset& ds, const TrialRecord& record, std::string_view modality,
                         const EmbeddingBackend& embedder, const ExtractOptions& options = {});

/// Per-interval raw features (rows = intervals) for the EEG and face trend paths.
Eigen::MatrixXd trend_features(const Dataset& ds, const TrialRecord& record, std::string_view modality,
                               const EmbeddingBackend& embedder, double interval_s, int bins = kDefaultEntropyBins);

/// Topographic map and peripheral spectrograms for whatever payloads exist.
/// Missing payloads add a warning instead of failing.
struct RenderResult {
  std::vector<NamedImage> images;
  std::vector<std::string> warnings;
};

RenderResult render_trial(const Dataset& ds, const TrialRecord& record);

}  // namespace neurodrive
