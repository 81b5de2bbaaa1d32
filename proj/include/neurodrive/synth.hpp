#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>

#include "neurodrive/dataset.hpp"

namespace neurodrive {

struct SynthConfig {
  int n_subjects = 12;
  int trials_per_subject = 35;     // attention trials
  int incidents_per_subject = 10;  // 2 s clips, EEG + face
  double effect_size = 1.0;
  std::uint64_t seed = 1;
  std::set<std::string> modalities{"eeg", "ppg", "gsr", "face"};
  double eeg_rate_hz = 128.0;
  double peripheral_rate_hz = 51.2;
  double attention_fps = 2.0;
  double incident_fps = 16.0;

  std::string to_json() const;
};

/// Writes signal CSVs, landmark CSVs and face crops under out_dir plus
/// out_dir/manifest.json, and returns the dataset. Class 1 (high attention,
/// hazardous incident) differs from class 0 only through terms scaled by
/// effect_size. Output bytes depend only on the config.
Dataset synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace neurodrive
