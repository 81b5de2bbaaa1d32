#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace neurodrive {

enum class AttentionLabel { none, low, high };
enum class IncidentLabel { none, hazardous, non_hazardous };

std::string_view to_string(AttentionLabel label);
std::string_view to_string(IncidentLabel label);

inline constexpr double kIncidentDurationS = 2.0;

/// Payload paths are relative to the manifest directory; empty when absent.
struct TrialFiles {
  std::string eeg;
  std::string ppg;
  std::string gsr;
  std::string landmarks;
  std::string face_images;  // directory of numbered PNGs
};

struct TrialRecord {
  std::string trial_id;
  std::string subject_id;
  AttentionLabel attention = AttentionLabel::none;
  IncidentLabel incident = IncidentLabel::none;
  double duration_s = 0.0;
  double face_fps = 0.0;
  TrialFiles files;
};

enum class Task { attention, incident };

Task parse_task(std::string_view name);
std::string_view to_string(Task task);

/// Binary target for the task: high attention / hazardous incident = 1.
int task_label(const TrialRecord& trial, Task task);

/// Attention trials (full recordings) and incident clips (2 s) are kept in
/// separate lists; each task evaluates on its own list.
struct Dataset {
  std::filesystem::path root;  // directory holding the manifest
  std::vector<std::string> subjects;
  std::vector<TrialRecord> trials;
  std::vector<TrialRecord> incidents;
  std::string generator_json;  // provenance of synthetic data, "" otherwise

  static Dataset load(const std::filesystem::path& manifest);
  void save(const std::filesystem::path& manifest) const;
  std::string to_json() const;

  /// Unique ids, known subjects, valid labels, 2 s incident clips.
  void validate() const;

  const std::vector<TrialRecord>& records(Task task) const {
    return task == Task::attention ? trials : incidents;
  }
  const TrialRecord* find(std::string_view trial_id) const;
  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
};

struct Fold {
  std::string subject_id;
  std::vector<std::size_t> train;  // indices into the record list
  std::vector<std::size_t> test;
};

/// One fold per subject that owns trials, ordered by subject id.
std::vector<Fold> loso_split(const std::vector<TrialRecord>& records);

}  // namespace neurodrive
