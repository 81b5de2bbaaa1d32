#include "neurodrive/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"

#include "neurodrive/error.hpp"
#include "neurodrive/signal_io.hpp"

namespace neurodrive {
namespace {

using nlohmann::json;

AttentionLabel parse_attention(const std::string& s) {
  if (s == "none") return AttentionLabel::none;
  if (s == "low") return AttentionLabel::low;
  if (s == "high") return AttentionLabel::high;
  fail(ErrorCode::parse, "unknown attention label '" + s + "'");
}

IncidentLabel parse_incident(const std::string& s) {
  if (s == "none") return IncidentLabel::none;
  if (s == "hazardous") return IncidentLabel::hazardous;
  if (s == "non-hazardous") return IncidentLabel::non_hazardous;
  fail(ErrorCode::parse, "unknown incident label '" + s + "'");
}

json record_json(const TrialRecord& r) {
  json files = json::object();
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) files[key] = v;
  };
  put("eeg", r.files.eeg);
  put("ppg", r.files.ppg);
  put("gsr", r.files.gsr);
  put("landmarks", r.files.landmarks);
  put("face_images", r.files.face_images);
  return {{"id", r.trial_id},
          {"subject", r.subject_id},
          {"attention", to_string(r.attention)},
          {"incident", to_string(r.incident)},
          {"duration_s", r.duration_s},
          {"face_fps", r.face_fps},
          {"files", files}};
}

TrialRecord record_from_json(const json& j) {
  TrialRecord r;
  r.trial_id = j.at("id").get<std::string>();
  r.subject_id = j.at("subject").get<std::string>();
  r.attention = parse_attention(j.value("attention", "none"));
  r.incident = parse_incident(j.value("incident", "none"));
  r.duration_s = j.at("duration_s").get<double>();
  r.face_fps = j.value("face_fps", 0.0);
  const auto files = j.value("files", json::object());
  r.files.eeg = files.value("eeg", "");
  r.files.ppg = files.value("ppg", "");
  r.files.gsr = files.value("gsr", "");
  r.files.landmarks = files.value("landmarks", "");
  r.files.face_images = files.value("face_images", "");
  return r;
}

}  // namespace

std::string_view to_string(AttentionLabel label) {
  switch (label) {
    case AttentionLabel::low: return "low";
    case AttentionLabel::high: return "high";
    default: return "none";
  }
}

std::string_view to_string(IncidentLabel label) {
  switch (label) {
    case IncidentLabel::hazardous: return "hazardous";
    case IncidentLabel::non_hazardous: return "non-hazardous";
    default: return "none";
  }
}

Task parse_task(std::string_view name) {
  if (name == "attention") return Task::attention;
  if (name == "incident") return Task::incident;
  fail(ErrorCode::config, "unknown task '" + std::string(name) + "'");
}

std::string_view to_string(Task task) { return task == Task::attention ? "attention" : "incident"; }

int task_label(const TrialRecord& trial, Task task) {
  if (task == Task::attention) {
    if (trial.attention == AttentionLabel::none) fail(ErrorCode::invalid_argument, trial.trial_id + " has no attention label");
    return trial.attention == AttentionLabel::high ? 1 : 0;
  }
  if (trial.incident == IncidentLabel::none) fail(ErrorCode::invalid_argument, trial.trial_id + " has no incident label");
  return trial.incident == IncidentLabel::hazardous ? 1 : 0;
}

std::string Dataset::to_json() const {
  json trials_j = json::array(), incidents_j = json::array();
  for (const auto& r : trials) trials_j.push_back(record_json(r));
  for (const auto& r : incidents) incidents_j.push_back(record_json(r));
  json doc{{"format", "neurodrive.dataset"},
           {"version", 1},
           {"subjects", subjects},
           {"trials", trials_j},
           {"incidents", incidents_j}};
  if (!generator_json.empty()) doc["generator"] = json::parse(generator_json);
  return doc.dump(1) + "\n";
}

void Dataset::save(const std::filesystem::path& manifest) const {
  validate();
  write_text_file(manifest, to_json());
}

Dataset Dataset::load(const std::filesystem::path& manifest) {
  const auto doc = json::parse(read_text_file(manifest), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::parse, manifest.string() + ": malformed manifest");
  if (doc.value("format", "") != "neurodrive.dataset" || doc.value("version", 0) != 1) {
    fail(ErrorCode::parse, manifest.string() + ": not a neurodrive.dataset version 1 manifest");
  }
  Dataset ds;
  ds.root = manifest.parent_path();
  try {
    ds.subjects = doc.at("subjects").get<std::vector<std::string>>();
    for (const auto& j : doc.at("trials")) ds.trials.push_back(record_from_json(j));
    for (const auto& j : doc.value("incidents", json::array())) ds.incidents.push_back(record_from_json(j));
    if (doc.contains("generator")) ds.generator_json = doc.at("generator").dump();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, manifest.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

void Dataset::validate() const {
  const std::set<std::string> known(subjects.begin(), subjects.end());
  if (known.size() != subjects.size()) fail(ErrorCode::parse, "duplicate subject ids in manifest");
  std::set<std::string> ids;
  auto check = [&](const TrialRecord& r) {
    if (r.trial_id.empty()) fail(ErrorCode::parse, "trial with empty id");
    if (!ids.insert(r.trial_id).second) fail(ErrorCode::parse, "duplicate trial id " + r.trial_id);
    if (!known.count(r.subject_id)) fail(ErrorCode::parse, r.trial_id + ": unknown subject " + r.subject_id);
    if (!(r.duration_s > 0.0)) fail(ErrorCode::parse, r.trial_id + ": duration must be positive");
  };
  for (const auto& r : trials) {
    check(r);
    if (r.attention == AttentionLabel::none) fail(ErrorCode::parse, r.trial_id + ": attention trial without label");
  }
  for (const auto& r : incidents) {
    check(r);
    if (r.incident == IncidentLabel::none) fail(ErrorCode::parse, r.trial_id + ": incident clip without label");
    if (std::abs(r.duration_s - kIncidentDurationS) > 1e-9) {
      fail(ErrorCode::parse, r.trial_id + ": labeled incident clips must last 2 s");
    }
  }
}

const TrialRecord* Dataset::find(std::string_view trial_id) const {
  for (const auto* list : {&trials, &incidents}) {
    for (const auto& r : *list) {
      if (r.trial_id == trial_id) return &r;
    }
  }
  return nullptr;
}

std::vector<Fold> loso_split(const std::vector<TrialRecord>& records) {
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < records.size(); ++i) by_subject[records[i].subject_id].push_back(i);
  if (by_subject.size() < 2) fail(ErrorCode::invalid_argument, "leave-one-subject-out needs at least 2 subjects");
  std::vector<Fold> folds;
  for (const auto& [subject, test] : by_subject) {
    Fold f{subject, {}, test};
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].subject_id != subject) f.train.push_back(i);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace neurodrive
