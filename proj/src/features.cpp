#include "neurodrive/features.hpp"

#include <algorithm>

#include "json.hpp"

#include "neurodrive/error.hpp"
#include "neurodrive/peripheral.hpp"
#include "neurodrive/signal_io.hpp"
#include "neurodrive/trend.hpp"

namespace neurodrive {
namespace {

const std::string& payload(const TrialRecord& record, std::string_view modality) {
  if (modality == "eeg") return record.files.eeg;
  if (modality == "ppg") return record.files.ppg;
  if (modality == "gsr") return record.files.gsr;
  return record.files.landmarks;
}

void require_payload(const TrialRecord& record, std::string_view modality) {
  if (payload(record, modality).empty()) {
    fail(ErrorCode::not_found, record.trial_id + ": no " + std::string(modality) + " payload");
  }
}

RgbImage topo_for(const EegTrial& trial) {
  const auto window = static_cast<std::size_t>(std::lround(WelchParams{}.window_s * trial.sampling_rate_hz()));
  const auto maps = band_power_maps(trial, trial.length() >= window ? PsdMethod::welch : PsdMethod::periodogram);
  return render_topo_image(maps.theta, maps.alpha, maps.beta, ElectrodeLayout::standard()).image;
}

double spectrogram_fmax(std::string_view modality) {
  return modality == "ppg" ? kPpgSpectrogramFmaxHz : kGsrSpectrogramFmaxHz;
}

}  // namespace

void require_modality(std::string_view modality) {
  if (std::find(std::begin(kModalities), std::end(kModalities), modality) == std::end(kModalities)) {
    fail(ErrorCode::config, "unknown modality '" + std::string(modality) + "'");
  }
}

std::size_t modality_width(std::string_view modality) {
  require_modality(modality);
  if (modality == "eeg") return kEmbeddingDim + kEntropyFeatureCount;
  if (modality == "ppg") return kPpgFeatureCount + kEmbeddingDim;
  if (modality == "gsr") return kGsrFeatureCount + kEmbeddingDim;
  return kFaceGeometricTrialCount + kFaceDeepTrialCount;
}

std::vector<double> TrialFeatures::flatten() const {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.values.begin(), b.values.end());
  return out;
}

const FeatureBlock& TrialFeatures::block(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  fail(ErrorCode::not_found, trial_id + ": no feature block " + std::string(name));
}

std::string TrialFeatures::to_json() const {
  nlohmann::json blocks_j = nlohmann::json::array();
  for (const auto& b : blocks) blocks_j.push_back({{"name", b.name}, {"size", b.values.size()}, {"values", b.values}});
  return nlohmann::json{{"format", "neurodrive.features"},
                        {"version", 1},
                        {"trial_id", trial_id},
                        {"modality", modality},
                        {"blocks", blocks_j}}
             .dump() +
         "\n";
}

TrialFeatures TrialFeatures::from_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || doc.value("format", "") != "neurodrive.features" || doc.value("version", 0) != 1) {
    fail(ErrorCode::parse, "expected neurodrive.features version 1");
  }
  try {
    TrialFeatures f;
    f.trial_id = doc.at("trial_id").get<std::string>();
    f.modality = doc.at("modality").get<std::string>();
    for (const auto& b : doc.at("blocks")) {
      f.blocks.push_back({b.at("name").get<std::string>(), b.at("values").get<std::vector<double>>()});
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("feature file: ") + e.what());
  }
}

EegTrial load_eeg(const Dataset& ds, const TrialRecord& record) {
  require_payload(record, "eeg");
  return preprocess_eeg(read_signal_csv(ds.resolve(record.files.eeg)));
}

SampledSeries load_peripheral(const Dataset& ds, const TrialRecord& record, std::string_view modality) {
  require_payload(record, modality);
  return read_signal_csv(ds.resolve(payload(record, modality)));
}

FaceTrial load_face(const Dataset& ds, const TrialRecord& record, bool with_images) {
  require_payload(record, "face");
  FaceTrial trial;
  trial.frames = read_landmarks_csv(ds.resolve(record.files.landmarks));
  trial.fps = record.face_fps;
  if (with_images) {
    if (record.files.face_images.empty()) fail(ErrorCode::not_found, record.trial_id + ": no face crops");
    trial.face_images = read_face_images(ds.resolve(record.files.face_images));
  }
  trial.validate();
  return trial;
}

Extraction extract_trial(const Dataset& ds, const TrialRecord& record, std::string_view modality,
                         const EmbeddingBackend& embedder, const ExtractOptions& options) {
  require_modality(modality);
  Extraction out;
  out.features.trial_id = record.trial_id;
  out.features.modality = std::string(modality);
  auto& blocks = out.features.blocks;
  if (modality == "eeg") {
    const auto trial = load_eeg(ds, record);
    auto topo = topo_for(trial);
    blocks.push_back({"eeg_deep", embed(embedder, topo)});
    blocks.push_back({"eeg_entropy", pairwise_entropy_features(trial, options.bins)});
    if (options.render_images) out.images.push_back({"topo", std::move(topo)});
  } else if (modality == "ppg" || modality == "gsr") {
    const auto series = load_peripheral(ds, record, modality);
    auto image = spectrogram_image(series.samples(0), series.sampling_rate_hz(), spectrogram_fmax(modality));
    if (modality == "ppg") {
      blocks.push_back({"ppg_stats", ppg_feature_vector(series).values});
    } else {
      blocks.push_back({"gsr_stats", gsr_feature_vector(series)});
    }
    blocks.push_back({std::string(modality) + "_deep", embed(embedder, image)});
    if (options.render_images) out.images.push_back({std::string(modality) + "_spectrogram", std::move(image)});
  } else {
    const auto trial = load_face(ds, record, true);
    blocks.push_back({"face_geometric", face_geometric_trial_features(trial)});
    blocks.push_back({"face_deep", face_deep_trial_features(trial, embedder)});
  }
  return out;
}

Eigen::MatrixXd trend_features(const Dataset& ds, const TrialRecord& record, std::string_view modality,
                               const EmbeddingBackend& embedder, double interval_s, int bins) {
  require_modality(modality);
  if (modality == "eeg") return eeg_trend_features(load_eeg(ds, record), embedder, interval_s, bins);
  if (modality == "face") return face_trend_features(load_face(ds, record, true), embedder, record.duration_s, interval_s);
  fail(ErrorCode::config, "trend features exist only for eeg and face, not " + std::string(modality));
}

RenderResult render_trial(const Dataset& ds, const TrialRecord& record) {
  RenderResult out;
  // Absent or unreadable payloads become warnings so the other images still render.
  auto attempt = [&](std::string_view modality, auto&& render) {
    if (payload(record, modality).empty()) {
      out.warnings.push_back(record.trial_id + ": no " + std::string(modality) + " payload, image skipped");
      return;
    }
    try {
      render();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::io && e.code() != ErrorCode::not_found) throw;
      out.warnings.push_back(record.trial_id + ": " + e.what());
    }
  };
  attempt("eeg", [&] { out.images.push_back({"topo", topo_for(load_eeg(ds, record))}); });
  for (std::string_view m : {"ppg", "gsr"}) {
    attempt(m, [&] {
      const auto series = load_peripheral(ds, record, m);
      out.images.push_back({std::string(m) + "_spectrogram",
                            spectrogram_image(series.samples(0), series.sampling_rate_hz(), spectrogram_fmax(m))});
    });
  }
  return out;
}

}  // namespace neurodrive
