#include "neurodrive/neurodrive.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "json.hpp"

#include "neurodrive/dataset.hpp"
#include "neurodrive/eeg.hpp"
#include "neurodrive/embedding.hpp"
#include "neurodrive/error.hpp"
#include "neurodrive/experiment.hpp"
#include "neurodrive/features.hpp"
#include "neurodrive/parallel.hpp"
#include "neurodrive/signal_io.hpp"
#include "neurodrive/stats.hpp"
#include "neurodrive/synth.hpp"
#include "neurodrive/trend.hpp"

struct nd_dataset {
  neurodrive::Dataset ds;
};

struct nd_embedder {
  std::shared_ptr<const neurodrive::EmbeddingBackend> backend;
};

struct nd_report {
  std::string json;
  std::string table;
};

namespace {

using neurodrive::ErrorCode;
namespace fs = std::filesystem;

thread_local std::string g_last_error;

nd_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return ND_ERR_CONFIG;
    case ErrorCode::io:
    case ErrorCode::not_found: return ND_ERR_IO;
    default: return ND_ERR_DATA;
  }
}

template <class F>
nd_status guard(F&& f) {
  try {
    f();
    return ND_OK;
  } catch (const neurodrive::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return ND_ERR_DATA;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ND_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ND_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) neurodrive::fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

const neurodrive::TrialRecord& find_trial(const nd_dataset* ds, const char* trial_id) {
  require(trial_id, "trial id");
  const auto* r = ds->ds.find(trial_id);
  if (!r) neurodrive::fail(ErrorCode::not_found, std::string("unknown trial ") + trial_id);
  return *r;
}

const std::string& payload_of(const neurodrive::TrialRecord& r, std::string_view modality) {
  if (modality == "eeg") return r.files.eeg;
  if (modality == "ppg") return r.files.ppg;
  if (modality == "gsr") return r.files.gsr;
  return r.files.landmarks;
}

}  // namespace

extern "C" {

ND_API const char* nd_version(void) { return NEURODRIVE_VERSION; }

ND_API const char* nd_last_error(void) { return g_last_error.c_str(); }

ND_API void nd_string_free(char* s) { std::free(s); }

ND_API nd_status nd_synth(const char* config_json, const char* out_dir, nd_dataset** out) {
  return guard([&] {
    require(out_dir, "output directory");
    require(out, "output handle");
    *out = nullptr;
    neurodrive::SynthConfig cfg;
    if (config_json) {
      const auto j = nlohmann::json::parse(config_json, nullptr, false);
      if (j.is_discarded() || !j.is_object()) neurodrive::fail(ErrorCode::config, "synth config must be a JSON object");
      try {
        cfg.n_subjects = j.value("subjects", cfg.n_subjects);
        cfg.trials_per_subject = j.value("trials_per_subject", cfg.trials_per_subject);
        cfg.incidents_per_subject = j.value("incidents_per_subject", cfg.incidents_per_subject);
        cfg.effect_size = j.value("effect", cfg.effect_size);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("modalities")) {
          const auto list = j.at("modalities").get<std::vector<std::string>>();
          cfg.modalities = {list.begin(), list.end()};
        }
      } catch (const nlohmann::json::exception& e) {
        neurodrive::fail(ErrorCode::config, std::string("synth config: ") + e.what());
      }
    }
    auto handle = std::make_unique<nd_dataset>();
    handle->ds = neurodrive::synth_dataset(cfg, out_dir);
    *out = handle.release();
  });
}

ND_API nd_status nd_dataset_open(const char* manifest_path, nd_dataset** out) {
  return guard([&] {
    require(manifest_path, "manifest path");
    require(out, "output handle");
    *out = nullptr;
    auto handle = std::make_unique<nd_dataset>();
    handle->ds = neurodrive::Dataset::load(manifest_path);
    *out = handle.release();
  });
}

ND_API void nd_dataset_free(nd_dataset* ds) { delete ds; }

ND_API size_t nd_dataset_subject_count(const nd_dataset* ds) { return ds ? ds->ds.subjects.size() : 0; }

ND_API size_t nd_dataset_trial_count(const nd_dataset* ds, const char* task) {
  if (!ds || !task) return 0;
  const std::string_view t(task);
  if (t == "attention") return ds->ds.trials.size();
  if (t == "incident") return ds->ds.incidents.size();
  return 0;
}

ND_API const char* nd_dataset_trial_id(const nd_dataset* ds, const char* task, size_t index) {
  if (!ds || !task) return nullptr;
  const std::string_view t(task);
  const auto* list = t == "attention" ? &ds->ds.trials : t == "incident" ? &ds->ds.incidents : nullptr;
  if (!list || index >= list->size()) return nullptr;
  return (*list)[index].trial_id.c_str();
}

ND_API nd_status nd_embedder_create(const char* config_json, nd_embedder** out) {
  return guard([&] {
    require(out, "output handle");
    *out = nullptr;
    const auto cfg = config_json ? neurodrive::EmbeddingConfig::from_json(config_json) : neurodrive::EmbeddingConfig{};
    auto handle = std::make_unique<nd_embedder>();
    handle->backend = neurodrive::load_backend(cfg);
    *out = handle.release();
  });
}

ND_API void nd_embedder_free(nd_embedder* e) { delete e; }

ND_API nd_status nd_embed(const nd_embedder* e, const uint8_t* rgb, int width, int height, double* out) {
  return guard([&] {
    require(e, "embedder");
    require(rgb, "image");
    require(out, "output buffer");
    if (width <= 0 || height <= 0) neurodrive::fail(ErrorCode::invalid_argument, "image dimensions must be positive");
    neurodrive::RgbImage img(width, height);
    std::memcpy(img.pixels.data(), rgb, img.pixels.size());
    const auto v = neurodrive::embed(*e->backend, img);
    std::memcpy(out, v.data(), v.size() * sizeof(double));
  });
}

ND_API nd_status nd_extract(const nd_dataset* ds, const char* trial_id, const char* modality, const nd_embedder* e,
                            int bins, char** features_json) {
  return guard([&] {
    require(ds, "dataset");
    require(e, "embedder");
    require(modality, "modality");
    require(features_json, "output string");
    *features_json = nullptr;
    neurodrive::ExtractOptions opts;
    opts.bins = bins;
    const auto result = neurodrive::extract_trial(ds->ds, find_trial(ds, trial_id), modality, *e->backend, opts);
    *features_json = dup_string(result.features.to_json());
  });
}

ND_API nd_status nd_extract_all(const nd_dataset* ds, const char* modality, const nd_embedder* e, int bins,
                                int render_images, const char* out_dir, char** errors_json) {
  nd_status first = ND_OK;
  const auto setup = guard([&] {
    require(ds, "dataset");
    require(e, "embedder");
    require(modality, "modality");
    require(out_dir, "output directory");
    neurodrive::require_modality(modality);
  });
  if (setup != ND_OK) return setup;

  std::vector<const neurodrive::TrialRecord*> todo;
  for (const auto* list : {&ds->ds.trials, &ds->ds.incidents}) {
    for (const auto& r : *list) {
      if (!payload_of(r, modality).empty()) todo.push_back(&r);
    }
  }
  std::vector<std::string> errors(todo.size());
  std::vector<nd_status> statuses(todo.size(), ND_OK);
  const fs::path dir = fs::path(out_dir) / modality;
  neurodrive::parallel_for(todo.size(), [&](std::size_t i) {
    statuses[i] = guard([&] {
      neurodrive::ExtractOptions opts;
      opts.bins = bins;
      opts.render_images = render_images != 0;
      const auto result = neurodrive::extract_trial(ds->ds, *todo[i], modality, *e->backend, opts);
      neurodrive::write_text_file(dir / (todo[i]->trial_id + ".json"), result.features.to_json());
      for (const auto& img : result.images) {
        neurodrive::write_png(dir / (todo[i]->trial_id + "_" + img.name + ".png"), img.image);
      }
    });
    if (statuses[i] != ND_OK) errors[i] = g_last_error;
  });
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (statuses[i] == ND_OK) continue;
    list.push_back({{"trial", todo[i]->trial_id}, {"error", errors[i]}});
    if (first == ND_OK) {
      first = statuses[i];
      g_last_error = errors[i];
    }
  }
  if (errors_json) {
    const auto s = guard([&] { *errors_json = dup_string(list.dump()); });
    if (s != ND_OK) return s;
  }
  return first;
}

ND_API nd_status nd_extract_trends(const nd_dataset* ds, const char* modality, const nd_embedder* e,
                                   double interval_s, int bins, const char* out_dir) {
  return guard([&] {
    require(ds, "dataset");
    require(e, "embedder");
    require(modality, "modality");
    require(out_dir, "output directory");
    const std::string m(modality);
    if (m != "eeg" && m != "face") neurodrive::fail(ErrorCode::config, "trend sequences exist only for eeg and face");
    std::vector<const neurodrive::TrialRecord*> todo;
    for (const auto& r : ds->ds.incidents) {
      if (!payload_of(r, m).empty()) todo.push_back(&r);
    }
    if (todo.empty()) neurodrive::fail(ErrorCode::not_found, "no incident clips carry a " + m + " payload");
    std::vector<Eigen::MatrixXd> raw(todo.size());
    neurodrive::parallel_for(todo.size(), [&](std::size_t i) {
      try {
        raw[i] = neurodrive::trend_features(ds->ds, *todo[i], m, *e->backend, interval_s, bins);
      } catch (const neurodrive::Error& err) {
        throw neurodrive::Error(err.code(), todo[i]->trial_id + ": " + err.what());
      }
    });
    Eigen::Index rows = 0;
    for (const auto& r : raw) rows += r.rows();
    Eigen::MatrixXd pooled(rows, raw.front().cols());
    rows = 0;
    for (const auto& r : raw) {
      pooled.middleRows(rows, r.rows()) = r;
      rows += r.rows();
    }
    if (pooled.rows() <= neurodrive::kTrendWidth) {
      neurodrive::fail(ErrorCode::config, "too few intervals to fit a 60-dimensional trend reduction");
    }
    const auto reduction = neurodrive::ReductionChain::fit(pooled, neurodrive::kTrendWidth);
    const fs::path dir = fs::path(out_dir) / m;
    neurodrive::write_text_file(dir / "trend_reduction.json", reduction.to_json() + "\n");
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const auto seq = neurodrive::trend_sequence(todo[i]->trial_id, raw[i], reduction, interval_s);
      neurodrive::write_text_file(dir / (todo[i]->trial_id + ".trend.json"), seq.to_json() + "\n");
    }
  });
}

ND_API nd_status nd_render(const nd_dataset* ds, const char* trial_id, const char* out_dir, char** warnings_json) {
  return guard([&] {
    require(ds, "dataset");
    require(out_dir, "output directory");
    if (warnings_json) *warnings_json = nullptr;
    const auto& record = find_trial(ds, trial_id);
    const auto result = neurodrive::render_trial(ds->ds, record);
    for (const auto& img : result.images) {
      neurodrive::write_png(fs::path(out_dir) / (record.trial_id + "_" + img.name + ".png"), img.image);
    }
    if (warnings_json) *warnings_json = dup_string(nlohmann::json(result.warnings).dump());
  });
}

ND_API nd_status nd_eval(const nd_dataset* ds, const char* config_json, nd_report** out) {
  return guard([&] {
    require(ds, "dataset");
    require(out, "output handle");
    *out = nullptr;
    const auto cfg = config_json ? neurodrive::ExperimentConfig::from_json(config_json) : neurodrive::ExperimentConfig{};
    const auto report = neurodrive::run_experiment(ds->ds, cfg);
    auto handle = std::make_unique<nd_report>();
    handle->json = report.to_json();
    handle->table = report.table();
    *out = handle.release();
  });
}

ND_API const char* nd_report_json(const nd_report* r) { return r ? r->json.c_str() : nullptr; }

ND_API const char* nd_report_table(const nd_report* r) { return r ? r->table.c_str() : nullptr; }

ND_API void nd_report_free(nd_report* r) { delete r; }

ND_API nd_status nd_mutual_information(const double* x, const double* y, size_t n, int bins, double* out) {
  return guard([&] {
    require(x, "x");
    require(y, "y");
    require(out, "output");
    *out = neurodrive::mutual_information({x, n}, {y, n}, bins);
  });
}

ND_API nd_status nd_conditional_entropy(const double* x, const double* y, size_t n, int bins, double* out) {
  return guard([&] {
    require(x, "x");
    require(y, "y");
    require(out, "output");
    *out = neurodrive::conditional_entropy({x, n}, {y, n}, bins);
  });
}

ND_API nd_status nd_auc(const int* labels, const double* scores, size_t n, double* out) {
  return guard([&] {
    require(labels, "labels");
    require(scores, "scores");
    require(out, "output");
    *out = neurodrive::auc({labels, n}, {scores, n});
  });
}

ND_API nd_status nd_paired_ttest(const double* a, const double* b, size_t n, double* t, double* p) {
  return guard([&] {
    require(a, "a");
    require(b, "b");
    require(t, "t");
    require(p, "p");
    const auto r = neurodrive::paired_ttest({a, n}, {b, n});
    *t = r.t;
    *p = r.p;
  });
}

}  // extern "C"
