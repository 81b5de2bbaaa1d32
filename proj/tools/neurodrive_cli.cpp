// neurodrive command-line front end. Everything goes through the C API.
//
//   neurodrive synth   --out DIR [--subjects N] [--trials-per-subject M] [--effect SIZE] [--seed S]
//   neurodrive extract --manifest F --modality {eeg,ppg,gsr,face} --out DIR [--trend] [--render-images]
//   neurodrive eval    --manifest F --task {attention,incident} --modalities LIST --classifier {elm,lstm}
//                      --pca-dim K --seed S --report OUT
//   neurodrive render  --manifest F --trial ID --out DIR
//
// Exit codes: 0 success, 2 bad configuration, 3 bad or missing data, 1 anything else.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "neurodrive/neurodrive.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

int exit_code(nd_status s) {
  switch (s) {
    case ND_OK: return kExitOk;
    case ND_ERR_CONFIG: return kExitConfig;
    case ND_ERR_DATA:
    case ND_ERR_IO: return kExitData;
    default: return kExitInternal;
  }
}

// Carries a status out of the command bodies so main() prints one message.
struct Failure {
  nd_status status;
  std::string message;
};

void check(nd_status s, const std::string& context) {
  if (s != ND_OK) throw Failure{s, context + ": " + nd_last_error()};
}

// Owns a malloc'd string handed back by the library.
struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { nd_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct DatasetHandle {
  nd_dataset* p = nullptr;
  ~DatasetHandle() { nd_dataset_free(p); }
};

struct EmbedderHandle {
  nd_embedder* p = nullptr;
  ~EmbedderHandle() { nd_embedder_free(p); }
};

struct ReportHandle {
  nd_report* p = nullptr;
  ~ReportHandle() { nd_report_free(p); }
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Failure{ND_ERR_IO, "cannot read " + p.string()};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw Failure{ND_ERR_IO, "cannot write " + p.string()};
}

json parse_config_file(const std::string& path) {
  const auto doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Failure{ND_ERR_CONFIG, path + ": expected a JSON object"};
  return doc;
}

// Written once before any artifact (status "running") and again at the end.
class RunManifest {
 public:
  RunManifest(fs::path path, std::string command, const json& config, std::uint64_t seed, std::string input)
      : path_(std::move(path)) {
    const auto canonical = config.dump();
    doc_ = {{"format", "neurodrive.run_manifest"},
            {"version", 1},
            {"tool_version", nd_version()},
            {"command", std::move(command)},
            {"config", config},
            {"config_hash", "fnv1a64:" + hex64(fnv1a(canonical))},
            {"seed", seed},
            {"input", std::move(input)},
            {"started_at", utc_now()},
            {"status", "running"},
            {"outputs", json::array()}};
    flush();
  }

  void output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }

  void finish(const std::string& status) {
    doc_["status"] = status;
    doc_["finished_at"] = utc_now();
    flush();
  }

 private:
  void flush() { write_file(path_, doc_.dump(1) + "\n"); }

  fs::path path_;
  json doc_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- synth ----

struct SynthArgs {
  std::string out;
  int subjects = 12;
  int trials = 35;
  int incidents = 10;
  double effect = 1.0;
  std::uint64_t seed = 1;
  std::string modalities = "eeg,ppg,gsr,face";
};

int run_synth(const SynthArgs& a) {
  const json config{{"subjects", a.subjects},
                    {"trials_per_subject", a.trials},
                    {"incidents_per_subject", a.incidents},
                    {"effect", a.effect},
                    {"seed", a.seed},
                    {"modalities", split_list(a.modalities)}};
  if (a.subjects < 2) throw Failure{ND_ERR_CONFIG, "synth: at least 2 subjects are needed for leave-one-subject-out"};
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw Failure{ND_ERR_IO, "synth: cannot create " + a.out + ": " + ec.message()};
  RunManifest run(fs::path(a.out) / "run_manifest.json", "synth", config, a.seed, "");
  DatasetHandle ds;
  check(nd_synth(config.dump().c_str(), a.out.c_str(), &ds.p), "synth");
  run.output(fs::path(a.out) / "manifest.json");
  run.finish("ok");
  std::cout << "wrote " << nd_dataset_trial_count(ds.p, "attention") << " trials and "
            << nd_dataset_trial_count(ds.p, "incident") << " incident clips for "
            << nd_dataset_subject_count(ds.p) << " subjects to " << a.out << "\n";
  return kExitOk;
}

// ---- extract ----

struct ExtractArgs {
  std::string manifest;
  std::string modality;
  std::string out;
  bool trend = false;
  bool render_images = false;
  double interval = 0.25;
  int bins = 16;
  std::string embedding;  // optional embedding config file
};

int run_extract(const ExtractArgs& a) {
  json embedding = a.embedding.empty() ? json{{"kind", "deterministic_projection"}} : parse_config_file(a.embedding);
  const json config{{"modality", a.modality}, {"trend", a.trend},       {"render_images", a.render_images},
                    {"interval_s", a.interval}, {"bins", a.bins},       {"embedding", embedding}};
  const fs::path dir = fs::path(a.out) / a.modality;
  DatasetHandle ds;
  check(nd_dataset_open(a.manifest.c_str(), &ds.p), "extract");
  EmbedderHandle emb;
  check(nd_embedder_create(embedding.dump().c_str(), &emb.p), "extract");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{ND_ERR_IO, "extract: cannot create " + dir.string() + ": " + ec.message()};
  RunManifest run(dir / (a.trend ? "run_manifest.trend.json" : "run_manifest.json"), "extract", config, 0,
                  a.manifest);

  if (a.trend) {
    const auto s = nd_extract_trends(ds.p, a.modality.c_str(), emb.p, a.interval, a.bins, a.out.c_str());
    if (s != ND_OK) {
      run.finish("failed");
      check(s, "extract --trend");
    }
    run.output(dir);
    run.finish("ok");
    std::cout << "wrote trend sequences to " << dir.string() << "\n";
    return kExitOk;
  }

  OwnedString errors;
  const auto s =
      nd_extract_all(ds.p, a.modality.c_str(), emb.p, a.bins, a.render_images ? 1 : 0, a.out.c_str(), &errors.p);
  run.output(dir);
  if (s != ND_OK) {
    run.finish("failed");
    if (!errors.p) check(s, "extract");
    const auto list = json::parse(errors.str());
    for (const auto& e : list) {
      std::cerr << "neurodrive: " << e.at("trial").get<std::string>() << ": " << e.at("error").get<std::string>()
                << "\n";
    }
    throw Failure{s, "extract: " + std::to_string(list.size()) + " trial(s) failed"};
  }
  run.finish("ok");
  std::cout << "wrote " << a.modality << " features to " << dir.string() << "\n";
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string manifest;
  std::string config;
  std::string task;
  std::string modalities;
  std::string classifier;
  int pca_dim = 30;
  std::uint64_t seed = 1;
  std::string report;
  std::string features;
  double interval = 0.25;
  int epochs = 100;
};

int run_eval(const EvalArgs& a, const CLI::App& cmd) {
  json config = a.config.empty() ? json::object() : parse_config_file(a.config);
  // Flags win over the config file, but only when given.
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--task")) config["task"] = a.task;
  if (given("--modalities")) config["modalities"] = a.modalities;
  if (given("--classifier")) config["classifier"] = a.classifier;
  if (given("--pca-dim")) config["pca_dim"] = a.pca_dim;
  if (given("--seed")) config["seed"] = a.seed;
  if (given("--features")) config["features_dir"] = a.features;
  if (given("--interval")) config["interval_s"] = a.interval;
  if (given("--epochs")) config["lstm"]["epochs"] = a.epochs;

  DatasetHandle ds;
  check(nd_dataset_open(a.manifest.c_str(), &ds.p), "eval");
  const fs::path report_path(a.report);
  fs::path run_path = report_path;
  run_path.replace_extension(".run_manifest.json");
  const std::uint64_t seed = config.value("seed", std::uint64_t{1});
  RunManifest run(run_path, "eval", config, seed, a.manifest);
  ReportHandle report;
  const auto s = nd_eval(ds.p, config.dump().c_str(), &report.p);
  if (s != ND_OK) {
    run.finish("failed");
    check(s, "eval");
  }
  write_file(report_path, std::string(nd_report_json(report.p)) + "\n");
  run.output(report_path);
  run.finish("ok");
  std::cout << nd_report_table(report.p);
  return kExitOk;
}

// ---- render ----

struct RenderArgs {
  std::string manifest;
  std::string trial;
  std::string out;
};

int run_render(const RenderArgs& a) {
  const json config{{"trial", a.trial}};
  DatasetHandle ds;
  check(nd_dataset_open(a.manifest.c_str(), &ds.p), "render");
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw Failure{ND_ERR_IO, "render: cannot create " + a.out + ": " + ec.message()};
  RunManifest run(fs::path(a.out) / ("run_manifest." + a.trial + ".json"), "render", config, 0, a.manifest);
  OwnedString warnings;
  const auto s = nd_render(ds.p, a.trial.c_str(), a.out.c_str(), &warnings.p);
  if (s != ND_OK) {
    run.finish("failed");
    check(s, "render");
  }
  for (const auto& w : json::parse(warnings.str())) std::cerr << "neurodrive: warning: " << w.get<std::string>() << "\n";
  run.output(a.out);
  run.finish("ok");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neurodrive: multimodal driver-state features and leave-one-subject-out evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nd_version()));

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", sa.out, "output directory")->required();
  synth->add_option("--subjects", sa.subjects, "number of subjects")->capture_default_str();
  synth->add_option("--trials-per-subject", sa.trials, "attention trials per subject")->capture_default_str();
  synth->add_option("--incidents-per-subject", sa.incidents, "2 s incident clips per subject")->capture_default_str();
  synth->add_option("--effect", sa.effect, "class effect size (0 = no signal)")->capture_default_str();
  synth->add_option("--seed", sa.seed, "random seed")->capture_default_str();
  synth->add_option("--modalities", sa.modalities, "comma-separated payloads to write")->capture_default_str();

  ExtractArgs ea;
  auto* extract = app.add_subcommand("extract", "write per-trial feature files");
  extract->add_option("--manifest", ea.manifest, "dataset manifest")->required();
  extract->add_option("--modality", ea.modality, "eeg, ppg, gsr or face")->required();
  extract->add_option("--out", ea.out, "output directory")->required();
  extract->add_flag("--trend", ea.trend, "per-interval trend sequences for incident clips");
  extract->add_flag("--render-images", ea.render_images, "also write the topographic and spectrogram PNGs");
  extract->add_option("--interval", ea.interval, "trend interval in seconds")->capture_default_str();
  extract->add_option("--bins", ea.bins, "histogram bins for entropy features")->capture_default_str();
  extract->add_option("--embedding", ea.embedding, "embedding config JSON file");

  EvalArgs va;
  auto* eval = app.add_subcommand("eval", "leave-one-subject-out evaluation");
  eval->add_option("--manifest", va.manifest, "dataset manifest")->required();
  eval->add_option("--config", va.config, "config JSON file; flags override it");
  eval->add_option("--task", va.task, "attention or incident");
  eval->add_option("--modalities", va.modalities, "cases, e.g. eeg,face,eeg+face");
  eval->add_option("--classifier", va.classifier, "elm or lstm");
  eval->add_option("--pca-dim", va.pca_dim, "PCA dimension")->capture_default_str();
  eval->add_option("--seed", va.seed, "random seed")->capture_default_str();
  eval->add_option("--report", va.report, "report JSON path")->required();
  eval->add_option("--features", va.features, "directory of extracted feature files to reuse");
  eval->add_option("--interval", va.interval, "trend interval in seconds (lstm)")->capture_default_str();
  eval->add_option("--epochs", va.epochs, "LSTM training epochs")->capture_default_str();

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "write topographic map and spectrogram PNGs for one trial");
  render->add_option("--manifest", ra.manifest, "dataset manifest")->required();
  render->add_option("--trial", ra.trial, "trial id")->required();
  render->add_option("--out", ra.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) return run_synth(sa);
    if (extract->parsed()) return run_extract(ea);
    if (eval->parsed()) return run_eval(va, *eval);
    if (render->parsed()) return run_render(ra);
  } catch (const Failure& f) {
    std::cerr << "neurodrive: " << f.message << "\n";
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "neurodrive: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
