#include <atomic>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "neurodrive/experiment.hpp"
#include "neurodrive/features.hpp"
#include "neurodrive/parallel.hpp"
#include "neurodrive/signal_io.hpp"
#include "neurodrive/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace neurodrive;
using testing::error_of;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<TrialRecord> random_records(oracle::Gen& g) {
  std::vector<TrialRecord> r;
  const int subjects = 2 + g.integer(10);
  const int n = subjects + g.integer(80);
  for (int i = 0; i < n; ++i) {
    TrialRecord t;
    t.trial_id = "t" + std::to_string(i);
    // the first `subjects` trials make sure every subject owns one
    t.subject_id = "S" + std::to_string(i < subjects ? i : g.integer(subjects));
    r.push_back(t);
  }
  return r;
}

SynthConfig small_config(double effect, std::set<std::string> modalities) {
  SynthConfig c;
  c.n_subjects = 3;
  c.trials_per_subject = 4;
  c.incidents_per_subject = 2;
  c.effect_size = effect;
  c.seed = 5;
  c.modalities = std::move(modalities);
  return c;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("loso folds partition the trials") {
  oracle::Gen g(1);
  for (int t = 0; t < 100; ++t) {
    const auto records = random_records(g);
    const auto folds = loso_split(records);
    std::set<std::string> subjects;
    for (const auto& r : records) subjects.insert(r.subject_id);
    REQUIRE(folds.size() == subjects.size());
    std::vector<int> seen(records.size(), 0);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      if (f > 0) CHECK(folds[f - 1].subject_id < folds[f].subject_id);
      CHECK(folds[f].train.size() + folds[f].test.size() == records.size());
      for (auto i : folds[f].test) {
        ++seen[i];
        CHECK(records[i].subject_id == folds[f].subject_id);
      }
      for (auto i : folds[f].train) CHECK(records[i].subject_id != folds[f].subject_id);
    }
    for (int s : seen) REQUIRE(s == 1);
  }
}

TEST_CASE("loso on 12 x 35") {
  std::vector<TrialRecord> records;
  for (int s = 0; s < 12; ++s) {
    for (int k = 0; k < 35; ++k) {
      TrialRecord t;
      t.subject_id = "S" + std::string(s < 10 ? "0" : "") + std::to_string(s);
      t.trial_id = t.subject_id + "-" + std::to_string(k);
      records.push_back(t);
    }
  }
  const auto folds = loso_split(records);
  REQUIRE(folds.size() == 12);
  for (const auto& f : folds) {
    CHECK(f.train.size() == 385);
    CHECK(f.test.size() == 35);
  }
  records.resize(35);
  CHECK(error_of([&] { loso_split(records); }) == ErrorCode::invalid_argument);
}

TEST_CASE("synthetic dataset size and manifest round trip") {
  const auto dir = testing::scratch("synth_full");
  SynthConfig c;
  c.modalities = {"ppg"};
  const auto ds = synth_dataset(c, dir);
  CHECK(ds.trials.size() == 420);
  CHECK(ds.incidents.size() == 120);
  CHECK(ds.subjects.size() == 12);
  for (const auto& f : loso_split(ds.trials)) CHECK(f.train.size() == 385);
  int high = 0;
  for (const auto& r : ds.trials) high += task_label(r, Task::attention);
  CHECK(high == 12 * 15);

  const auto back = Dataset::load(dir / "manifest.json");
  CHECK(back.to_json() == ds.to_json());
  CHECK(back.find(ds.trials[7].trial_id)->files.ppg == ds.trials[7].files.ppg);
  CHECK(back.find("nope") == nullptr);
}

TEST_CASE("synthesis is byte-for-byte deterministic") {
  const auto a = testing::scratch("synth_a"), b = testing::scratch("synth_b");
  const auto ds = synth_dataset(small_config(1.0, {"eeg", "ppg", "gsr", "face"}), a);
  synth_dataset(small_config(1.0, {"eeg", "ppg", "gsr", "face"}), b);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    REQUIRE(fs::exists(b / rel));
    CHECK(slurp(e.path()) == slurp(b / rel));
    ++files;
  }
  CHECK(files > 50);
}

TEST_CASE("class 1 departs from class 0 only through effect-scaled terms") {
  const auto zero = testing::scratch("synth_effect0"), one = testing::scratch("synth_effect1");
  const auto d0 = synth_dataset(small_config(0.0, {"eeg", "gsr", "face"}), zero);
  const auto d1 = synth_dataset(small_config(1.0, {"eeg", "gsr", "face"}), one);
  int differing = 0;
  for (Task task : {Task::attention, Task::incident}) {
    for (std::size_t i = 0; i < d0.records(task).size(); ++i) {
      const auto& r = d0.records(task)[i];
      REQUIRE(task_label(r, task) == task_label(d1.records(task)[i], task));
      for (const auto& path : {r.files.eeg, r.files.gsr, r.files.landmarks}) {
        if (path.empty()) continue;
        const bool same = slurp(zero / path) == slurp(one / path);
        if (task_label(r, task) == 0) CHECK(same);
        differing += !same;
      }
    }
  }
  CHECK(differing > 0);
}

TEST_CASE("manifest validation") {
  const auto dir = testing::scratch("manifests");
  Dataset ds;
  ds.root = dir;
  ds.subjects = {"S1", "S2"};
  TrialRecord t;
  t.trial_id = "a";
  t.subject_id = "S1";
  t.attention = AttentionLabel::low;
  t.duration_s = 12;
  ds.trials = {t};
  CHECK_NOTHROW(ds.validate());

  auto dup = ds;
  dup.trials.push_back(t);
  CHECK(error_of([&] { dup.validate(); }) == ErrorCode::parse);
  auto orphan = ds;
  orphan.trials[0].subject_id = "S9";
  CHECK(error_of([&] { orphan.validate(); }) == ErrorCode::parse);
  auto clip = ds;
  TrialRecord inc = t;
  inc.trial_id = "b";
  inc.attention = AttentionLabel::none;
  inc.incident = IncidentLabel::hazardous;
  inc.duration_s = 3;
  clip.incidents = {inc};
  CHECK(error_of([&] { clip.validate(); }) == ErrorCode::parse);

  write_text_file(dir / "broken.json", "{\"format\":\"something\"}");
  CHECK(error_of([&] { Dataset::load(dir / "broken.json"); }) == ErrorCode::parse);
  CHECK(error_of([&] { Dataset::load(dir / "absent.json"); }).has_value());
  CHECK(error_of([] { parse_task("sleep"); }) == ErrorCode::config);
}

TEST_CASE("fitted fold parameters ignore the held-out subject") {
  const auto dir = testing::scratch("leakage");
  auto ds = synth_dataset(small_config(1.0, {"eeg"}), dir);
  ExperimentConfig cfg;
  cfg.pca_dim = 3;
  const ProjectionEmbedder emb(42);
  const auto& records = ds.trials;
  const auto folds = loso_split(records);
  const auto& fold = folds[0];
  const ExperimentCase eeg{"eeg", {"eeg"}};

  auto fit = [&] {
    const auto table = collect_features(ds, records, {"eeg"}, emb, cfg);
    std::vector<int> y;
    for (auto i : fold.train) y.push_back(task_label(records[i], Task::attention));
    return std::make_pair(ElmFoldModel::fit(case_matrix(table, eeg, fold.train), y, cfg, fold_seed(cfg.seed, 0)).to_json(),
                          case_matrix(table, eeg, fold.test));
  };
  const auto [before, test_before] = fit();

  // overwrite every held-out recording with unrelated noise
  oracle::Gen g(77);
  for (auto i : fold.test) {
    const auto path = ds.resolve(records[i].files.eeg);
    const auto old = read_signal_csv(path);
    std::vector<Channel> channels;
    for (std::size_t c = 0; c < old.channel_count(); ++c) channels.push_back({old.channel(c).label, g.normals(old.length())});
    write_signal_csv(path, SampledSeries(old.sampling_rate_hz(), channels), 6);
  }
  const auto [after, test_after] = fit();
  CHECK(after == before);
  CHECK(test_after != test_before);
}

TEST_CASE("parallel_for") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += static_cast<int>(i); });
  for (std::size_t i = 0; i < hits.size(); ++i) REQUIRE(hits[i] == static_cast<int>(i));

  std::atomic<int> calls{0};
  const auto err = error_of([&] {
    parallel_for(
        50,
        [&](std::size_t i) {
          ++calls;
          if (i == 7 || i == 30) fail(i == 7 ? ErrorCode::too_short : ErrorCode::io, "boom");
        },
        4);
  });
  CHECK(err == ErrorCode::too_short);
  CHECK(calls.load() >= 8);
  parallel_for(0, [](std::size_t) { FAIL("called"); });
  CHECK(worker_count() >= 1);
}

TEST_CASE("experiment config parsing") {
  const auto cases = parse_cases("eeg,face,eeg+face");
  REQUIRE(cases.size() == 3);
  CHECK(cases[2].name == "eeg+face");
  CHECK(cases[2].modalities == std::vector<std::string>{"eeg", "face"});
  CHECK(error_of([] { parse_cases("eeg,,face"); }) == ErrorCode::config);
  CHECK(error_of([] { parse_cases("eeg+eeg"); }) == ErrorCode::config);

  const auto cfg = ExperimentConfig::from_json(R"({"task":"incident","classifier":"lstm","pca_dim":12})");
  CHECK(cfg.task == Task::incident);
  CHECK(cfg.pca_dim == 12);
  CHECK(ExperimentConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
  CHECK(error_of([] { ExperimentConfig::from_json(R"({"classifier":"svm"})").validate(); }) == ErrorCode::config);
  ExperimentConfig lstm_attention;
  lstm_attention.classifier = "lstm";
  CHECK(error_of([&] { lstm_attention.validate(); }) == ErrorCode::config);
  CHECK(error_of([] { ExperimentConfig::from_json("[]"); }) == ErrorCode::config);
}

}  // TEST_SUITE
