#include "neurodrive/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

#include "neurodrive/error.hpp"
#include "neurodrive/features.hpp"
#include "neurodrive/parallel.hpp"
#include "neurodrive/rng.hpp"
#include "neurodrive/signal_io.hpp"
#include "neurodrive/trend.hpp"

namespace neurodrive {
namespace {

using nlohmann::json;

json ttest_json(const TTestResult& t) {
  // JSON has no infinity; a degenerate infinite t is written as null.
  json j{{"p", t.p}, {"df", t.df}, {"degenerate", t.degenerate}};
  j["t"] = std::isfinite(t.t) ? json(t.t) : json(nullptr);
  return j;
}

json mean_std_json(const MeanStd& m, bool percent) {
  return {{"mean", m.mean}, {"std", m.std}, {"text", format_mean_std(m, percent)}};
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  // count UTF-8 code points so the ± sign does not skew columns
  std::size_t len = 0;
  for (unsigned char ch : s) len += (ch & 0xC0) != 0x80;
  if (len < width) s.append(width - len, ' ');
  return s;
}

}  // namespace

std::vector<ExperimentCase> parse_cases(std::string_view list) {
  std::vector<ExperimentCase> cases;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
    if (item.empty()) fail(ErrorCode::config, "empty entry in modality list '" + std::string(list) + "'");
    ExperimentCase c{std::string(item), {}};
    std::size_t s = 0;
    while (s <= item.size()) {
      const auto plus = item.find('+', s);
      const auto m = item.substr(s, plus == std::string_view::npos ? item.npos : plus - s);
      require_modality(m);
      if (std::find(c.modalities.begin(), c.modalities.end(), m) != c.modalities.end()) {
        fail(ErrorCode::config, "modality " + std::string(m) + " repeated in case " + c.name);
      }
      c.modalities.emplace_back(m);
      if (plus == std::string_view::npos) break;
      s = plus + 1;
    }
    cases.push_back(std::move(c));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cases;
}

void ExperimentConfig::validate() const {
  if (cases.empty()) fail(ErrorCode::config, "no modality cases to evaluate");
  std::set<std::string> names;
  for (const auto& c : cases) {
    if (c.modalities.empty()) fail(ErrorCode::config, "case " + c.name + " has no modalities");
    for (const auto& m : c.modalities) require_modality(m);
    if (!names.insert(c.name).second) fail(ErrorCode::config, "duplicate case " + c.name);
  }
  if (classifier != "elm" && classifier != "lstm") fail(ErrorCode::config, "unknown classifier '" + classifier + "'");
  if (classifier == "lstm" && task == Task::attention) {
    fail(ErrorCode::config, "the lstm classifier needs fixed-length sequences; attention trials vary in duration");
  }
  if (classifier == "lstm") {
    for (const auto& c : cases) {
      for (const auto& m : c.modalities) {
        if (m != "eeg" && m != "face") fail(ErrorCode::config, "trend sequences exist only for eeg and face");
      }
    }
  }
  if (pca_dim < 1) fail(ErrorCode::config, "pca dimension must be positive");
  if (elm_hidden < 1) fail(ErrorCode::config, "elm hidden units must be positive");
  if (!(interval_s > 0.0)) fail(ErrorCode::config, "trend interval must be positive");
  if (bins < 2) fail(ErrorCode::config, "entropy bins must be at least 2");
  if (pca_fit_scope != "train" && pca_fit_scope != "all") fail(ErrorCode::config, "pca_fit_scope must be train or all");
  if (lstm.epochs < 0 || lstm.widths.empty()) fail(ErrorCode::config, "invalid lstm settings");
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  const auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::config, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (doc.contains("task")) c.task = parse_task(doc.at("task").get<std::string>());
    if (doc.contains("modalities")) {
      const auto& m = doc.at("modalities");
      if (m.is_string()) {
        c.cases = parse_cases(m.get<std::string>());
      } else {
        std::string joined;
        for (const auto& item : m) joined += (joined.empty() ? "" : ",") + item.get<std::string>();
        c.cases = parse_cases(joined);
      }
    }
    c.classifier = doc.value("classifier", c.classifier);
    c.pca_dim = doc.value("pca_dim", c.pca_dim);
    c.elm_hidden = doc.value("elm_hidden", c.elm_hidden);
    c.interval_s = doc.value("interval_s", c.interval_s);
    c.bins = doc.value("bins", c.bins);
    c.seed = doc.value("seed", c.seed);
    c.pca_fit_scope = doc.value("pca_fit_scope", c.pca_fit_scope);
    c.threads = doc.value("threads", c.threads);
    if (doc.contains("features_dir")) c.features_dir = doc.at("features_dir").get<std::string>();
    if (doc.contains("embedding")) c.embedding = EmbeddingConfig::from_json(doc.at("embedding").dump());
    if (doc.contains("lstm")) {
      const auto& l = doc.at("lstm");
      c.lstm.widths = l.value("widths", c.lstm.widths);
      c.lstm.learning_rate = l.value("learning_rate", c.lstm.learning_rate);
      c.lstm.momentum = l.value("momentum", c.lstm.momentum);
      c.lstm.epochs = l.value("epochs", c.lstm.epochs);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("experiment config: ") + e.what());
  }
  return c;
}

std::string ExperimentConfig::to_json() const {
  std::string cases_text;
  for (const auto& c : cases) cases_text += (cases_text.empty() ? "" : ",") + c.name;
  json j{{"task", to_string(task)},
         {"modalities", cases_text},
         {"classifier", classifier},
         {"pca_dim", pca_dim},
         {"elm_hidden", elm_hidden},
         {"interval_s", interval_s},
         {"bins", bins},
         {"seed", seed},
         {"pca_fit_scope", pca_fit_scope},
         {"embedding", json::parse(embedding.to_json())},
         {"lstm",
          {{"widths", lstm.widths},
           {"learning_rate", lstm.learning_rate},
           {"momentum", lstm.momentum},
           {"epochs", lstm.epochs}}}};
  return j.dump();
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold_index) { return Rng::mix(seed, fold_index); }

FeatureTable collect_features(const Dataset& ds, const std::vector<TrialRecord>& records,
                              const std::vector<std::string>& modalities, const EmbeddingBackend& embedder,
                              const ExperimentConfig& config) {
  FeatureTable table;
  const bool trend = config.classifier == "lstm";
  for (const auto& m : modalities) {
    if (trend) {
      table.trends[m].resize(records.size());
    } else {
      table.vectors[m].resize(records.size());
    }
  }
  const std::size_t jobs = records.size() * modalities.size();
  parallel_for(
      jobs,
      [&](std::size_t j) {
        const auto& record = records[j / modalities.size()];
        const auto& m = modalities[j % modalities.size()];
        const auto row = j / modalities.size();
        try {
          if (trend) {
            table.trends.at(m)[row] = trend_features(ds, record, m, embedder, config.interval_s, config.bins);
            return;
          }
          if (!config.features_dir.empty()) {
            const auto cached = config.features_dir / m / (record.trial_id + ".json");
            if (std::filesystem::exists(cached)) {
              auto f = TrialFeatures::from_json(read_text_file(cached));
              if (f.trial_id != record.trial_id || f.modality != m) {
                fail(ErrorCode::parse, cached.string() + " belongs to another trial or modality");
              }
              table.vectors.at(m)[row] = f.flatten();
              return;
            }
          }
          ExtractOptions opts;
          opts.bins = config.bins;
          table.vectors.at(m)[row] = extract_trial(ds, record, m, embedder, opts).features.flatten();
        } catch (const Error& e) {
          throw Error(e.code(), record.trial_id + " (" + m + "): " + e.what());
        }
      },
      config.threads);
  for (const auto& [m, rows] : table.vectors) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != modality_width(m)) {
        fail(ErrorCode::dimension_mismatch, records[i].trial_id + ": " + m + " features have " +
                                                std::to_string(rows[i].size()) + " values");
      }
    }
  }
  return table;
}

Eigen::MatrixXd case_matrix(const FeatureTable& table, const ExperimentCase& c, const std::vector<std::size_t>& rows) {
  Eigen::Index width = 0;
  for (const auto& m : c.modalities) width += static_cast<Eigen::Index>(table.vectors.at(m).front().size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index col = 0;
    for (const auto& m : c.modalities) {
      const auto& v = table.vectors.at(m)[rows[r]];
      x.row(static_cast<Eigen::Index>(r)).segment(col, static_cast<Eigen::Index>(v.size())) =
          Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      col += static_cast<Eigen::Index>(v.size());
    }
  }
  return x;
}

namespace {

// Slices of the chosen trials stacked row-wise, modalities side by side.
Eigen::MatrixXd trend_rows(const FeatureTable& table, const ExperimentCase& c, const std::vector<std::size_t>& rows,
                           Eigen::Index& steps) {
  steps = table.trends.at(c.modalities.front())[rows.front()].rows();
  Eigen::Index width = 0;
  for (const auto& m : c.modalities) width += table.trends.at(m)[rows.front()].cols();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()) * steps, width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index col = 0;
    for (const auto& m : c.modalities) {
      const auto& t = table.trends.at(m)[rows[r]];
      if (t.rows() != steps) {
        fail(ErrorCode::dimension_mismatch, "trend sequences differ in length (" + std::to_string(t.rows()) + " vs " +
                                                std::to_string(steps) + " intervals)");
      }
      x.block(static_cast<Eigen::Index>(r) * steps, col, steps, t.cols()) = t;
      col += t.cols();
    }
  }
  return x;
}

std::vector<Sequence> split_sequences(const Eigen::MatrixXd& reduced, Eigen::Index steps) {
  std::vector<Sequence> out;
  for (Eigen::Index r = 0; r < reduced.rows(); r += steps) out.push_back(reduced.middleRows(r, steps));
  return out;
}

int checked_dim(int wanted, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (wanted > std::min<Eigen::Index>(rows - 1, cols)) {
    fail(ErrorCode::config, std::string(what) + " dimension " + std::to_string(wanted) + " needs more than " +
                                std::to_string(rows) + " training rows of width " + std::to_string(cols));
  }
  return wanted;
}

}  // namespace

ElmFoldModel ElmFoldModel::fit(const Eigen::MatrixXd& x_train, const std::vector<int>& y_train,
                               const ExperimentConfig& config, std::uint64_t seed) {
  ElmFoldModel m;
  m.reduction = ReductionChain::fit(x_train, checked_dim(config.pca_dim, x_train.rows(), x_train.cols(), "PCA"));
  m.elm = ElmModel::train(m.reduction.apply(x_train), y_train, config.elm_hidden, seed);
  return m;
}

std::string ElmFoldModel::to_json() const {
  return json{{"reduction", json::parse(reduction.to_json())}, {"elm", json::parse(elm.to_json())}}.dump();
}

ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& config) {
  config.validate();
  const auto& records = ds.records(config.task);
  if (records.empty()) fail(ErrorCode::config, "dataset has no trials for the " + std::string(to_string(config.task)) + " task");
  if (config.classifier == "lstm") {
    for (const auto& r : records) {
      if (std::abs(r.duration_s - records.front().duration_s) > 1e-9) {
        fail(ErrorCode::config, "the lstm classifier needs trials of equal duration");
      }
    }
  }
  std::vector<int> labels;
  for (const auto& r : records) labels.push_back(task_label(r, config.task));
  const auto folds = loso_split(records);

  const auto embedder = load_backend(config.embedding);
  std::vector<std::string> modalities;
  for (const auto& c : config.cases) {
    for (const auto& m : c.modalities) {
      if (std::find(modalities.begin(), modalities.end(), m) == modalities.end()) modalities.push_back(m);
    }
  }
  const auto table = collect_features(ds, records, modalities, *embedder, config);

  ExperimentReport report;
  report.config = config;
  report.trial_count = records.size();
  report.embedder = embedder->describe();
  report.cases.resize(config.cases.size());
  for (std::size_t c = 0; c < config.cases.size(); ++c) {
    report.cases[c].spec = config.cases[c];
    report.cases[c].folds.resize(folds.size());
  }

  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  parallel_for(
      config.cases.size() * folds.size(),
      [&](std::size_t job) {
        const auto ci = job / folds.size();
        const auto fi = job % folds.size();
        const auto& spec = config.cases[ci];
        const auto& fold = folds[fi];
        const auto seed = fold_seed(config.seed, fi);
        const auto& fit_rows = config.pca_fit_scope == "all" ? all : fold.train;
        std::vector<int> y_train;
        for (auto i : fold.train) y_train.push_back(labels[i]);

        FoldResult out;
        out.subject_id = fold.subject_id;
        if (config.classifier == "elm") {
          const Eigen::MatrixXd x_fit = case_matrix(table, spec, fit_rows);
          ElmFoldModel model;
          model.reduction = ReductionChain::fit(x_fit, checked_dim(config.pca_dim, x_fit.rows(), x_fit.cols(), "PCA"));
          model.elm = ElmModel::train(model.reduction.apply(case_matrix(table, spec, fold.train)), y_train,
                                      config.elm_hidden, seed);
          const Eigen::VectorXd s = model.scores(case_matrix(table, spec, fold.test));
          out.scores.assign(s.data(), s.data() + s.size());
          for (double v : out.scores) out.predictions.push_back(v > 0.0 ? 1 : 0);
        } else {
          Eigen::Index steps = 0;
          const Eigen::MatrixXd fit_slices = trend_rows(table, spec, fit_rows, steps);
          const auto reduction =
              ReductionChain::fit(fit_slices, checked_dim(kTrendWidth, fit_slices.rows(), fit_slices.cols(), "trend PCA"));
          const auto train_seq = split_sequences(reduction.apply(trend_rows(table, spec, fold.train, steps)), steps);
          auto lstm_config = config.lstm;
          lstm_config.seed = seed;
          const auto model = LstmModel::train(train_seq, y_train, lstm_config);
          for (const auto& seq : split_sequences(reduction.apply(trend_rows(table, spec, fold.test, steps)), steps)) {
            const auto p = model.probabilities(seq);
            out.scores.push_back(p(1));
            out.predictions.push_back(p(1) > p(0) ? 1 : 0);
          }
        }
        for (auto i : fold.test) {
          out.trial_ids.push_back(records[i].trial_id);
          out.labels.push_back(labels[i]);
        }
        out.accuracy = accuracy(out.labels, out.predictions);
        const bool both = std::count(out.labels.begin(), out.labels.end(), 1) > 0 &&
                          std::count(out.labels.begin(), out.labels.end(), 0) > 0;
        if (both) out.auc = auc(out.labels, out.scores);
        report.cases[ci].folds[fi] = std::move(out);
      },
      config.threads);

  std::vector<std::vector<double>> fold_accuracy(config.cases.size());
  for (std::size_t c = 0; c < report.cases.size(); ++c) {
    auto& cr = report.cases[c];
    std::vector<double> aucs;
    for (const auto& f : cr.folds) {
      fold_accuracy[c].push_back(f.accuracy);
      if (f.auc) aucs.push_back(*f.auc);
    }
    cr.accuracy = mean_std(fold_accuracy[c]);
    if (!aucs.empty()) cr.auc = mean_std(aucs);
    if (folds.size() >= 2) {
      const std::vector<double> chance(folds.size(), 0.5);
      cr.vs_chance = paired_ttest(fold_accuracy[c], chance);
    }
  }
  if (folds.size() >= 2) {
    for (std::size_t a = 0; a < report.cases.size(); ++a) {
      for (std::size_t b = a + 1; b < report.cases.size(); ++b) {
        report.pairwise.push_back(
            {report.cases[a].spec.name, report.cases[b].spec.name, paired_ttest(fold_accuracy[a], fold_accuracy[b])});
      }
    }
    if (report.cases.size() >= 2) report.anova = anova_f(fold_accuracy);
  }
  return report;
}

std::string ExperimentReport::to_json() const {
  json cases_j = json::array();
  for (const auto& c : cases) {
    json folds_j = json::array();
    for (const auto& f : c.folds) {
      folds_j.push_back({{"subject", f.subject_id},
                         {"trials", f.trial_ids},
                         {"labels", f.labels},
                         {"scores", f.scores},
                         {"predictions", f.predictions},
                         {"accuracy", f.accuracy},
                         {"auc", f.auc ? json(*f.auc) : json(nullptr)}});
    }
    cases_j.push_back({{"name", c.spec.name},
                       {"modalities", c.spec.modalities},
                       {"folds", folds_j},
                       {"accuracy", mean_std_json(c.accuracy, true)},
                       {"auc", c.auc ? mean_std_json(*c.auc, false) : json(nullptr)},
                       {"ttest_vs_chance", c.vs_chance ? ttest_json(*c.vs_chance) : json(nullptr)}});
  }
  json pairwise_j = json::array();
  for (const auto& p : pairwise) pairwise_j.push_back({{"a", p.a}, {"b", p.b}, {"ttest", ttest_json(p.test)}});
  json anova_j = nullptr;
  if (anova) {
    anova_j = {{"f", std::isfinite(anova->f) ? json(anova->f) : json(nullptr)},
               {"p", anova->p},
               {"df_between", anova->df_between},
               {"df_within", anova->df_within},
               {"degenerate", anova->degenerate}};
  }
  return json{{"format", "neurodrive.report"},
              {"version", 1},
              {"tool_version", NEURODRIVE_VERSION},
              {"seed", config.seed},
              {"config", json::parse(config.to_json())},
              {"embedder", json::parse(embedder)},
              {"trials", trial_count},
              {"cases", cases_j},
              {"pairwise_ttests", pairwise_j},
              {"anova", anova_j}}
             .dump(1) +
         "\n";
}

std::string ExperimentReport::table() const {
  std::ostringstream out;
  out << "task " << to_string(config.task) << ", classifier " << config.classifier << ", " << trial_count
      << " trials, " << (cases.empty() ? 0 : cases.front().folds.size()) << " folds, seed " << config.seed << "\n\n";
  out << pad("case", 16) << pad("accuracy", 20) << pad("auc", 18) << "p vs chance\n";
  for (const auto& c : cases) {
    out << pad(c.spec.name, 16) << pad(format_mean_std(c.accuracy, true), 20)
        << pad(c.auc ? format_mean_std(*c.auc, false) : "n/a", 18)
        << (c.vs_chance ? fixed(c.vs_chance->p, 4) : std::string("n/a")) << "\n";
  }
  if (!pairwise.empty()) {
    out << "\npaired t-tests on fold accuracy\n";
    for (const auto& p : pairwise) {
      out << "  " << pad(p.a + " vs " + p.b, 28) << "t = "
          << (std::isfinite(p.test.t) ? fixed(p.test.t, 3) : std::string("inf")) << ", p = " << fixed(p.test.p, 4)
          << "\n";
    }
  }
  if (anova) {
    out << "\nANOVA across cases: F(" << anova->df_between << ", " << anova->df_within << ") = "
        << (std::isfinite(anova->f) ? fixed(anova->f, 3) : std::string("inf")) << ", p = " << fixed(anova->p, 4)
        << "\n";
  }
  return out.str();
}

}  // namespace neurodrive
