#include "neurodrive/trend.hpp"

#include <cmath>

#include "json.hpp"

#include "neurodrive/error.hpp"

namespace neurodrive {
namespace {

std::size_t welch_window_samples(double rate) {
  return static_cast<std::size_t>(std::lround(WelchParams{}.window_s * rate));
}

void append_row(Eigen::MatrixXd& m, Eigen::Index row, const std::vector<double>& v, Eigen::Index offset = 0) {
  for (std::size_t i = 0; i < v.size(); ++i) m(row, offset + static_cast<Eigen::Index>(i)) = v[i];
}

}  // namespace

std::size_t interval_count(double duration_s, double interval_s) {
  if (!(interval_s > 0.0)) fail(ErrorCode::invalid_argument, "interval must be positive");
  const auto n = static_cast<std::size_t>(std::floor(duration_s / interval_s + 1e-9));
  if (n == 0) fail(ErrorCode::too_short, "recording is shorter than one interval");
  return n;
}

std::vector<EegTrial> interval_slices(const EegTrial& trial, double interval_s) {
  const double rate = trial.sampling_rate_hz();
  const auto n = interval_count(static_cast<double>(trial.length()) / rate, interval_s);
  std::vector<EegTrial> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto begin = static_cast<std::size_t>(std::llround(static_cast<double>(k) * interval_s * rate));
    const auto end = std::min<std::size_t>(
        trial.length(), static_cast<std::size_t>(std::llround(static_cast<double>(k + 1) * interval_s * rate)));
    if (end <= begin) fail(ErrorCode::too_short, "interval " + std::to_string(k) + " holds no samples");
    out.push_back(trial.slice(begin, end - begin));
  }
  return out;
}

std::vector<double> eeg_slice_features(const EegTrial& slice, const EmbeddingBackend& embedder, int bins) {
  const auto method =
      slice.length() >= welch_window_samples(slice.sampling_rate_hz()) ? PsdMethod::welch : PsdMethod::periodogram;
  const auto maps = band_power_maps(slice, method);
  const auto topo = render_topo_image(maps.theta, maps.alpha, maps.beta, ElectrodeLayout::standard());
  auto out = embed(embedder, topo.image);
  const auto entropy = pairwise_entropy_features(slice, bins);
  out.insert(out.end(), entropy.begin(), entropy.end());
  return out;
}

Eigen::MatrixXd eeg_trend_features(const EegTrial& trial, const EmbeddingBackend& embedder, double interval_s,
                                   int bins) {
  const auto slices = interval_slices(trial, interval_s);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(slices.size()),
                    static_cast<Eigen::Index>(kEmbeddingDim + kEntropyFeatureCount));
  for (std::size_t k = 0; k < slices.size(); ++k) {
    try {
      append_row(m, static_cast<Eigen::Index>(k), eeg_slice_features(slices[k], embedder, bins));
    } catch (const Error& e) {
      throw Error(e.code(), "slice " + std::to_string(k) + ": " + e.what());
    }
  }
  return m;
}

Eigen::MatrixXd face_trend_features(const FaceTrial& trial, const EmbeddingBackend& embedder, double duration_s,
                                    double interval_s) {
  trial.validate();
  if (!(trial.fps > 0.0)) fail(ErrorCode::invalid_argument, "face trend features need the frame rate");
  if (trial.face_images.empty()) fail(ErrorCode::not_found, "face trend features need face crops");
  const auto n = interval_count(duration_s, interval_s);
  const auto width = static_cast<Eigen::Index>(kFaceGeometricTrialCount + kEmbeddingDim);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), width);

  std::vector<std::vector<double>> geometric(trial.frames.size());
  std::vector<std::vector<double>> deep(trial.frames.size());
  auto frame_time = [&](std::size_t i) { return trial.frames[i].frame_index / trial.fps; };

  for (std::size_t k = 0; k < n; ++k) {
    const double t0 = static_cast<double>(k) * interval_s;
    const double t1 = static_cast<double>(k + 1) * interval_s;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < trial.frames.size(); ++i) {
      const double t = frame_time(i);
      if (t >= t0 - 1e-9 && t < t1 - 1e-9) members.push_back(i);
    }
    if (members.empty()) {
      std::size_t latest = 0;
      for (std::size_t i = 0; i < trial.frames.size(); ++i) {
        if (frame_time(i) < t1 - 1e-9) latest = i;
      }
      members.push_back(latest);
    }
    Eigen::MatrixXd geo(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(kGeometricFeatureCount));
    Eigen::VectorXd mean_deep = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kEmbeddingDim));
    for (std::size_t r = 0; r < members.size(); ++r) {
      const auto i = members[r];
      if (geometric[i].empty()) geometric[i] = geometric_features(trial.frames[i]);
      if (deep[i].empty()) deep[i] = embed_face(embedder, trial.face_images[i]);
      append_row(geo, static_cast<Eigen::Index>(r), geometric[i]);
      mean_deep += Eigen::Map<const Eigen::VectorXd>(deep[i].data(), static_cast<Eigen::Index>(kEmbeddingDim));
    }
    mean_deep /= static_cast<double>(members.size());
    append_row(m, static_cast<Eigen::Index>(k), aggregate_trial(geo));
    m.row(static_cast<Eigen::Index>(k)).tail(static_cast<Eigen::Index>(kEmbeddingDim)) = mean_deep.transpose();
  }
  return m;
}

TrendSequence trend_sequence(const std::string& trial_id, const Eigen::MatrixXd& slice_features,
                             const ReductionChain& reduction, double interval_s) {
  if (reduction.pca.dim() != kTrendWidth) {
    fail(ErrorCode::dimension_mismatch, "trend reduction must produce 60 features, got " +
                                            std::to_string(reduction.pca.dim()));
  }
  return {trial_id, interval_s, reduction.apply(slice_features)};
}

TrendSequence trend_sequence(const std::string& trial_id, const EegTrial& trial, const EmbeddingBackend& embedder,
                             const ReductionChain& reduction, double interval_s) {
  return trend_sequence(trial_id, eeg_trend_features(trial, embedder, interval_s), reduction, interval_s);
}

std::string TrendSequence::to_json() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) flat.push_back(values(r, c));
  }
  return nlohmann::json{{"format", "neurodrive.trend_sequence"},
                        {"version", 1},
                        {"trial_id", trial_id},
                        {"interval_s", interval_s},
                        {"steps", values.rows()},
                        {"width", values.cols()},
                        {"values", flat}}
      .dump();
}

TrendSequence TrendSequence::from_json(std::string_view text) {
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || doc.value("format", "") != "neurodrive.trend_sequence" || doc.value("version", 0) != 1) {
    fail(ErrorCode::parse, "expected neurodrive.trend_sequence version 1");
  }
  try {
    TrendSequence s;
    s.trial_id = doc.at("trial_id").get<std::string>();
    s.interval_s = doc.at("interval_s").get<double>();
    const auto steps = doc.at("steps").get<Eigen::Index>();
    const auto width = doc.at("width").get<Eigen::Index>();
    const auto flat = doc.at("values").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != steps * width) fail(ErrorCode::parse, "trend sequence size mismatch");
    s.values.resize(steps, width);
    for (Eigen::Index r = 0; r < steps; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) s.values(r, c) = flat[static_cast<std::size_t>(r * width + c)];
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("trend sequence: ") + e.what());
  }
}

}  // namespace neurodrive
