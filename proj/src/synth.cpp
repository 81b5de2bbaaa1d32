#include "neurodrive/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "json.hpp"

#include "neurodrive/eeg.hpp"
#include "neurodrive/error.hpp"
#include "neurodrive/face.hpp"
#include "neurodrive/image.hpp"
#include "neurodrive/parallel.hpp"
#include "neurodrive/rng.hpp"
#include "neurodrive/signal_io.hpp"

namespace neurodrive {
namespace {

namespace fs = std::filesystem;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kFaceSide = 64;
constexpr int kSignalDigits = 7;
constexpr std::size_t kFrontalChannels = 6;  // AF3 AF4 F3 F4 F7 F8

struct SubjectProfile {
  std::string id;
  double eeg_gain = 1.0;
  double heart_rate_bpm = 70.0;
  double scl = 2.0;
  double face_scale = 1.0;
  std::array<Point2, kLandmarkCount> shape{};  // neutral template with a per-subject perturbation
};

struct Job {
  std::size_t subject = 0;
  bool incident = false;
  int index = 0;
  int label = 0;
  double duration_s = 0.0;
};

std::string two_digit(int v, int width) {
  std::string s = std::to_string(v);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

// Neutral face in box-relative units; indices follow the face feature table.
std::array<Point2, kLandmarkCount> neutral_template() {
  std::array<Point2, kLandmarkCount> p{};
  for (int k = 0; k < 5; ++k) {
    const double arch = 0.03 * std::sin(std::numbers::pi * k / 4.0);
    p[static_cast<std::size_t>(k)] = {0.18 + 0.06 * k, 0.30 - arch};
    p[static_cast<std::size_t>(5 + k)] = {0.58 + 0.06 * k, 0.30 - arch};
  }
  for (int k = 0; k < 4; ++k) p[static_cast<std::size_t>(10 + k)] = {0.5, 0.38 + 0.0567 * k};
  for (int k = 0; k < 5; ++k) p[static_cast<std::size_t>(14 + k)] = {0.42 + 0.04 * k, 0.60 + 0.02 * (k == 2)};
  const std::array<Point2, 6> right_eye = {{{0.24, 0.42}, {0.29, 0.40}, {0.35, 0.40}, {0.40, 0.42}, {0.35, 0.44}, {0.29, 0.44}}};
  const std::array<Point2, 6> left_eye = {{{0.60, 0.42}, {0.65, 0.40}, {0.71, 0.40}, {0.76, 0.42}, {0.71, 0.44}, {0.65, 0.44}}};
  for (std::size_t k = 0; k < 6; ++k) {
    p[19 + k] = right_eye[k];
    p[25 + k] = left_eye[k];
  }
  for (int k = 0; k < 12; ++k) {
    const double a = std::numbers::pi + k * std::numbers::pi / 6.0;
    p[static_cast<std::size_t>(31 + k)] = {0.5 + 0.14 * std::cos(a), 0.78 + 0.06 * std::sin(a)};
  }
  for (int k = 0; k < 6; ++k) {
    const double a = std::numbers::pi + k * std::numbers::pi / 3.0;
    p[static_cast<std::size_t>(43 + k)] = {0.5 + 0.08 * std::cos(a), 0.78 + 0.02 * std::sin(a)};
  }
  return p;
}

// Refined pink noise filter bank driven by unit white noise.
std::vector<double> pink_noise(Rng& rng, std::size_t n) {
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  std::vector<double> out(n);
  constexpr std::size_t burn_in = 1024;
  for (std::size_t i = 0; i < n + burn_in; ++i) {
    const double w = rng.normal();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    const double pink = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
    if (i >= burn_in) out[i - burn_in] = 0.11 * pink;
  }
  return out;
}

SampledSeries make_eeg(Rng& rng, const SubjectProfile& subject, int label, double effect, double duration_s,
                       double rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<Channel> channels;
  for (std::size_t c = 0; c < kEegChannels; ++c) {
    auto x = pink_noise(rng, n);
    const double phase = rng.uniform(0.0, kTwoPi);
    if (c < kFrontalChannels) {
      const double amp = effect * label;
      for (std::size_t i = 0; i < n; ++i) x[i] += amp * std::sin(kTwoPi * 20.0 * static_cast<double>(i) / rate + phase);
    }
    for (auto& v : x) v *= subject.eeg_gain;
    channels.push_back({std::string(kCanonicalChannels[c]), std::move(x)});
  }
  return SampledSeries(rate, std::move(channels));
}

SampledSeries make_ppg(Rng& rng, const SubjectProfile& subject, int label, double effect, double duration_s,
                       double rate) {
  const auto n = static_cast<std::size_t>(std::floor(duration_s * rate));
  const double rr_mean = 60.0 / subject.heart_rate_bpm;
  const double rr_jitter = 0.015 + 0.04 * effect * label;
  std::vector<double> beats;
  for (double t = rng.uniform(0.1, 0.6); t < duration_s + 1.0;) {
    beats.push_back(t);
    t += std::max(0.3, rr_mean + rr_jitter * rng.normal());
  }
  const double wander_phase = rng.uniform(0.0, kTwoPi);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = 0.1 * std::sin(kTwoPi * 0.2 * t + wander_phase) + 0.02 * rng.normal();
    for (double b : beats) {
      const double d = t - b;
      if (std::abs(d) < 0.5) v += std::exp(-0.5 * d * d / (0.08 * 0.08));
    }
    x[i] = v;
  }
  return SampledSeries::mono(rate, std::move(x), "ppg");
}

SampledSeries make_gsr(Rng& rng, const SubjectProfile& subject, int label, double effect, double duration_s,
                       double rate) {
  const auto n = static_cast<std::size_t>(std::floor(duration_s * rate));
  const int responses = 2 + static_cast<int>(rng.below(2)) + label * static_cast<int>(std::lround(3.0 * effect));
  std::vector<std::pair<double, double>> scr;
  for (int k = 0; k < responses; ++k) {
    const double onset = rng.uniform(0.0, std::max(0.5, duration_s - 1.0));
    scr.emplace_back(onset, 0.2 + 0.3 * rng.uniform());
  }
  const double drift = rng.uniform(-0.02, 0.05);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = subject.scl + drift * t + 0.005 * rng.normal();
    for (const auto& [onset, amp] : scr) {
      const double tau = t - onset;
      if (tau >= 0.0) v += amp * (std::exp(-tau / 4.0) - std::exp(-tau / 0.75));
    }
    x[i] = v;
  }
  return SampledSeries::mono(rate, std::move(x), "gsr");
}

void fill_ellipse(RgbImage& img, double cx, double cy, double rx, double ry, std::array<std::uint8_t, 3> color) {
  rx = std::max(rx, 0.5);
  ry = std::max(ry, 0.5);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[static_cast<std::size_t>(c)];
      }
    }
  }
}

Point2 centroid(const std::array<Point2, kLandmarkCount>& p, std::size_t first, std::size_t count) {
  Point2 c{0.0, 0.0};
  for (std::size_t i = first; i < first + count; ++i) {
    c[0] += p[i][0];
    c[1] += p[i][1];
  }
  return {c[0] / static_cast<double>(count), c[1] / static_cast<double>(count)};
}

// Crop drawn from box-relative landmarks: skin, brows, eyes sized by lid distance, nose, mouth.
RgbImage render_face(const std::array<Point2, kLandmarkCount>& rel) {
  RgbImage img(kFaceSide, kFaceSide, 0);
  const double s = kFaceSide;
  fill_ellipse(img, 0.5 * s, 0.52 * s, 0.46 * s, 0.5 * s, {190, 150, 125});
  for (std::size_t i = 0; i < 10; ++i) fill_ellipse(img, rel[i][0] * s, rel[i][1] * s, 1.6, 1.0, {70, 50, 40});
  for (std::size_t first : {std::size_t{19}, std::size_t{25}}) {
    const auto mid = centroid(rel, first, 6);
    const double half_w = std::abs(rel[first + 3][0] - rel[first][0]) * s / 2.0;
    const double upper = (rel[first + 1][1] + rel[first + 2][1]) / 2.0;
    const double lower = (rel[first + 4][1] + rel[first + 5][1]) / 2.0;
    fill_ellipse(img, mid[0] * s, mid[1] * s, half_w, (lower - upper) * s / 2.0, {245, 245, 245});
    fill_ellipse(img, mid[0] * s, mid[1] * s, 1.5, std::min(1.5, (lower - upper) * s / 2.0), {30, 30, 30});
  }
  for (std::size_t i = 10; i < 19; ++i) fill_ellipse(img, rel[i][0] * s, rel[i][1] * s, 0.9, 0.9, {150, 110, 95});
  const auto mouth = centroid(rel, 31, 12);
  fill_ellipse(img, mouth[0] * s, mouth[1] * s, (rel[37][0] - rel[31][0]) * s / 2.0, (rel[40][1] - rel[34][1]) * s / 2.0,
               {160, 70, 70});
  const auto inner = centroid(rel, 43, 6);
  fill_ellipse(img, inner[0] * s, inner[1] * s, (rel[46][0] - rel[43][0]) * s / 2.0,
               ((rel[47][1] + rel[48][1]) - (rel[44][1] + rel[45][1])) * s / 4.0, {60, 20, 20});
  return img;
}

void make_face(Rng& rng, const SubjectProfile& subject, int label, double effect, double duration_s, double fps,
               std::vector<LandmarkFrame>& frames, std::vector<RgbImage>& crops) {
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(duration_s * fps + 1e-9)));
  const double box_side = 120.0 * subject.face_scale;
  const double box_x = 100.0 + 50.0 * rng.uniform();
  const double box_y = 80.0 + 40.0 * rng.uniform();
  const double lid = 0.012 * effect * label;  // extra eye opening per lid
  for (std::size_t f = 0; f < count; ++f) {
    auto rel = subject.shape;
    const double dx = 0.004 * rng.normal(), dy = 0.004 * rng.normal();
    for (auto& p : rel) {
      p[0] += dx + 0.002 * rng.normal();
      p[1] += dy + 0.002 * rng.normal();
    }
    for (std::size_t i : {20, 21, 26, 27}) rel[i][1] -= lid;
    for (std::size_t i : {23, 24, 29, 30}) rel[i][1] += lid;
    LandmarkFrame frame;
    frame.frame_index = static_cast<int>(f);
    frame.box = {box_x, box_y, box_side, box_side};
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
      frame.points[i] = {box_x + rel[i][0] * box_side, box_y + rel[i][1] * box_side};
    }
    frames.push_back(frame);
    crops.push_back(render_face(rel));
  }
}

}  // namespace

std::string SynthConfig::to_json() const {
  return nlohmann::json{{"tool", "neurodrive synth"},
                        {"n_subjects", n_subjects},
                        {"trials_per_subject", trials_per_subject},
                        {"incidents_per_subject", incidents_per_subject},
                        {"effect_size", effect_size},
                        {"seed", seed},
                        {"modalities", std::vector<std::string>(modalities.begin(), modalities.end())},
                        {"eeg_rate_hz", eeg_rate_hz},
                        {"peripheral_rate_hz", peripheral_rate_hz},
                        {"attention_fps", attention_fps},
                        {"incident_fps", incident_fps}}
      .dump();
}

Dataset synth_dataset(const SynthConfig& config, const fs::path& out_dir) {
  if (config.n_subjects < 2) fail(ErrorCode::config, "leave-one-subject-out needs at least 2 subjects");
  if (config.trials_per_subject < 0 || config.incidents_per_subject < 0) {
    fail(ErrorCode::config, "trial counts must be non-negative");
  }
  if (!(config.effect_size >= 0.0) || !std::isfinite(config.effect_size)) {
    fail(ErrorCode::config, "effect size must be finite and >= 0");
  }
  for (const auto& m : config.modalities) {
    if (m != "eeg" && m != "ppg" && m != "gsr" && m != "face") fail(ErrorCode::config, "unknown modality '" + m + "'");
  }
  const bool want_eeg = config.modalities.count("eeg") > 0;
  const bool want_ppg = config.modalities.count("ppg") > 0;
  const bool want_gsr = config.modalities.count("gsr") > 0;
  const bool want_face = config.modalities.count("face") > 0;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) fail(ErrorCode::io, "cannot create output directory " + out_dir.string());

  const int id_width = config.n_subjects > 99 ? 3 : 2;
  const auto neutral = neutral_template();
  std::vector<SubjectProfile> subjects;
  std::vector<Job> jobs;
  for (int s = 0; s < config.n_subjects; ++s) {
    Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(s)));
    SubjectProfile p;
    p.id = "S" + two_digit(s + 1, id_width);
    p.eeg_gain = rng.uniform(0.8, 1.2);
    p.heart_rate_bpm = rng.uniform(60.0, 80.0);
    p.scl = rng.uniform(1.5, 3.0);
    p.face_scale = rng.uniform(0.9, 1.1);
    p.shape = neutral;
    for (auto& pt : p.shape) {
      pt[0] += 0.006 * rng.normal();
      pt[1] += 0.006 * rng.normal();
    }
    subjects.push_back(p);

    // 15 of 35 high-attention trials, 4 of 10 hazardous clips, shuffled per subject.
    auto labels = [&](int n, double share) {
      std::vector<int> l(static_cast<std::size_t>(n), 0);
      const auto ones = static_cast<std::size_t>(std::lround(n * share));
      std::fill(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(std::min(ones, l.size())), 1);
      for (std::size_t i = l.size(); i > 1; --i) std::swap(l[i - 1], l[rng.below(i)]);
      return l;
    };
    const auto attention = labels(config.trials_per_subject, 15.0 / 35.0);
    const auto incident = labels(config.incidents_per_subject, 0.4);
    for (int k = 0; k < config.trials_per_subject; ++k) {
      jobs.push_back({static_cast<std::size_t>(s), false, k, attention[static_cast<std::size_t>(k)],
                      10.0 + 0.5 * static_cast<double>(rng.below(9))});
    }
    for (int k = 0; k < config.incidents_per_subject; ++k) {
      jobs.push_back({static_cast<std::size_t>(s), true, k, incident[static_cast<std::size_t>(k)], kIncidentDurationS});
    }
  }

  std::vector<TrialRecord> records(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& subject = subjects[job.subject];
    Rng rng(Rng::mix(Rng::mix(config.seed, 1000 + job.subject), (job.incident ? 100000u : 0u) + static_cast<std::uint64_t>(job.index)));
    TrialRecord r;
    r.subject_id = subject.id;
    r.trial_id = subject.id + (job.incident ? "-I" : "-A") + two_digit(job.index + 1, 2);
    r.duration_s = job.duration_s;
    if (job.incident) {
      r.incident = job.label ? IncidentLabel::hazardous : IncidentLabel::non_hazardous;
    } else {
      r.attention = job.label ? AttentionLabel::high : AttentionLabel::low;
    }
    // Every modality draws from its own stream so the modality set never shifts another's data.
    Rng eeg_rng(rng.next_u64()), ppg_rng(rng.next_u64()), gsr_rng(rng.next_u64()), face_rng(rng.next_u64());
    if (want_eeg) {
      r.files.eeg = "eeg/" + r.trial_id + ".csv";
      write_signal_csv(out_dir / r.files.eeg,
                       make_eeg(eeg_rng, subject, job.label, config.effect_size, r.duration_s, config.eeg_rate_hz),
                       kSignalDigits);
    }
    if (want_ppg && !job.incident) {
      r.files.ppg = "ppg/" + r.trial_id + ".csv";
      write_signal_csv(out_dir / r.files.ppg,
                       make_ppg(ppg_rng, subject, job.label, config.effect_size, r.duration_s, config.peripheral_rate_hz),
                       kSignalDigits);
    }
    if (want_gsr && !job.incident) {
      r.files.gsr = "gsr/" + r.trial_id + ".csv";
      write_signal_csv(out_dir / r.files.gsr,
                       make_gsr(gsr_rng, subject, job.label, config.effect_size, r.duration_s, config.peripheral_rate_hz),
                       kSignalDigits);
    }
    if (want_face) {
      r.face_fps = job.incident ? config.incident_fps : config.attention_fps;
      std::vector<LandmarkFrame> frames;
      std::vector<RgbImage> crops;
      make_face(face_rng, subject, job.label, config.effect_size, r.duration_s, r.face_fps, frames, crops);
      r.files.landmarks = "landmarks/" + r.trial_id + ".csv";
      r.files.face_images = "faces/" + r.trial_id;
      write_landmarks_csv(out_dir / r.files.landmarks, frames);
      for (std::size_t f = 0; f < crops.size(); ++f) {
        write_png(out_dir / r.files.face_images / (two_digit(static_cast<int>(f), 4) + ".png"), crops[f]);
      }
    }
    records[j] = std::move(r);
  });

  Dataset ds;
  ds.root = out_dir;
  for (const auto& s : subjects) ds.subjects.push_back(s.id);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    (jobs[j].incident ? ds.incidents : ds.trials).push_back(std::move(records[j]));
  }
  ds.generator_json = config.to_json();
  ds.save(out_dir / "manifest.json");
  return ds;
}

}  // namespace neurodrive
