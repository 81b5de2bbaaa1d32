#include "neurodrive/face.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "json.hpp"

#include "neurodrive/assets.hpp"
#include "neurodrive/error.hpp"
#include "neurodrive/signal_io.hpp"

namespace neurodrive {
namespace fs = std::filesystem;

void FaceTrial::validate() const {
  if (frames.empty()) fail(ErrorCode::empty_input, "face trial has no frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (i > 0 && f.frame_index <= frames[i - 1].frame_index) {
      fail(ErrorCode::invalid_argument, "frame indices must increase strictly (frame " + std::to_string(f.frame_index) + ")");
    }
    if (!(f.box.w > 0.0 && f.box.h > 0.0)) {
      fail(ErrorCode::degenerate, "zero-area face box in frame " + std::to_string(f.frame_index));
    }
    for (const auto& p : f.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
        fail(ErrorCode::invalid_argument, "non-finite landmark in frame " + std::to_string(f.frame_index));
      }
    }
  }
  if (!face_images.empty() && face_images.size() != frames.size()) {
    fail(ErrorCode::length_mismatch, std::to_string(face_images.size()) + " face crops for " +
                                         std::to_string(frames.size()) + " landmark frames");
  }
}

FaceFeatureTable FaceFeatureTable::from_json(std::string_view json_text) {
  const auto doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::parse, "malformed face feature table");
  if (doc.value("version", 0) != 1) fail(ErrorCode::parse, "unsupported face feature table version");
  FaceFeatureTable table;
  std::map<std::string, std::size_t> index;
  for (const auto& [name, members] : doc.at("anchors").items()) {
    std::vector<std::size_t> pts;
    for (const auto& m : members) {
      const auto v = m.get<std::size_t>();
      if (v >= kLandmarkCount) fail(ErrorCode::parse, "anchor " + name + " references landmark " + std::to_string(v));
      pts.push_back(v);
    }
    if (pts.empty()) fail(ErrorCode::parse, "anchor " + name + " is empty");
    index[name] = table.anchors.size();
    table.anchor_names.push_back(name);
    table.anchors.push_back(std::move(pts));
  }
  auto anchor = [&](const nlohmann::json& j) {
    const auto name = j.get<std::string>();
    const auto it = index.find(name);
    if (it == index.end()) fail(ErrorCode::parse, "unknown anchor " + name);
    return it->second;
  };
  for (const auto& d : doc.at("distances")) {
    table.distance_names.push_back(d.at("name").get<std::string>());
    table.distances.push_back({anchor(d.at("a")), anchor(d.at("b"))});
  }
  for (const auto& a : doc.at("angles")) {
    table.angle_names.push_back(a.at("name").get<std::string>());
    table.angles.push_back({anchor(a.at("s1").at(0)), anchor(a.at("s1").at(1)), anchor(a.at("s2").at(0)),
                            anchor(a.at("s2").at(1))});
  }
  if (table.distances.size() + table.angles.size() != kGeometricFeatureCount) {
    fail(ErrorCode::parse, "face feature table must define 30 features");
  }
  return table;
}

const FaceFeatureTable& FaceFeatureTable::standard() {
  static const FaceFeatureTable table = from_json(assets::face_features_json());
  return table;
}

std::vector<double> geometric_features(const LandmarkFrame& frame, const FaceFeatureTable& table) {
  if (!(frame.box.w > 0.0 && frame.box.h > 0.0)) {
    fail(ErrorCode::degenerate, "zero-area face box in frame " + std::to_string(frame.frame_index));
  }
  // Box-relative coordinates make every later step translation-exact.
  std::vector<Point2> anchors(table.anchors.size());
  for (std::size_t a = 0; a < table.anchors.size(); ++a) {
    double sx = 0.0, sy = 0.0;
    for (auto idx : table.anchors[a]) {
      sx += frame.points[idx][0] - frame.box.x;
      sy += frame.points[idx][1] - frame.box.y;
    }
    const auto n = static_cast<double>(table.anchors[a].size());
    anchors[a] = {sx / n, sy / n};
  }
  const double diag = std::sqrt(frame.box.w * frame.box.w + frame.box.h * frame.box.h);

  std::vector<double> out;
  out.reserve(kGeometricFeatureCount);
  for (const auto& [a, b] : table.distances) {
    const double dx = anchors[b][0] - anchors[a][0];
    const double dy = anchors[b][1] - anchors[a][1];
    out.push_back(std::sqrt(dx * dx + dy * dy) / diag);
  }
  for (const auto& seg : table.angles) {
    const double ux = anchors[seg[1]][0] - anchors[seg[0]][0];
    const double uy = anchors[seg[1]][1] - anchors[seg[0]][1];
    const double vx = anchors[seg[3]][0] - anchors[seg[2]][0];
    const double vy = anchors[seg[3]][1] - anchors[seg[2]][1];
    out.push_back(std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy));
  }
  return out;
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCode::empty_input, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> aggregate_trial(const Eigen::MatrixXd& per_frame) {
  const auto n = per_frame.rows();
  const auto d = per_frame.cols();
  if (n == 0) fail(ErrorCode::empty_input, "no frames to aggregate");
  std::vector<double> out(static_cast<std::size_t>(3 * d));
  for (Eigen::Index c = 0; c < d; ++c) {
    // shifted by the first value so constant columns give exact means and zero spread
    const double ref = per_frame(0, c);
    double shift = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) shift += per_frame(r, c) - ref;
    const double mean = ref + shift / static_cast<double>(n);
    double ss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) ss += (per_frame(r, c) - mean) * (per_frame(r, c) - mean);
    std::vector<double> col(per_frame.col(c).data(), per_frame.col(c).data() + n);
    out[static_cast<std::size_t>(c)] = mean;
    out[static_cast<std::size_t>(d + c)] = percentile_linear(std::move(col), 0.95);
    out[static_cast<std::size_t>(2 * d + c)] = std::sqrt(ss / static_cast<double>(n));
  }
  return out;
}

std::vector<double> face_geometric_trial_features(const FaceTrial& trial) {
  trial.validate();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(trial.frames.size()), static_cast<Eigen::Index>(kGeometricFeatureCount));
  for (std::size_t i = 0; i < trial.frames.size(); ++i) {
    const auto f = geometric_features(trial.frames[i]);
    for (std::size_t c = 0; c < f.size(); ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f[c];
  }
  return aggregate_trial(m);
}

std::vector<double> embed_face(const EmbeddingBackend& embedder, const RgbImage& crop) {
  if (crop.width == kImageSide && crop.height == kImageSide) return embed(embedder, crop);
  return embed(embedder, resize_bilinear(crop, kImageSide, kImageSide));
}

std::vector<double> face_deep_trial_features(const FaceTrial& trial, const EmbeddingBackend& embedder) {
  trial.validate();
  if (trial.face_images.empty()) fail(ErrorCode::not_found, "face trial has no face crops");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(trial.face_images.size()), static_cast<Eigen::Index>(kEmbeddingDim));
  for (std::size_t i = 0; i < trial.face_images.size(); ++i) {
    const auto e = embed_face(embedder, trial.face_images[i]);
    for (std::size_t c = 0; c < e.size(); ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = e[c];
  }
  return aggregate_trial(m);
}

std::vector<LandmarkFrame> read_landmarks_csv(const fs::path& path) {
  const auto text = read_text_file(path);
  std::vector<LandmarkFrame> frames;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  constexpr std::size_t expected = 5 + 2 * kLandmarkCount;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.substr(0, 6) != "frame,") fail(ErrorCode::parse, path.string() + ": missing landmarks header");
      continue;
    }
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(parse_double(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != expected) {
      fail(ErrorCode::parse, path.string() + ": line " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " + std::to_string(expected));
    }
    LandmarkFrame f;
    f.frame_index = static_cast<int>(fields[0]);
    f.box = {fields[1], fields[2], fields[3], fields[4]};
    for (std::size_t k = 0; k < kLandmarkCount; ++k) f.points[k] = {fields[5 + 2 * k], fields[6 + 2 * k]};
    frames.push_back(f);
  }
  return frames;
}

void write_landmarks_csv(const fs::path& path, const std::vector<LandmarkFrame>& frames) {
  std::string out = "frame,box_x,box_y,box_w,box_h";
  for (std::size_t k = 1; k <= kLandmarkCount; ++k) out += ",x" + std::to_string(k) + ",y" + std::to_string(k);
  out += '\n';
  for (const auto& f : frames) {
    out += std::to_string(f.frame_index);
    for (double v : {f.box.x, f.box.y, f.box.w, f.box.h}) out += "," + to_text(v);
    for (const auto& p : f.points) out += "," + to_text(p[0]) + "," + to_text(p[1]);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<RgbImage> read_face_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::not_found, "face crop directory " + dir.string() + " not found");
  std::vector<std::pair<long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".png") continue;
    const auto stem = entry.path().stem().string();
    long number = 0;
    const auto res = std::from_chars(stem.data(), stem.data() + stem.size(), number);
    if (res.ec != std::errc{} || res.ptr != stem.data() + stem.size()) continue;
    files.emplace_back(number, entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RgbImage> images;
  images.reserve(files.size());
  for (const auto& [n, p] : files) images.push_back(read_png(p));
  return images;
}

}  // namespace neurodrive
