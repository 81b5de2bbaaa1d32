#include "neurodrive/learn.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "neurodrive/error.hpp"
#include "neurodrive/rng.hpp"

namespace neurodrive {
namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Matrices are stored row-major as {rows, cols, data}.
json mat_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Eigen::MatrixXd json_mat(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) fail(ErrorCode::parse, "matrix data size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

json parse_model(std::string_view text, const char* format) {
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) fail(ErrorCode::parse, std::string("malformed ") + format + " model");
  if (doc.value("format", "") != format || doc.value("version", 0) != 1) {
    fail(ErrorCode::parse, std::string("expected ") + format + " version 1");
  }
  return doc;
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string(what) + ": " + e.what());
  }
}

void make_sign_canonical(Eigen::MatrixXd& components) {
  for (Eigen::Index c = 0; c < components.cols(); ++c) {
    Eigen::Index arg = 0;
    components.col(c).cwiseAbs().maxCoeff(&arg);
    if (components(arg, c) < 0.0) components.col(c) *= -1.0;
  }
}

}  // namespace

void require_two_classes(const std::vector<int>& labels) {
  bool zero = false, one = false;
  for (int l : labels) {
    if (l == 0) zero = true;
    else if (l == 1) one = true;
    else fail(ErrorCode::invalid_argument, "labels must be 0 or 1, got " + std::to_string(l));
  }
  if (!zero || !one) fail(ErrorCode::single_class, "training labels contain a single class");
}

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0) fail(ErrorCode::empty_input, "scaler fit on an empty matrix");
  return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != min.size()) {
    fail(ErrorCode::dimension_mismatch, "scaler expects " + std::to_string(min.size()) + " columns, got " +
                                            std::to_string(x.cols()));
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double range = max(c) - min(c);
    if (range == 0.0) {
      out.col(c).setZero();
    } else {
      out.col(c) = (2.0 * (x.col(c).array() - min(c)) / range - 1.0).matrix();
    }
  }
  return out;
}

std::string Scaler::to_json() const {
  return json{{"format", "neurodrive.scaler"}, {"version", 1}, {"min", vec_json(min)}, {"max", vec_json(max)}}.dump();
}

Scaler Scaler::from_json(std::string_view text) {
  const auto doc = parse_model(text, "neurodrive.scaler");
  return guarded("scaler", [&] {
    Scaler s{json_vec(doc.at("min")), json_vec(doc.at("max"))};
    if (s.min.size() != s.max.size()) fail(ErrorCode::parse, "scaler min/max length mismatch");
    return s;
  });
}

PcaModel PcaModel::fit(const Eigen::MatrixXd& x, int k) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2) fail(ErrorCode::invalid_argument, "PCA needs at least 2 samples");
  if (k < 1 || k > std::min<Eigen::Index>(n - 1, d)) {
    fail(ErrorCode::invalid_argument, "PCA dimension " + std::to_string(k) + " too large for " +
                                          std::to_string(n) + "x" + std::to_string(d) + " data");
  }
  PcaModel m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd xc = x.rowwise() - m.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  const double total = xc.squaredNorm() / denom;

  m.components.resize(d, k);
  m.explained_variance.resize(k);
  if (d <= n) {
    const Eigen::MatrixXd cov = (xc.transpose() * xc) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (int i = 0; i < k; ++i) {
      m.components.col(i) = eig.eigenvectors().col(d - 1 - i);
      m.explained_variance(i) = std::max(0.0, eig.eigenvalues()(d - 1 - i));
    }
  } else {
    // Same nonzero spectrum through the n x n Gram matrix; v = Xc' u / |Xc' u|.
    const Eigen::MatrixXd gram = (xc * xc.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd v = xc.transpose() * eig.eigenvectors().col(n - 1 - i);
      for (int j = 0; j < i; ++j) v -= m.components.col(j).dot(v) * m.components.col(j);
      const double norm = v.norm();
      if (norm <= 1e-300) fail(ErrorCode::degenerate, "PCA component " + std::to_string(i) + " has zero variance");
      m.components.col(i) = v / norm;
      m.explained_variance(i) = std::max(0.0, eig.eigenvalues()(n - 1 - i));
    }
  }
  make_sign_canonical(m.components);
  m.explained_share = total > 0.0 ? Eigen::VectorXd(m.explained_variance / total) : Eigen::VectorXd::Zero(k);
  return m;
}

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) {
    fail(ErrorCode::dimension_mismatch, "PCA expects " + std::to_string(mean.size()) + " columns, got " +
                                            std::to_string(x.cols()));
  }
  return (x.rowwise() - mean.transpose()) * components;
}

Eigen::MatrixXd PcaModel::inverse_transform(const Eigen::MatrixXd& z) const {
  if (z.cols() != components.cols()) fail(ErrorCode::dimension_mismatch, "PCA score width mismatch");
  return (z * components.transpose()).rowwise() + mean.transpose();
}

std::string PcaModel::to_json() const {
  return json{{"format", "neurodrive.pca"},
              {"version", 1},
              {"mean", vec_json(mean)},
              {"components", mat_json(components)},
              {"explained_variance", vec_json(explained_variance)},
              {"explained_share", vec_json(explained_share)}}
      .dump();
}

PcaModel PcaModel::from_json(std::string_view text) {
  const auto doc = parse_model(text, "neurodrive.pca");
  return guarded("pca", [&] {
    PcaModel m{json_vec(doc.at("mean")), json_mat(doc.at("components")), json_vec(doc.at("explained_variance")),
               json_vec(doc.at("explained_share"))};
    if (m.components.rows() != m.mean.size() || m.explained_variance.size() != m.components.cols()) {
      fail(ErrorCode::parse, "pca shape mismatch");
    }
    return m;
  });
}

ReductionChain ReductionChain::fit(const Eigen::MatrixXd& x, int k) {
  ReductionChain chain;
  chain.pre = Scaler::fit(x);
  const Eigen::MatrixXd scaled = chain.pre.apply(x);
  chain.pca = PcaModel::fit(scaled, k);
  chain.post = Scaler::fit(chain.pca.transform(scaled));
  return chain;
}

Eigen::MatrixXd ReductionChain::apply(const Eigen::MatrixXd& x) const {
  return post.apply(pca.transform(pre.apply(x)));
}

std::string ReductionChain::to_json() const {
  return json{{"format", "neurodrive.reduction"},
              {"version", 1},
              {"pre", json::parse(pre.to_json())},
              {"pca", json::parse(pca.to_json())},
              {"post", json::parse(post.to_json())}}
      .dump();
}

ReductionChain ReductionChain::from_json(std::string_view text) {
  const auto doc = parse_model(text, "neurodrive.reduction");
  return guarded("reduction", [&] {
    return ReductionChain{Scaler::from_json(doc.at("pre").dump()), PcaModel::from_json(doc.at("pca").dump()),
                          Scaler::from_json(doc.at("post").dump())};
  });
}

ElmModel ElmModel::train(const Eigen::MatrixXd& x, const std::vector<int>& labels, int hidden, std::uint64_t seed,
                         double ridge) {
  const auto n = x.rows();
  if (n < 2) fail(ErrorCode::invalid_argument, "ELM needs at least 2 samples");
  if (static_cast<Eigen::Index>(labels.size()) != n) fail(ErrorCode::length_mismatch, "labels/rows mismatch");
  if (hidden < 1) fail(ErrorCode::invalid_argument, "ELM needs at least one hidden unit");
  require_two_classes(labels);

  ElmModel m;
  m.seed = seed;
  m.ridge = ridge;
  m.input_weights.resize(hidden, x.cols());
  m.biases.resize(hidden);
  Rng rng(seed);
  for (int r = 0; r < hidden; ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) m.input_weights(r, c) = rng.uniform(-1.0, 1.0);
  }
  for (int r = 0; r < hidden; ++r) m.biases(r) = rng.uniform(-1.0, 1.0);

  const Eigen::MatrixXd h = m.hidden_activations(x);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) t(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

  // (H'H + lI)^-1 H't == H'(HH' + lI)^-1 t; solve the smaller system.
  if (n >= hidden) {
    Eigen::MatrixXd a = h.transpose() * h;
    a.diagonal().array() += ridge;
    m.beta = a.ldlt().solve(h.transpose() * t);
  } else {
    Eigen::MatrixXd a = h * h.transpose();
    a.diagonal().array() += ridge;
    m.beta = h.transpose() * a.ldlt().solve(t);
  }
  if (!m.beta.allFinite()) fail(ErrorCode::degenerate, "ELM output weights are not finite");
  return m;
}

Eigen::MatrixXd ElmModel::hidden_activations(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_weights.cols()) {
    fail(ErrorCode::dimension_mismatch, "ELM expects " + std::to_string(input_weights.cols()) + " features, got " +
                                            std::to_string(x.cols()));
  }
  Eigen::MatrixXd z = x * input_weights.transpose();
  z.rowwise() += biases.transpose();
  return z.unaryExpr([](double v) { return tribas(v); });
}

Eigen::VectorXd ElmModel::scores(const Eigen::MatrixXd& x) const { return hidden_activations(x) * beta; }

std::vector<int> ElmModel::predict(const Eigen::MatrixXd& x) const {
  const auto s = scores(x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) > 0.0 ? 1 : 0;
  return out;
}

std::string ElmModel::to_json() const {
  return json{{"format", "neurodrive.elm"},     {"version", 1},
              {"seed", seed},                  {"ridge", ridge},
              {"activation", "tribas"},        {"input_weights", mat_json(input_weights)},
              {"biases", vec_json(biases)},    {"beta", vec_json(beta)}}
      .dump();
}

ElmModel ElmModel::from_json(std::string_view text) {
  const auto doc = parse_model(text, "neurodrive.elm");
  return guarded("elm", [&] {
    ElmModel m;
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.ridge = doc.at("ridge").get<double>();
    m.input_weights = json_mat(doc.at("input_weights"));
    m.biases = json_vec(doc.at("biases"));
    m.beta = json_vec(doc.at("beta"));
    if (m.biases.size() != m.input_weights.rows() || m.beta.size() != m.input_weights.rows()) {
      fail(ErrorCode::parse, "elm shape mismatch");
    }
    return m;
  });
}

}  // namespace neurodrive
