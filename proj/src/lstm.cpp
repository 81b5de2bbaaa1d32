#include "neurodrive/lstm.hpp"

#include <cmath>

#include "json.hpp"

#include "neurodrive/error.hpp"
#include "neurodrive/learn.hpp"
#include "neurodrive/rng.hpp"

namespace neurodrive {
namespace {

using nlohmann::json;

// Per layer, every timestep side by side: column block t holds steps t of all
// N sequences, i.e. columns [t * N, (t + 1) * N).
struct LayerTrace {
  Eigen::MatrixXd input;   // in x TN
  Eigen::MatrixXd gates;   // 4h x TN, activated
  Eigen::MatrixXd c;       // h x TN
  Eigen::MatrixXd tanh_c;  // h x TN
  Eigen::MatrixXd h;       // h x TN
};

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

// Column-wise softmax of 2 x N logits, shifted for stability.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(2, logits.cols());
  for (Eigen::Index n = 0; n < logits.cols(); ++n) {
    const double m = std::max(logits(0, n), logits(1, n));
    const double e0 = std::exp(logits(0, n) - m);
    const double e1 = std::exp(logits(1, n) - m);
    p(0, n) = e0 / (e0 + e1);
    p(1, n) = e1 / (e0 + e1);
  }
  return p;
}

Eigen::MatrixXd time_major(const std::vector<Sequence>& seqs) {
  const auto steps = seqs.front().rows();
  const auto batch = static_cast<Eigen::Index>(seqs.size());
  Eigen::MatrixXd xs(seqs.front().cols(), steps * batch);
  for (Eigen::Index n = 0; n < batch; ++n) {
    for (Eigen::Index t = 0; t < steps; ++t) xs.col(t * batch + n) = seqs[static_cast<std::size_t>(n)].row(t).transpose();
  }
  return xs;
}

json mat_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
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

}  // namespace

void require_uniform_sequences(const std::vector<Sequence>& sequences) {
  if (sequences.empty()) fail(ErrorCode::empty_input, "no sequences");
  const auto t = sequences.front().rows();
  const auto p = sequences.front().cols();
  if (t < 1 || p < 1) fail(ErrorCode::empty_input, "empty sequence");
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].rows() != t || sequences[i].cols() != p) {
      fail(ErrorCode::dimension_mismatch, "sequence " + std::to_string(i) + " is " +
                                              std::to_string(sequences[i].rows()) + "x" +
                                              std::to_string(sequences[i].cols()) + ", expected " +
                                              std::to_string(t) + "x" + std::to_string(p));
    }
  }
}

LstmModel::LstmModel(int input_dim, const LstmConfig& config) : input_dim_(input_dim), config_(config) {
  if (input_dim < 1 || config.widths.empty()) fail(ErrorCode::invalid_argument, "LSTM needs input and layer widths");
  Rng rng(config.seed);
  int in = input_dim;
  for (int h : config.widths) {
    if (h < 1) fail(ErrorCode::invalid_argument, "LSTM layer width must be positive");
    const double s = 1.0 / std::sqrt(static_cast<double>(h));
    Layer layer{Eigen::MatrixXd(4 * h, in), Eigen::MatrixXd(4 * h, h), Eigen::VectorXd(4 * h)};
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = rng.uniform(-s, s);
    for (Eigen::Index i = 0; i < layer.u.size(); ++i) layer.u.data()[i] = rng.uniform(-s, s);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) = rng.uniform(-s, s);
    layer.b.segment(h, h).setOnes();
    layers_.push_back(std::move(layer));
    in = h;
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  head_w_.resize(2, in);
  for (Eigen::Index i = 0; i < head_w_.size(); ++i) head_w_.data()[i] = rng.uniform(-s, s);
}

std::size_t LstmModel::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(head_w_.size() + head_b_.size());
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.u.size() + l.b.size());
  return n;
}

Eigen::VectorXd LstmModel::flat_parameters() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  auto put = [&](const auto& m) {
    theta.segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    k += m.size();
  };
  for (const auto& l : layers_) {
    put(l.w);
    put(l.u);
    put(l.b);
  }
  put(head_w_);
  put(head_b_);
  return theta;
}

void LstmModel::set_flat_parameters(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count()) {
    fail(ErrorCode::dimension_mismatch, "parameter vector length mismatch");
  }
  Eigen::Index k = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = theta.segment(k, m.size());
    k += m.size();
  };
  for (auto& l : layers_) {
    take(l.w);
    take(l.u);
    take(l.b);
  }
  take(head_w_);
  take(head_b_);
}

double LstmModel::loss_and_gradient(const std::vector<Sequence>& sequences, const std::vector<int>& labels,
                                    Eigen::VectorXd& gradient) const {
  require_uniform_sequences(sequences);
  if (sequences.front().cols() != input_dim_) fail(ErrorCode::dimension_mismatch, "sequence width mismatch");
  if (labels.size() != sequences.size()) fail(ErrorCode::length_mismatch, "labels/sequences mismatch");
  const auto batch = static_cast<Eigen::Index>(sequences.size());
  const auto steps = sequences.front().rows();
  const auto cols = steps * batch;

  std::vector<LayerTrace> trace(layers_.size());
  Eigen::MatrixXd below = time_major(sequences);
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& layer = layers_[li];
    const auto h = layer.u.cols();
    auto& tr = trace[li];
    tr.gates.noalias() = layer.w * below;
    tr.gates.colwise() += layer.b;
    tr.c.resize(h, cols);
    tr.tanh_c.resize(h, cols);
    tr.h.resize(h, cols);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto a = tr.gates.middleCols(t * batch, batch);
      if (t > 0) a.noalias() += layer.u * tr.h.middleCols((t - 1) * batch, batch);
      a.topRows(2 * h) = sigmoid(a.topRows(2 * h).array());
      a.middleRows(2 * h, h) = a.middleRows(2 * h, h).array().tanh();
      a.bottomRows(h) = sigmoid(a.bottomRows(h).array());
      auto c = tr.c.middleCols(t * batch, batch);
      c = a.topRows(h).cwiseProduct(a.middleRows(2 * h, h));
      if (t > 0) c += a.middleRows(h, h).cwiseProduct(tr.c.middleCols((t - 1) * batch, batch));
      tr.tanh_c.middleCols(t * batch, batch) = c.array().tanh();
      tr.h.middleCols(t * batch, batch) = a.bottomRows(h).cwiseProduct(tr.tanh_c.middleCols(t * batch, batch));
    }
    tr.input = std::move(below);
    below = tr.h;
  }

  const Eigen::MatrixXd top = trace.back().h.rightCols(batch);
  Eigen::MatrixXd logits = head_w_ * top;
  logits.colwise() += head_b_;
  const Eigen::MatrixXd prob = softmax(logits);
  double loss = 0.0;
  Eigen::MatrixXd dlogits = prob;
  for (Eigen::Index n = 0; n < batch; ++n) {
    const int y = labels[static_cast<std::size_t>(n)];
    loss -= std::log(std::max(prob(y, n), 1e-300));
    dlogits(y, n) -= 1.0;
  }
  loss /= static_cast<double>(batch);
  dlogits /= static_cast<double>(batch);

  gradient.setZero(static_cast<Eigen::Index>(parameter_count()));
  // Offsets of each block in the flat layout.
  std::vector<Eigen::Index> offset(layers_.size());
  Eigen::Index k = 0;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    offset[li] = k;
    k += layers_[li].w.size() + layers_[li].u.size() + layers_[li].b.size();
  }
  {
    Eigen::MatrixXd dhw = dlogits * top.transpose();
    gradient.segment(k, dhw.size()) = Eigen::Map<const Eigen::VectorXd>(dhw.data(), dhw.size());
    gradient.segment(k + dhw.size(), 2) = dlogits.rowwise().sum();
  }

  // dh arriving from the layer above, all timesteps; only the last step
  // receives anything from the head.
  Eigen::MatrixXd dh_above = Eigen::MatrixXd::Zero(trace.back().h.rows(), cols);
  dh_above.rightCols(batch) = head_w_.transpose() * dlogits;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& layer = layers_[li];
    const auto& tr = trace[li];
    const auto h = layer.u.cols();
    Eigen::MatrixXd da(4 * h, cols);
    Eigen::MatrixXd dh_rec = Eigen::MatrixXd::Zero(h, batch);
    Eigen::ArrayXXd dc_rec = Eigen::ArrayXXd::Zero(h, batch);
    for (Eigen::Index t = steps; t-- > 0;) {
      const Eigen::Index c0 = t * batch;
      const Eigen::ArrayXXd dh = dh_rec.array() + dh_above.middleCols(c0, batch).array();
      const auto g = tr.gates.middleCols(c0, batch);
      const auto gi = g.topRows(h).array();
      const auto gf = g.middleRows(h, h).array();
      const auto gg = g.middleRows(2 * h, h).array();
      const auto go = g.bottomRows(h).array();
      const auto tc = tr.tanh_c.middleCols(c0, batch).array();
      const Eigen::ArrayXXd dc = dc_rec + dh * go * (1.0 - tc * tc);
      auto d = da.middleCols(c0, batch);
      d.topRows(h) = (dc * gg * gi * (1.0 - gi)).matrix();
      if (t > 0) {
        d.middleRows(h, h) = (dc * tr.c.middleCols(c0 - batch, batch).array() * gf * (1.0 - gf)).matrix();
      } else {
        d.middleRows(h, h).setZero();
      }
      d.middleRows(2 * h, h) = (dc * gi * (1.0 - gg * gg)).matrix();
      d.bottomRows(h) = (dh * tc * go * (1.0 - go)).matrix();
      dc_rec = dc * gf;
      if (t > 0) dh_rec.noalias() = layer.u.transpose() * d;
    }
    const Eigen::MatrixXd dw = da * tr.input.transpose();
    Eigen::MatrixXd du = Eigen::MatrixXd::Zero(layer.u.rows(), layer.u.cols());
    if (steps > 1) du.noalias() = da.rightCols(cols - batch) * tr.h.leftCols(cols - batch).transpose();
    const Eigen::VectorXd db = da.rowwise().sum();
    Eigen::Index o = offset[li];
    gradient.segment(o, dw.size()) = Eigen::Map<const Eigen::VectorXd>(dw.data(), dw.size());
    o += dw.size();
    gradient.segment(o, du.size()) = Eigen::Map<const Eigen::VectorXd>(du.data(), du.size());
    o += du.size();
    gradient.segment(o, db.size()) = db;
    if (li > 0) dh_above.noalias() = layer.w.transpose() * da;
  }
  return loss;
}

double LstmModel::loss(const std::vector<Sequence>& sequences, const std::vector<int>& labels) const {
  Eigen::VectorXd g;
  return loss_and_gradient(sequences, labels, g);
}

LstmModel LstmModel::train(const std::vector<Sequence>& sequences, const std::vector<int>& labels,
                           const LstmConfig& config) {
  require_uniform_sequences(sequences);
  require_two_classes(labels);
  if (labels.size() != sequences.size()) fail(ErrorCode::length_mismatch, "labels/sequences mismatch");
  if (config.epochs < 0) fail(ErrorCode::invalid_argument, "negative epoch count");
  LstmModel model(static_cast<int>(sequences.front().cols()), config);
  Eigen::VectorXd theta = model.flat_parameters();
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    model.loss_history_.push_back(model.loss_and_gradient(sequences, labels, grad));
    velocity = config.momentum * velocity - config.learning_rate * grad;
    theta += velocity;
    model.set_flat_parameters(theta);
  }
  model.loss_history_.push_back(model.loss(sequences, labels));
  return model;
}

Eigen::Vector2d LstmModel::probabilities(const Sequence& sequence) const {
  if (sequence.cols() != input_dim_ || sequence.rows() < 1) {
    fail(ErrorCode::dimension_mismatch, "sequence shape does not match the model");
  }
  Eigen::MatrixXd below = sequence.transpose();  // p x T
  for (const auto& layer : layers_) {
    const auto h = layer.u.cols();
    Eigen::VectorXd hp = Eigen::VectorXd::Zero(h), cp = Eigen::VectorXd::Zero(h);
    Eigen::MatrixXd out(h, below.cols());
    for (Eigen::Index t = 0; t < below.cols(); ++t) {
      Eigen::VectorXd a = layer.w * below.col(t) + layer.u * hp + layer.b;
      const Eigen::ArrayXd i = sigmoid(a.head(h).array());
      const Eigen::ArrayXd f = sigmoid(a.segment(h, h).array());
      const Eigen::ArrayXd g = a.segment(2 * h, h).array().tanh();
      const Eigen::ArrayXd o = sigmoid(a.tail(h).array());
      cp = (f * cp.array() + i * g).matrix();
      hp = (o * cp.array().tanh()).matrix();
      out.col(t) = hp;
    }
    below = std::move(out);
  }
  Eigen::MatrixXd logits = head_w_ * below.col(below.cols() - 1) + head_b_;
  return softmax(logits).col(0);
}

int LstmModel::predict(const Sequence& sequence) const {
  const auto p = probabilities(sequence);
  return p(1) > p(0) ? 1 : 0;
}

std::string LstmModel::to_json() const {
  json layers = json::array();
  for (const auto& l : layers_) {
    layers.push_back({{"w", mat_json(l.w)}, {"u", mat_json(l.u)}, {"b", mat_json(l.b)}});
  }
  return json{{"format", "neurodrive.lstm"},
              {"version", 1},
              {"input_dim", input_dim_},
              {"config",
               {{"widths", config_.widths},
                {"learning_rate", config_.learning_rate},
                {"momentum", config_.momentum},
                {"epochs", config_.epochs},
                {"seed", config_.seed}}},
              {"layers", layers},
              {"head_w", mat_json(head_w_)},
              {"head_b", mat_json(head_b_)},
              {"loss_history", loss_history_}}
      .dump();
}

LstmModel LstmModel::from_json(std::string_view text) {
  const auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || doc.value("format", "") != "neurodrive.lstm" || doc.value("version", 0) != 1) {
    fail(ErrorCode::parse, "expected neurodrive.lstm version 1");
  }
  try {
    LstmModel m;
    m.input_dim_ = doc.at("input_dim").get<int>();
    const auto& c = doc.at("config");
    m.config_.widths = c.at("widths").get<std::vector<int>>();
    m.config_.learning_rate = c.at("learning_rate").get<double>();
    m.config_.momentum = c.at("momentum").get<double>();
    m.config_.epochs = c.at("epochs").get<int>();
    m.config_.seed = c.at("seed").get<std::uint64_t>();
    int in = m.input_dim_;
    for (std::size_t i = 0; i < m.config_.widths.size(); ++i) {
      const auto& lj = doc.at("layers").at(i);
      Layer l{json_mat(lj.at("w")), json_mat(lj.at("u")), json_mat(lj.at("b"))};
      const int h = m.config_.widths[i];
      if (l.w.rows() != 4 * h || l.w.cols() != in || l.u.rows() != 4 * h || l.u.cols() != h || l.b.size() != 4 * h) {
        fail(ErrorCode::parse, "lstm layer " + std::to_string(i) + " shape mismatch");
      }
      m.layers_.push_back(std::move(l));
      in = h;
    }
    m.head_w_ = json_mat(doc.at("head_w"));
    const Eigen::MatrixXd hb = json_mat(doc.at("head_b"));
    if (m.head_w_.rows() != 2 || m.head_w_.cols() != in || hb.size() != 2) fail(ErrorCode::parse, "lstm head shape mismatch");
    m.head_b_ = Eigen::Map<const Eigen::Vector2d>(hb.data());
    m.loss_history_ = doc.at("loss_history").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("lstm: ") + e.what());
  }
}

}  // namespace neurodrive
