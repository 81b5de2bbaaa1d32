#include <cmath>

#include "doctest.h"
#include "neurodrive/learn.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace neurodrive;
using testing::error_of;

namespace {

Eigen::MatrixXd random_matrix(oracle::Gen& g, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g.normal();
  return m;
}

oracle::Mat covariance(const Eigen::MatrixXd& x) {
  const auto n = static_cast<std::size_t>(x.rows()), d = static_cast<std::size_t>(x.cols());
  std::vector<long double> mean(d, 0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (auto& m : mean) m /= n;
  oracle::Mat cov(d, std::vector<long double>(d, 0));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        cov[i][j] += (x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) - mean[i]) *
                     (x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) - mean[j]);
  for (auto& row : cov)
    for (auto& v : row) v /= (n - 1);
  return cov;
}

// Hidden layer recomputed from the stored weights in long double.
oracle::Mat hidden_layer(const ElmModel& m, const Eigen::MatrixXd& x) {
  oracle::Mat h(static_cast<std::size_t>(x.rows()), std::vector<long double>(static_cast<std::size_t>(m.biases.size())));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.biases.size(); ++j) {
      long double z = m.biases(j);
      for (Eigen::Index c = 0; c < x.cols(); ++c) z += static_cast<long double>(m.input_weights(j, c)) * x(i, c);
      h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::fabs(z) < 1 ? 1 - std::fabs(z) : 0;
    }
  }
  return h;
}

// beta = (H'H + lI)^-1 H't
std::vector<long double> ridge_beta(const oracle::Mat& h, const std::vector<int>& labels, long double ridge) {
  const std::size_t n = h.size(), k = h[0].size();
  oracle::Mat a(k, std::vector<long double>(k, 0));
  std::vector<long double> b(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const long double t = labels[i] == 1 ? 1 : -1;
    for (std::size_t p = 0; p < k; ++p) {
      b[p] += h[i][p] * t;
      for (std::size_t q = 0; q < k; ++q) a[p][q] += h[i][p] * h[i][q];
    }
  }
  for (std::size_t p = 0; p < k; ++p) a[p][p] += ridge;
  return oracle::solve(a, b);
}

struct Clouds {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Clouds clouds(oracle::Gen& g, int n, double sep) {
  Clouds c{Eigen::MatrixXd(n, 2), {}};
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    c.x(i, 0) = (label ? sep : -sep) + 0.3 * g.normal();
    c.x(i, 1) = (label ? sep : -sep) + 0.3 * g.normal();
    c.y.push_back(label);
  }
  return c;
}

}  // namespace

TEST_SUITE("learn") {

TEST_CASE("scaler examples") {
  Eigen::MatrixXd x(3, 2);
  x << 2, 5, 4, 5, 6, 5;
  const auto s = Scaler::fit(x);
  const auto y = s.apply(x);
  CHECK(y(0, 0) == -1.0);
  CHECK(y(1, 0) == 0.0);
  CHECK(y(2, 0) == 1.0);
  CHECK(y.col(1).isZero(0.0));

  Eigen::MatrixXd train(2, 1), test(1, 1);
  train << 2, 6;
  test << 8;
  CHECK(Scaler::fit(train).apply(test)(0, 0) == 2.0);

  CHECK(error_of([] { Scaler::fit(Eigen::MatrixXd(0, 3)); }) == ErrorCode::empty_input);
  CHECK(error_of([&] { s.apply(Eigen::MatrixXd::Zero(1, 3)); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("scaler maps its training matrix onto [-1, 1]") {
  oracle::Gen g(12);
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd x = random_matrix(g, 2 + g.integer(30), 1 + g.integer(10)) * g.uniform(0.01, 100.0);
    const auto y = Scaler::fit(x).apply(x);
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      CHECK(y.col(c).minCoeff() == -1.0);
      CHECK(y.col(c).maxCoeff() == 1.0);
    }
  }
}

TEST_CASE("pca on collinear points") {
  Eigen::MatrixXd x(6, 3);
  for (int i = 0; i < 6; ++i) x.row(i) = Eigen::RowVector3d(1, -2, 0.5) * (i - 2.5) + Eigen::RowVector3d(3, 1, 4);
  const auto m = PcaModel::fit(x, 1);
  CHECK(std::fabs(m.explained_share(0) - 1.0) < 1e-10);
}

TEST_CASE("pca agrees with a Jacobi eigendecomposition") {
  oracle::Gen g(20);
  for (int t = 0; t < 20; ++t) {
    // distinct column scales keep the spectrum well separated
    Eigen::MatrixXd x = random_matrix(g, 20, 5);
    for (int c = 0; c < 5; ++c) x.col(c) *= 1.0 + 1.5 * c;
    const auto m = PcaModel::fit(x, 5);
    const auto e = oracle::jacobi_eigen(covariance(x));
    const Eigen::MatrixXd z = m.transform(x);
    for (int k = 0; k < 5; ++k) {
      CHECK(std::fabs(m.explained_variance(k) - static_cast<double>(e.values[k])) < 1e-8 * static_cast<double>(e.values[0]));
      // projections onto the oracle axis, up to sign
      double same = 0, flip = 0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        long double p = 0;
        for (int c = 0; c < 5; ++c) p += (x(r, c) - m.mean(c)) * e.vectors[k][c];
        same = std::max(same, std::fabs(z(r, k) - static_cast<double>(p)));
        flip = std::max(flip, std::fabs(z(r, k) + static_cast<double>(p)));
      }
      CHECK(std::min(same, flip) < 1e-8);
    }
  }
}

TEST_CASE("pca through the Gram matrix when features outnumber samples") {
  oracle::Gen g(21);
  Eigen::MatrixXd x = random_matrix(g, 8, 20);
  for (int c = 0; c < 20; ++c) x.col(c) *= 1.0 + 0.2 * c;
  const auto m = PcaModel::fit(x, 7);
  const auto e = oracle::jacobi_eigen(covariance(x));
  for (int k = 0; k < 7; ++k) {
    CHECK(std::fabs(m.explained_variance(k) - static_cast<double>(e.values[k])) < 1e-8 * static_cast<double>(e.values[0]));
  }
  CHECK((m.components.transpose() * m.components - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(error_of([&] { PcaModel::fit(x, 8); }) == ErrorCode::invalid_argument);
}

TEST_CASE("pca with k = d is a lossless isometry") {
  oracle::Gen g(22);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_matrix(g, 30, 6);
    const auto m = PcaModel::fit(x, 6);
    CHECK((m.inverse_transform(m.transform(x)) - x).cwiseAbs().maxCoeff() < 1e-8);
    const auto z = m.transform(x);
    for (int i = 0; i < 10; ++i) {
      const int a = g.integer(30), b = g.integer(30);
      CHECK(std::fabs((z.row(a) - z.row(b)).norm() - (x.row(a) - x.row(b)).norm()) < 1e-8);
    }
    for (int k = 0; k < 6; ++k) {
      Eigen::Index arg = 0;
      m.components.col(k).cwiseAbs().maxCoeff(&arg);
      CHECK(m.components(arg, k) > 0);
    }
  }
}

TEST_CASE("pca errors and serialization") {
  CHECK(error_of([] { PcaModel::fit(Eigen::MatrixXd::Zero(1, 3), 1); }) == ErrorCode::invalid_argument);
  oracle::Gen g(23);
  const auto x = random_matrix(g, 10, 4);
  const auto m = PcaModel::fit(x, 2);
  const auto back = PcaModel::from_json(m.to_json());
  CHECK(back.transform(x) == m.transform(x));
  CHECK(error_of([&] { m.transform(Eigen::MatrixXd::Zero(2, 5)); }) == ErrorCode::dimension_mismatch);
  CHECK(error_of([] { PcaModel::from_json(R"({"format":"neurodrive.scaler","version":1})"); }) == ErrorCode::parse);
}

TEST_CASE("elm output weights match the ridge closed form") {
  oracle::Gen g(30);
  for (int t = 0; t < 10; ++t) {
    // primal (n >= hidden) and dual (n < hidden) branches
    const int n = t % 2 ? 15 : 60, hidden = t % 2 ? 40 : 20;
    const Eigen::MatrixXd x = random_matrix(g, n, 5) * 0.3;
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = g.integer(2);
    y[0] = 0;
    y[1] = 1;
    const auto m = ElmModel::train(x, y, hidden, static_cast<std::uint64_t>(t));
    const auto h = hidden_layer(m, x);
    const auto beta = ridge_beta(h, y, kElmRidge);
    double scale = 0, err = 0;
    for (int j = 0; j < hidden; ++j) {
      scale = std::max(scale, std::fabs(static_cast<double>(beta[static_cast<std::size_t>(j)])));
      err = std::max(err, std::fabs(m.beta(j) - static_cast<double>(beta[static_cast<std::size_t>(j)])));
    }
    CHECK(err <= 1e-8 * std::max(1.0, scale));
  }
}

TEST_CASE("elm separates two clouds") {
  oracle::Gen g(31);
  const auto c = clouds(g, 40, 2.0);
  const auto m = ElmModel::train(Scaler::fit(c.x).apply(c.x), c.y, kElmHidden, 7);
  CHECK(m.predict(Scaler::fit(c.x).apply(c.x)) == c.y);
  const auto again = ElmModel::train(Scaler::fit(c.x).apply(c.x), c.y, kElmHidden, 7);
  CHECK(again.beta == m.beta);
}

TEST_CASE("elm interpolates when hidden units outnumber samples") {
  oracle::Gen g(32);
  const Eigen::MatrixXd x = random_matrix(g, 30, 3) * 0.3;
  std::vector<int> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = static_cast<int>(i % 2);
  const auto m = ElmModel::train(x, y, kElmHidden, 1);
  Eigen::VectorXd t(30);
  for (int i = 0; i < 30; ++i) t(i) = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
  CHECK((m.hidden_activations(x) * m.beta - t).norm() < 1e-3);
}

TEST_CASE("elm scoring rules") {
  oracle::Gen g(33);
  const auto c = clouds(g, 20, 1.0);
  auto m = ElmModel::train(c.x, c.y, 10, 3);
  Eigen::MatrixXd dup(2, 2);
  dup.row(0) = c.x.row(4);
  dup.row(1) = c.x.row(4);
  const auto s = m.scores(dup);
  CHECK(s(0) == s(1));

  m.beta.setZero();
  CHECK(m.predict(c.x) == std::vector<int>(20, 0));

  CHECK(error_of([&] { ElmModel::train(c.x, std::vector<int>(20, 1)); }) == ErrorCode::single_class);
  CHECK(error_of([&] { ElmModel::train(c.x, std::vector<int>(19, 1)); }) == ErrorCode::length_mismatch);
  CHECK(error_of([&] { m.scores(Eigen::MatrixXd::Zero(1, 3)); }) == ErrorCode::dimension_mismatch);
  CHECK(error_of([] { require_two_classes({0, 1, 2}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("model serialization round trips") {
  oracle::Gen g(34);
  const auto c = clouds(g, 30, 1.0);
  const auto m = ElmModel::train(c.x, c.y, 25, 9);
  const auto back = ElmModel::from_json(m.to_json());
  CHECK(back.scores(c.x) == m.scores(c.x));
  CHECK(back.seed == 9);

  const auto x = random_matrix(g, 40, 8);
  const auto chain = ReductionChain::fit(x, 3);
  const auto y = chain.apply(x);
  CHECK(y.cols() == 3);
  CHECK(y.minCoeff() == -1.0);
  CHECK(y.maxCoeff() == 1.0);
  CHECK(ReductionChain::from_json(chain.to_json()).apply(x) == y);
  CHECK(error_of([] { ElmModel::from_json("{}"); }) == ErrorCode::parse);
}

}  // TEST_SUITE
