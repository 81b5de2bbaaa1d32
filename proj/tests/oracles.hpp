#pragma once

// Reference implementations used only by the tests. They share no code with
// the library: plain loops, long double where it helps, no Eigen solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

// SplitMix64; independent of the library's generator on purpose.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : s_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::vector<double> normals(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal();
    return v;
  }

 private:
  std::uint64_t s_;
};

inline std::vector<double> sine(double freq_hz, double rate_hz, double seconds, double amp = 1.0,
                                double phase = 0.0) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate_hz));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate_hz + phase);
  }
  return x;
}

// ---- information measures on already-discrete codes ----

inline long double plugin_mi(const std::vector<int>& x, const std::vector<int>& y) {
  const long double n = static_cast<long double>(x.size());
  std::map<std::pair<int, int>, long double> joint;
  std::map<int, long double> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], y[i]}] += 1;
    px[x[i]] += 1;
    py[y[i]] += 1;
  }
  long double mi = 0;
  for (const auto& [xy, c] : joint) {
    const long double pxy = c / n;
    mi += pxy * std::log2(pxy / ((px[xy.first] / n) * (py[xy.second] / n)));
  }
  return mi;
}

// H(Y|X) = sum_x p(x) H(Y | X = x)
inline long double plugin_conditional_entropy(const std::vector<int>& x, const std::vector<int>& y) {
  const long double n = static_cast<long double>(x.size());
  std::map<int, std::map<int, long double>> by_x;
  std::map<int, long double> px;
  for (std::size_t i = 0; i < x.size(); ++i) {
    by_x[x[i]][y[i]] += 1;
    px[x[i]] += 1;
  }
  long double h = 0;
  for (const auto& [xv, ys] : by_x) {
    long double hx = 0;
    for (const auto& [yv, c] : ys) {
      const long double p = c / px[xv];
      hx -= p * std::log2(p);
    }
    h += (px[xv] / n) * hx;
  }
  return h;
}

// ---- dense linear algebra ----

using Mat = std::vector<std::vector<long double>>;

// Gaussian elimination with partial pivoting.
inline std::vector<long double> solve(Mat a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

struct Eigen {
  std::vector<long double> values;               // descending
  std::vector<std::vector<long double>> vectors;  // vectors[k] pairs with values[k]
};

// Cyclic Jacobi rotations for a symmetric matrix.
inline Eigen jacobi_eigen(Mat a) {
  const std::size_t n = a.size();
  Mat v(n, std::vector<long double>(n, 0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1;
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-40L) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a[p][q]) < 1e-300L) continue;
        const long double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const long double t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const long double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  Eigen e;
  for (auto k : order) {
    e.values.push_back(a[k][k]);
    std::vector<long double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
    e.vectors.push_back(col);
  }
  return e;
}

// ---- metrics ----

// Fraction of (positive, negative) pairs ordered correctly, ties counting half.
inline double auc_pairs(const std::vector<int>& labels, const std::vector<double>& scores) {
  long long twice = 0, pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) twice += 2;
      else if (scores[i] == scores[j]) twice += 1;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

inline std::vector<double> stat_six(const std::vector<double>& x) {
  const std::size_t n = x.size();
  long double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  long double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  const long double sd = std::sqrt(var / n);
  auto z = [&](std::size_t i) { return sd == 0 ? 0.0L : (x[i] - mean) / sd; };
  long double d1 = 0, d1z = 0, d2 = 0, d2z = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d1 += std::fabs(static_cast<long double>(x[i + 1]) - x[i]);
    d1z += std::fabs(z(i + 1) - z(i));
  }
  for (std::size_t i = 0; i + 2 < n; ++i) {
    d2 += std::fabs(static_cast<long double>(x[i + 2]) - 2.0L * x[i + 1] + x[i]);
    d2z += std::fabs(z(i + 2) - 2 * z(i + 1) + z(i));
  }
  return {static_cast<double>(mean), static_cast<double>(sd), static_cast<double>(d1 / (n - 1)),
          static_cast<double>(d1z / (n - 1)), static_cast<double>(d2 / (n - 2)), static_cast<double>(d2z / (n - 2))};
}

}  // namespace oracle
