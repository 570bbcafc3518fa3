#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "dsa/rng.hpp"
#include "dsa/tensor.hpp"

namespace dsa::test {

inline FeatureMap random_fm(Rng& rng, int c, int h, int w, double lo = -1.0,
                            double hi = 1.0) {
  FeatureMap f(c, h, w);
  for (auto& v : f.data) v = rng.uniform(lo, hi);
  return f;
}

inline Matrix random_matrix(Rng& rng, int rows, int cols, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_rel_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    d = std::max(d, std::abs(a[i] - b[i]) / den);
  }
  return d;
}

inline bool bitwise_equal(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

// spatial permutation of a feature map: out(c, j) = in(c, perm[j])
inline FeatureMap permute_spatial(const FeatureMap& f,
                                  const std::vector<int>& perm) {
  FeatureMap out(f.channels, f.height, f.width);
  const int n = f.height * f.width;
  for (int c = 0; c < f.channels; ++c)
    for (int j = 0; j < n; ++j)
      out.data[static_cast<size_t>(c) * n + j] =
          f.data[static_cast<size_t>(c) * n + perm[j]];
  return out;
}

inline std::vector<int> random_permutation(Rng& rng, int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(p[i], p[static_cast<size_t>(rng.next_int(0, i))]);
  return p;
}

// direct extended-precision evaluation of softmax(q k^T / sqrt(d)) v,
// independent of the graph kernels
inline Matrix sdpa_oracle(const Matrix& q, const Matrix& k, const Matrix& v) {
  const int n = q.rows, d = q.cols;
  std::vector<long double> scores(static_cast<size_t>(n) * n);
  const long double scale = 1.0L / sqrtl((long double)d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      long double acc = 0;
      for (int c = 0; c < d; ++c)
        acc += (long double)q.at(i, c) * k.at(j, c);
      scores[static_cast<size_t>(i) * n + j] = acc * scale;
    }
  Matrix out(n, d);
  for (int i = 0; i < n; ++i) {
    long double mx = scores[static_cast<size_t>(i) * n];
    for (int j = 1; j < n; ++j)
      mx = std::max(mx, scores[static_cast<size_t>(i) * n + j]);
    std::vector<long double> e(n);
    long double sum = 0;
    for (int j = 0; j < n; ++j) {
      e[j] = expl(scores[static_cast<size_t>(i) * n + j] - mx);
      sum += e[j];
    }
    for (int c = 0; c < d; ++c) {
      long double acc = 0;
      for (int j = 0; j < n; ++j) acc += e[j] / sum * v.at(j, c);
      out.at(i, c) = double(acc);
    }
  }
  return out;
}

}  // namespace dsa::test
