#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dsa {

inline long long numel(const std::vector<int>& shape) {
  long long n = 1;
  for (int d : shape) n *= d;
  return n;
}

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

// Generic dense value used by the computation graph: a shape plus row-major
// data. Domain types below are thin views onto the same layout.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s)
      : shape(std::move(s)), data(static_cast<size_t>(numel(shape)), 0.0) {}
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<long long>(data.size()) != numel(shape))
      fail("Tensor: data length " + std::to_string(data.size()) +
           " does not match shape");
  }

  long long size() const { return static_cast<long long>(data.size()); }
};

// Dense rank-3 feature map, row-major (c, y, x).
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(static_cast<size_t>(c) * h * w, 0.0) {
    if (c <= 0 || h <= 0 || w <= 0) fail("FeatureMap: dims must be positive");
  }

  double& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }

  long long size() const { return static_cast<long long>(data.size()); }

  void validate() const {
    if (channels <= 0 || height <= 0 || width <= 0)
      fail("FeatureMap: dims must be positive");
    if (size() != static_cast<long long>(channels) * height * width)
      fail("FeatureMap: data length mismatch");
    for (double v : data)
      if (!std::isfinite(v)) fail("FeatureMap: non-finite value");
  }
};

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const {
    return data[static_cast<size_t>(i) * cols + j];
  }
};

// Convolution parameters. Supported (kernel, stride, padding) combinations:
// 1x1 stride 1 or 2 pad 0, 3x3 stride 2 pad 1, 7x7 stride 1 pad 3.
struct ConvWeights {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  std::vector<double> weights;  // (o, i, ky, kx)
  std::vector<double> bias;     // length out_channels

  ConvWeights() = default;
  ConvWeights(int o, int i, int kh, int kw)
      : out_channels(o), in_channels(i), kernel_h(kh), kernel_w(kw),
        weights(static_cast<size_t>(o) * i * kh * kw, 0.0),
        bias(static_cast<size_t>(o), 0.0) {}

  double& at(int o, int i, int ky, int kx) {
    return weights[((static_cast<size_t>(o) * in_channels + i) * kernel_h +
                    ky) * kernel_w + kx];
  }
  double at(int o, int i, int ky, int kx) const {
    return weights[((static_cast<size_t>(o) * in_channels + i) * kernel_h +
                    ky) * kernel_w + kx];
  }

  void validate() const {
    if (out_channels <= 0 || in_channels <= 0 || kernel_h <= 0 || kernel_w <= 0)
      fail("ConvWeights: dims must be positive");
    if (weights.size() != static_cast<size_t>(out_channels) * in_channels *
                              kernel_h * kernel_w)
      fail("ConvWeights: weight length mismatch");
    if (bias.size() != static_cast<size_t>(out_channels))
      fail("ConvWeights: bias length mismatch");
  }
};

inline Tensor to_tensor(const FeatureMap& f) {
  return Tensor({f.channels, f.height, f.width}, f.data);
}

inline Tensor to_tensor(const Matrix& m) {
  return Tensor({m.rows, m.cols}, m.data);
}

inline FeatureMap fm_from(const std::vector<int>& shape,
                          const std::vector<double>& data) {
  if (shape.size() != 3) fail("fm_from: expected rank-3 shape");
  FeatureMap f(shape[0], shape[1], shape[2]);
  f.data = data;
  return f;
}

inline Matrix mat_from(const std::vector<int>& shape,
                       const std::vector<double>& data) {
  if (shape.size() != 2) fail("mat_from: expected rank-2 shape");
  Matrix m(shape[0], shape[1]);
  m.data = data;
  return m;
}

}  // namespace dsa
