#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dsa/tensor.hpp"

// Raw forward/backward kernels. Shapes are validated by the graph layer;
// kernels assume consistent buffers. Backward kernels accumulate (+=) into
// the input adjoints. Multiply-accumulate and exp counters instrument the
// forward kernels so measured cost can be compared against analytic formulas.
namespace dsa::ops {

inline thread_local std::uint64_t madd_count = 0;
inline thread_local std::uint64_t exp_count = 0;

inline void reset_counters() {
  madd_count = 0;
  exp_count = 0;
}

inline int conv_out_dim(int d, int k, int stride, int pad) {
  return (d + 2 * pad - k) / stride + 1;
}

inline bool conv_shape_supported(int kh, int kw, int stride, int pad) {
  if (kh == 1 && kw == 1) return (stride == 1 || stride == 2) && pad == 0;
  if (kh == 3 && kw == 3) return stride == 2 && pad == 1;
  if (kh == 7 && kw == 7) return stride == 1 && pad == 3;
  return false;
}

// Direct convolution; out-of-bounds taps multiply an explicit zero so the
// instrumented madd count equals O*OH*OW*I*kh*kw for every input size.
inline void conv2d_fwd(const double* x, int C, int H, int W, const double* w,
                       const double* b, int O, int kh, int kw, int stride,
                       int pad, double* out, int OH, int OW) {
  for (int o = 0; o < O; ++o) {
    for (int oy = 0; oy < OH; ++oy) {
      for (int ox = 0; ox < OW; ++ox) {
        double acc = 0.0;
        for (int i = 0; i < C; ++i) {
          const double* xi = x + static_cast<size_t>(i) * H * W;
          const double* wo =
              w + ((static_cast<size_t>(o) * C + i) * kh) * kw;
          for (int ky = 0; ky < kh; ++ky) {
            const int y = oy * stride + ky - pad;
            for (int kx = 0; kx < kw; ++kx) {
              const int xx = ox * stride + kx - pad;
              const double xv = (y >= 0 && y < H && xx >= 0 && xx < W)
                                    ? xi[y * W + xx]
                                    : 0.0;
              acc += wo[ky * kw + kx] * xv;
            }
          }
        }
        madd_count += static_cast<std::uint64_t>(C) * kh * kw;
        out[(static_cast<size_t>(o) * OH + oy) * OW + ox] = acc + b[o];
      }
    }
  }
}

inline void conv2d_bwd(const double* x, int C, int H, int W, const double* w,
                       int O, int kh, int kw, int stride, int pad,
                       const double* dout, int OH, int OW, double* dx,
                       double* dw, double* db) {
  for (int o = 0; o < O; ++o) {
    for (int oy = 0; oy < OH; ++oy) {
      for (int ox = 0; ox < OW; ++ox) {
        const double g = dout[(static_cast<size_t>(o) * OH + oy) * OW + ox];
        db[o] += g;
        for (int i = 0; i < C; ++i) {
          const double* xi = x + static_cast<size_t>(i) * H * W;
          double* dxi = dx + static_cast<size_t>(i) * H * W;
          const size_t wbase = ((static_cast<size_t>(o) * C + i) * kh) * kw;
          for (int ky = 0; ky < kh; ++ky) {
            const int y = oy * stride + ky - pad;
            if (y < 0 || y >= H) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int xx = ox * stride + kx - pad;
              if (xx < 0 || xx >= W) continue;
              dw[wbase + ky * kw + kx] += g * xi[y * W + xx];
              dxi[y * W + xx] += g * w[wbase + ky * kw + kx];
            }
          }
        }
      }
    }
  }
}

// channel 0 = per-position max over channels, channel 1 = per-position mean
inline void channel_pool_concat_fwd(const double* x, int C, int H, int W,
                                    double* out) {
  const int n = H * W;
  for (int p = 0; p < n; ++p) {
    double mx = x[p];
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
      const double v = x[static_cast<size_t>(c) * n + p];
      mx = std::max(mx, v);
      sum += v;
    }
    out[p] = mx;
    out[n + p] = sum / C;
  }
}

// max gradient routes to the lowest channel index attaining the max
inline void channel_pool_concat_bwd(const double* x, int C, int H, int W,
                                    const double* dout, double* dx) {
  const int n = H * W;
  for (int p = 0; p < n; ++p) {
    int arg = 0;
    double mx = x[p];
    for (int c = 1; c < C; ++c) {
      const double v = x[static_cast<size_t>(c) * n + p];
      if (v > mx) {
        mx = v;
        arg = c;
      }
    }
    dx[static_cast<size_t>(arg) * n + p] += dout[p];
    const double gmean = dout[n + p] / C;
    for (int c = 0; c < C; ++c) dx[static_cast<size_t>(c) * n + p] += gmean;
  }
}

// row-wise softmax with per-row max subtraction
inline void softmax_rows_fwd(const double* x, int rows, int cols, double* out) {
  for (int i = 0; i < rows; ++i) {
    const double* r = x + static_cast<size_t>(i) * cols;
    double* o = out + static_cast<size_t>(i) * cols;
    double mx = r[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, r[j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      o[j] = std::exp(r[j] - mx);
      sum += o[j];
    }
    exp_count += static_cast<std::uint64_t>(cols);
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) o[j] *= inv;
  }
}

inline void softmax_rows_bwd(const double* out, int rows, int cols,
                             const double* dout, double* dx) {
  for (int i = 0; i < rows; ++i) {
    const double* o = out + static_cast<size_t>(i) * cols;
    const double* g = dout + static_cast<size_t>(i) * cols;
    double* d = dx + static_cast<size_t>(i) * cols;
    double dot = 0.0;
    for (int j = 0; j < cols; ++j) dot += g[j] * o[j];
    for (int j = 0; j < cols; ++j) d[j] += o[j] * (g[j] - dot);
  }
}

inline double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline void sigmoid_fwd(const double* x, long long n, double* out) {
  for (long long i = 0; i < n; ++i) out[i] = sigmoid(x[i]);
}

inline void sigmoid_bwd(const double* out, long long n, const double* dout,
                        double* dx) {
  for (long long i = 0; i < n; ++i) dx[i] += dout[i] * out[i] * (1.0 - out[i]);
}

inline void relu_fwd(const double* x, long long n, double* out) {
  for (long long i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

inline void relu_bwd(const double* x, long long n, const double* dout,
                     double* dx) {
  for (long long i = 0; i < n; ++i)
    if (x[i] > 0.0) dx[i] += dout[i];
}

// out(c, y, x) = in(c, y / factor, x / factor)
inline void nearest_upsample_fwd(const double* x, int C, int H, int W,
                                 int factor, double* out) {
  const int OH = H * factor, OW = W * factor;
  for (int c = 0; c < C; ++c) {
    const double* xi = x + static_cast<size_t>(c) * H * W;
    double* o = out + static_cast<size_t>(c) * OH * OW;
    for (int y = 0; y < OH; ++y)
      for (int xx = 0; xx < OW; ++xx)
        o[y * OW + xx] = xi[(y / factor) * W + (xx / factor)];
  }
}

inline void nearest_upsample_bwd(int C, int H, int W, int factor,
                                 const double* dout, double* dx) {
  const int OH = H * factor, OW = W * factor;
  for (int c = 0; c < C; ++c) {
    const double* g = dout + static_cast<size_t>(c) * OH * OW;
    double* d = dx + static_cast<size_t>(c) * H * W;
    for (int y = 0; y < OH; ++y)
      for (int xx = 0; xx < OW; ++xx)
        d[(y / factor) * W + (xx / factor)] += g[y * OW + xx];
  }
}

inline void crop2d_fwd(const double* x, int C, int H, int W, int OH, int OW,
                       double* out) {
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < OH; ++y)
      for (int xx = 0; xx < OW; ++xx)
        out[(static_cast<size_t>(c) * OH + y) * OW + xx] =
            x[(static_cast<size_t>(c) * H + y) * W + xx];
}

inline void crop2d_bwd(int C, int H, int W, int OH, int OW, const double* dout,
                       double* dx) {
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < OH; ++y)
      for (int xx = 0; xx < OW; ++xx)
        dx[(static_cast<size_t>(c) * H + y) * W + xx] +=
            dout[(static_cast<size_t>(c) * OH + y) * OW + xx];
}

// (rows x inner) * (inner x cols)
inline void matmul_fwd(const double* a, const double* b, int rows, int inner,
                       int cols, double* out) {
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < inner; ++k)
        acc += a[static_cast<size_t>(i) * inner + k] *
               b[static_cast<size_t>(k) * cols + j];
      out[static_cast<size_t>(i) * cols + j] = acc;
    }
  }
  madd_count +=
      static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) *
      static_cast<std::uint64_t>(inner);
}

inline void matmul_bwd(const double* a, const double* b, int rows, int inner,
                       int cols, const double* dout, double* da, double* db) {
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < inner; ++k) {
      double acc = 0.0;
      for (int j = 0; j < cols; ++j)
        acc += dout[static_cast<size_t>(i) * cols + j] *
               b[static_cast<size_t>(k) * cols + j];
      da[static_cast<size_t>(i) * inner + k] += acc;
    }
  }
  for (int k = 0; k < inner; ++k) {
    for (int j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (int i = 0; i < rows; ++i)
        acc += a[static_cast<size_t>(i) * inner + k] *
               dout[static_cast<size_t>(i) * cols + j];
      db[static_cast<size_t>(k) * cols + j] += acc;
    }
  }
}

inline void transpose_fwd(const double* x, int rows, int cols, double* out) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out[static_cast<size_t>(j) * rows + i] =
          x[static_cast<size_t>(i) * cols + j];
}

inline void transpose_bwd(int rows, int cols, const double* dout, double* dx) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      dx[static_cast<size_t>(i) * cols + j] +=
          dout[static_cast<size_t>(j) * rows + i];
}

// (C, H, W) -> (H*W, C); spatial index n = y * W + x
inline void rows_from_fm_fwd(const double* x, int C, int H, int W,
                             double* out) {
  const int n = H * W;
  for (int c = 0; c < C; ++c)
    for (int p = 0; p < n; ++p)
      out[static_cast<size_t>(p) * C + c] = x[static_cast<size_t>(c) * n + p];
}

inline void rows_from_fm_bwd(int C, int H, int W, const double* dout,
                             double* dx) {
  const int n = H * W;
  for (int c = 0; c < C; ++c)
    for (int p = 0; p < n; ++p)
      dx[static_cast<size_t>(c) * n + p] += dout[static_cast<size_t>(p) * C + c];
}

inline void fm_from_rows_fwd(const double* x, int C, int H, int W,
                             double* out) {
  const int n = H * W;
  for (int c = 0; c < C; ++c)
    for (int p = 0; p < n; ++p)
      out[static_cast<size_t>(c) * n + p] = x[static_cast<size_t>(p) * C + c];
}

inline void fm_from_rows_bwd(int C, int H, int W, const double* dout,
                             double* dx) {
  const int n = H * W;
  for (int c = 0; c < C; ++c)
    for (int p = 0; p < n; ++p)
      dx[static_cast<size_t>(p) * C + c] += dout[static_cast<size_t>(c) * n + p];
}

// Elementwise losses over a map with {0,1} targets and an inclusion mask.
// Probabilities are clamped to [1e-7, 1 - 1e-7]; the clamp is treated as a
// hard gate in the backward pass.
constexpr double kProbClamp = 1e-7;

inline double focal_fwd(const double* logits, const double* target01,
                        const double* include01, long long n, double alpha,
                        double gamma) {
  double loss = 0.0;
  for (long long i = 0; i < n; ++i) {
    if (include01[i] == 0.0) continue;
    const double p =
        std::clamp(sigmoid(logits[i]), kProbClamp, 1.0 - kProbClamp);
    if (target01[i] != 0.0)
      loss += -alpha * std::pow(1.0 - p, gamma) * std::log(p);
    else
      loss += -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
  }
  return loss;
}

inline void focal_bwd(const double* logits, const double* target01,
                      const double* include01, long long n, double alpha,
                      double gamma, double dloss, double* dlogits) {
  for (long long i = 0; i < n; ++i) {
    if (include01[i] == 0.0) continue;
    const double s = sigmoid(logits[i]);
    if (s <= kProbClamp || s >= 1.0 - kProbClamp) continue;  // clamped: flat
    const double dp_dz = s * (1.0 - s);
    double dl_dp;
    if (target01[i] != 0.0)
      dl_dp = -alpha * (-gamma * std::pow(1.0 - s, gamma - 1.0) * std::log(s) +
                        std::pow(1.0 - s, gamma) / s);
    else
      dl_dp = -(1.0 - alpha) *
              (gamma * std::pow(s, gamma - 1.0) * std::log(1.0 - s) -
               std::pow(s, gamma) / (1.0 - s));
    dlogits[i] += dloss * dl_dp * dp_dz;
  }
}

inline double smooth_l1_fwd(const double* pred, const double* target,
                            const double* include01, long long n,
                            double beta) {
  double loss = 0.0;
  for (long long i = 0; i < n; ++i) {
    if (include01[i] == 0.0) continue;
    const double d = pred[i] - target[i];
    const double a = std::abs(d);
    loss += a < beta ? 0.5 * d * d / beta : a - 0.5 * beta;
  }
  return loss;
}

inline void smooth_l1_bwd(const double* pred, const double* target,
                          const double* include01, long long n, double beta,
                          double dloss, double* dpred) {
  for (long long i = 0; i < n; ++i) {
    if (include01[i] == 0.0) continue;
    const double d = pred[i] - target[i];
    dpred[i] += dloss * (std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : -1.0));
  }
}

inline double bce_fwd(const double* logits, const double* target01,
                      const double* include01, long long n) {
  double loss = 0.0;
  for (long long i = 0; i < n; ++i) {
    if (include01[i] == 0.0) continue;
    const double p =
        std::clamp(sigmoid(logits[i]), kProbClamp, 1.0 - kProbClamp);
    loss += target01[i] != 0.0 ? -std::log(p) : -std::log(1.0 - p);
  }
  return loss;
}

inline void bce_bwd(const double* logits, const double* target01,
                    const double* include01, long long n, double dloss,
                    double* dlogits) {
  for (long long i = 0; i < n; ++i) {
    if (include01[i] == 0.0) continue;
    const double s = sigmoid(logits[i]);
    if (s <= kProbClamp || s >= 1.0 - kProbClamp) continue;
    dlogits[i] += dloss * (s - (target01[i] != 0.0 ? 1.0 : 0.0));
  }
}

}  // namespace dsa::ops
