#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsa/graph.hpp"
#include "dsa/rng.hpp"
#include "dsa/tensor.hpp"

namespace dsa {

enum class AttentionVariant { kSelfAttention, kCbam };

// One self-attention branch: Q/K/V projections plus the residual scale.
// stride 1 uses 1x1 projections at full resolution; stride 2 is the
// low-memory variant (1x1 or 3x3 kernels) with nearest-neighbor recovery.
struct SelfAttentionParams {
  ConvWeights wq, wk, wv;
  double gamma = 0.0;
  int stride = 1;

  void validate() const {
    wq.validate();
    wk.validate();
    wv.validate();
    auto same = [&](const ConvWeights& a) {
      return a.out_channels == wq.out_channels &&
             a.in_channels == wq.in_channels && a.kernel_h == wq.kernel_h &&
             a.kernel_w == wq.kernel_w;
    };
    if (!same(wk) || !same(wv))
      fail("SelfAttentionParams: q/k/v projections must share one shape");
    if (wq.out_channels != wq.in_channels)
      fail("SelfAttentionParams: projections must preserve channel count");
    if (wq.kernel_h != wq.kernel_w ||
        (wq.kernel_h != 1 && wq.kernel_h != 3))
      fail("SelfAttentionParams: kernel must be 1x1 or 3x3");
    if (stride != 1 && stride != 2)
      fail("SelfAttentionParams: stride must be 1 or 2");
    if (stride == 1 && wq.kernel_h != 1)
      fail("SelfAttentionParams: full-resolution branch requires 1x1 kernels");
    if (!std::isfinite(gamma)) fail("SelfAttentionParams: non-finite gamma");
  }
};

// Spatial gate branch: one 7x7 convolution over the [max, avg] channel pools,
// one output channel shared by every input channel.
struct CbamParams {
  ConvWeights w7;  // 1 x 2 x 7 x 7
  double gamma = 0.0;

  void validate() const {
    w7.validate();
    if (w7.out_channels != 1 || w7.in_channels != 2 || w7.kernel_h != 7 ||
        w7.kernel_w != 7)
      fail("CbamParams: expected a 1x2x7x7 kernel");
  }
};

struct AttentionTensors {
  Matrix q, k, v;       // N x d_k each
  Matrix weights;       // N x N, filled by scaled_dot_attention
};

// Captured attention state for export/diagnostics.
struct AttentionRecord {
  int level = 0;
  std::string branch;          // "cls" or "loc"
  bool self_attention = true;
  Matrix weights;              // row-stochastic N' x N' (self-attention)
  FeatureMap mask;             // 1 x H x W (cbam)
  int att_h = 0, att_w = 0;    // spatial grid behind the weight rows
  double gamma = 0.0;
};

// The two-branch module configuration. shared = true means both tasks use
// one parameter set (and one output); decoupled branches are disjoint.
struct DsaModuleParams {
  AttentionVariant variant = AttentionVariant::kSelfAttention;
  bool shared = false;
  bool strided = false;
  int stride_kernel = 1;  // 1 or 3
  SelfAttentionParams cls_sa, loc_sa;
  CbamParams cls_cb, loc_cb;

  const SelfAttentionParams& sa(bool cls) const {
    return cls || shared ? cls_sa : loc_sa;
  }
  const CbamParams& cb(bool cls) const {
    return cls || shared ? cls_cb : loc_cb;
  }
};

// ---------------------------------------------------------------------------
// graph builders

struct SelfAttentionNodes {
  NodeId wq = 0, bq = 0, wk = 0, bk = 0, wv = 0, bv = 0, gamma = 0;
  int stride = 1;
  int kernel = 1;
};

struct CbamNodes {
  NodeId w7 = 0, b7 = 0, gamma = 0;
};

struct BranchBuild {
  NodeId out = 0;      // residual_combine(f, att, gamma)
  NodeId att = 0;      // attention feature, same shape as f
  NodeId weights = 0;  // softmax weights (self-attention) or mask (cbam)
  bool self_attention = true;
  int att_h = 0, att_w = 0;
};

inline BranchBuild build_self_attention_branch(Graph& g, NodeId f,
                                               const SelfAttentionNodes& p) {
  const auto& fs = g.shape(f);
  const int C = fs[0], H = fs[1], W = fs[2];
  if (p.stride == 2 && (H < 2 || W < 2))
    fail("self_attention: strided branch needs H, W >= 2, got " +
         std::to_string(H) + "x" + std::to_string(W));
  const int pad = p.kernel == 3 ? 1 : 0;
  const NodeId q = g.conv2d(f, p.wq, p.bq, p.stride, pad);
  const NodeId k = g.conv2d(f, p.wk, p.bk, p.stride, pad);
  const NodeId v = g.conv2d(f, p.wv, p.bv, p.stride, pad);
  const auto& qs = g.shape(q);
  const int ah = qs[1], aw = qs[2];
  const NodeId qm = g.rows_from_fm(q);
  const NodeId km = g.rows_from_fm(k);
  const NodeId vm = g.rows_from_fm(v);
  const NodeId scores =
      g.const_scale(g.matmul(qm, g.transpose(km)), 1.0 / std::sqrt(double(C)));
  const NodeId weights = g.softmax_rows(scores);
  NodeId att = g.fm_from_rows(g.matmul(weights, vm), ah, aw);
  if (p.stride == 2) att = g.crop2d(g.nearest_upsample(att, 2), H, W);

  BranchBuild b;
  b.att = att;
  b.out = g.residual_combine(f, att, p.gamma);
  b.weights = weights;
  b.self_attention = true;
  b.att_h = ah;
  b.att_w = aw;
  return b;
}

inline BranchBuild build_cbam_branch(Graph& g, NodeId f, const CbamNodes& p) {
  const auto& fs = g.shape(f);
  const NodeId pooled = g.channel_pool_concat(f);
  const NodeId mask = g.sigmoid(g.conv2d(pooled, p.w7, p.b7, 1, 3));
  const NodeId att = g.mul_mask(f, mask);

  BranchBuild b;
  b.att = att;
  b.out = g.residual_combine(f, att, p.gamma);
  b.weights = mask;
  b.self_attention = false;
  b.att_h = fs[1];
  b.att_w = fs[2];
  return b;
}

// Registers branch parameters under `prefix` in the graph (creating the
// tensors on first use is the caller's job; see detector param init).
struct DsaModuleNodes {
  AttentionVariant variant = AttentionVariant::kSelfAttention;
  bool shared = false;
  SelfAttentionNodes cls_sa, loc_sa;
  CbamNodes cls_cb, loc_cb;
};

struct DsaBuild {
  NodeId cls_out = 0, loc_out = 0;
  BranchBuild cls_branch, loc_branch;
};

inline DsaBuild build_dsa_module(Graph& g, NodeId f, const DsaModuleNodes& p) {
  DsaBuild out;
  if (p.variant == AttentionVariant::kSelfAttention) {
    out.cls_branch = build_self_attention_branch(g, f, p.cls_sa);
    out.loc_branch = p.shared ? out.cls_branch
                              : build_self_attention_branch(g, f, p.loc_sa);
  } else {
    out.cls_branch = build_cbam_branch(g, f, p.cls_cb);
    out.loc_branch =
        p.shared ? out.cls_branch : build_cbam_branch(g, f, p.loc_cb);
  }
  out.cls_out = out.cls_branch.out;
  out.loc_out = out.loc_branch.out;
  return out;
}

// ---------------------------------------------------------------------------
// eager entry points (single forward pass through the same kernels)

namespace detail {

inline NodeId conv_w(Graph& g, const ConvWeights& w) {
  return g.input(Tensor(
      {w.out_channels, w.in_channels, w.kernel_h, w.kernel_w}, w.weights));
}
inline NodeId conv_b(Graph& g, const ConvWeights& w) {
  return g.input(Tensor({w.out_channels}, w.bias));
}

inline SelfAttentionNodes sa_nodes(Graph& g, const SelfAttentionParams& p) {
  p.validate();
  SelfAttentionNodes n;
  n.wq = conv_w(g, p.wq);
  n.bq = conv_b(g, p.wq);
  n.wk = conv_w(g, p.wk);
  n.bk = conv_b(g, p.wk);
  n.wv = conv_w(g, p.wv);
  n.bv = conv_b(g, p.wv);
  n.gamma = g.input(Tensor({1}, {p.gamma}));
  n.stride = p.stride;
  n.kernel = p.wq.kernel_h;
  return n;
}

inline CbamNodes cbam_nodes(Graph& g, const CbamParams& p) {
  p.validate();
  CbamNodes n;
  n.w7 = conv_w(g, p.w7);
  n.b7 = conv_b(g, p.w7);
  n.gamma = g.input(Tensor({1}, {p.gamma}));
  return n;
}

inline AttentionRecord make_record(const Graph& g, const BranchBuild& b,
                                   int level, const std::string& branch,
                                   double gamma) {
  AttentionRecord r;
  r.level = level;
  r.branch = branch;
  r.self_attention = b.self_attention;
  r.att_h = b.att_h;
  r.att_w = b.att_w;
  r.gamma = gamma;
  if (b.self_attention)
    r.weights = mat_from(g.shape(b.weights), g.value(b.weights));
  else
    r.mask = fm_from(g.shape(b.weights), g.value(b.weights));
  return r;
}

}  // namespace detail

inline Matrix scaled_dot_attention(AttentionTensors& t) {
  if (t.q.rows == 0 || t.q.cols == 0)
    fail("scaled_dot_attention: N and d_k must be positive");
  if (t.k.rows != t.q.rows || t.v.rows != t.q.rows ||
      t.k.cols != t.q.cols || t.v.cols != t.q.cols)
    fail("scaled_dot_attention: q/k/v must share one N x d_k shape");
  Graph g;
  const NodeId qn = g.input(to_tensor(t.q));
  const NodeId kn = g.input(to_tensor(t.k));
  const NodeId vn = g.input(to_tensor(t.v));
  const NodeId scores = g.const_scale(g.matmul(qn, g.transpose(kn)),
                                      1.0 / std::sqrt(double(t.q.cols)));
  const NodeId w = g.softmax_rows(scores);
  const NodeId out = g.matmul(w, vn);
  g.forward();
  t.weights = mat_from(g.shape(w), g.value(w));
  return mat_from(g.shape(out), g.value(out));
}

inline std::pair<FeatureMap, FeatureMap> cbam_spatial_attention(
    const FeatureMap& f, const CbamParams& p) {
  Graph g;
  const NodeId fn = g.input(to_tensor(f));
  const auto nodes = detail::cbam_nodes(g, p);
  const BranchBuild b = build_cbam_branch(g, fn, nodes);
  g.forward();
  return {fm_from(g.shape(b.weights), g.value(b.weights)),
          fm_from(g.shape(b.att), g.value(b.att))};
}

inline std::pair<FeatureMap, std::optional<AttentionRecord>>
self_attention_branch(const FeatureMap& f, const SelfAttentionParams& p,
                      bool capture = false) {
  if (p.stride != 1)
    fail("self_attention_branch: expected the full-resolution branch");
  Graph g;
  const NodeId fn = g.input(to_tensor(f));
  const auto nodes = detail::sa_nodes(g, p);
  const BranchBuild b = build_self_attention_branch(g, fn, nodes);
  g.forward();
  std::optional<AttentionRecord> rec;
  if (capture) rec = detail::make_record(g, b, 0, "cls", p.gamma);
  return {fm_from(g.shape(b.att), g.value(b.att)), rec};
}

inline FeatureMap strided_self_attention_branch(const FeatureMap& f,
                                                const SelfAttentionParams& p) {
  if (p.stride != 2)
    fail("strided_self_attention_branch: params are not strided");
  Graph g;
  const NodeId fn = g.input(to_tensor(f));
  const auto nodes = detail::sa_nodes(g, p);
  const BranchBuild b = build_self_attention_branch(g, fn, nodes);
  g.forward();
  return fm_from(g.shape(b.att), g.value(b.att));
}

struct DsaForwardResult {
  FeatureMap cls_feature;
  FeatureMap loc_feature;
  std::vector<AttentionRecord> records;
};

inline DsaForwardResult dsa_forward(const FeatureMap& f,
                                    const DsaModuleParams& p,
                                    bool capture = false) {
  Graph g;
  const NodeId fn = g.input(to_tensor(f));
  DsaModuleNodes nodes;
  nodes.variant = p.variant;
  nodes.shared = p.shared;
  if (p.variant == AttentionVariant::kSelfAttention) {
    nodes.cls_sa = detail::sa_nodes(g, p.sa(true));
    if (!p.shared) nodes.loc_sa = detail::sa_nodes(g, p.sa(false));
  } else {
    nodes.cls_cb = detail::cbam_nodes(g, p.cb(true));
    if (!p.shared) nodes.loc_cb = detail::cbam_nodes(g, p.cb(false));
  }
  const DsaBuild b = build_dsa_module(g, fn, nodes);
  g.forward();

  DsaForwardResult out;
  out.cls_feature = fm_from(g.shape(b.cls_out), g.value(b.cls_out));
  out.loc_feature = fm_from(g.shape(b.loc_out), g.value(b.loc_out));
  const bool sa = p.variant == AttentionVariant::kSelfAttention;
  const double gcls = sa ? p.sa(true).gamma : p.cb(true).gamma;
  const double gloc = sa ? p.sa(false).gamma : p.cb(false).gamma;
  if (capture) {
    out.records.push_back(detail::make_record(g, b.cls_branch, 0, "cls", gcls));
    if (!p.shared)
      out.records.push_back(
          detail::make_record(g, b.loc_branch, 0, "loc", gloc));
  }
  return out;
}

// Random projection init: uniform in +-1/sqrt(fan-in), zero bias, zero gamma.
inline ConvWeights random_conv(Rng& rng, int out_c, int in_c, int k) {
  ConvWeights w(out_c, in_c, k, k);
  const double s = 1.0 / std::sqrt(double(in_c) * k * k);
  for (auto& v : w.weights) v = rng.uniform(-s, s);
  return w;
}

inline SelfAttentionParams random_sa_params(Rng& rng, int channels,
                                            int stride = 1, int kernel = 1) {
  SelfAttentionParams p;
  p.wq = random_conv(rng, channels, channels, kernel);
  p.wk = random_conv(rng, channels, channels, kernel);
  p.wv = random_conv(rng, channels, channels, kernel);
  p.stride = stride;
  return p;
}

inline CbamParams random_cbam_params(Rng& rng) {
  CbamParams p;
  p.w7 = random_conv(rng, 1, 2, 7);
  return p;
}

}  // namespace dsa
