#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dsa/ops.hpp"
#include "dsa/tensor.hpp"

namespace dsa {

// Named parameter tensors with a stable iteration order. The training loop
// owns mutation; graphs snapshot values at node-creation time.
struct ParamStore {
  std::vector<std::string> order;
  std::map<std::string, Tensor> values;
  std::set<std::string> frozen;  // excluded from optimizer updates

  Tensor& add(const std::string& name, Tensor t) {
    if (values.count(name)) fail("ParamStore: duplicate parameter " + name);
    order.push_back(name);
    return values.emplace(name, std::move(t)).first->second;
  }
  bool has(const std::string& name) const { return values.count(name) != 0; }
  Tensor& get(const std::string& name) {
    auto it = values.find(name);
    if (it == values.end()) fail("ParamStore: unknown parameter " + name);
    return it->second;
  }
  const Tensor& get(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) fail("ParamStore: unknown parameter " + name);
    return it->second;
  }
  long long total_size(const std::string& prefix = "") const {
    long long n = 0;
    for (const auto& name : order)
      if (name.rfind(prefix, 0) == 0) n += values.at(name).size();
    return n;
  }
};

enum class Op {
  kLeaf,
  kConv2d,            // in: x, w, b; i0 = stride, i1 = pad
  kRelu,
  kSigmoid,
  kChannelPoolConcat,
  kNearestUpsample,   // i0 = factor
  kCrop2d,            // i0 = out_h, i1 = out_w
  kAdd,
  kMulMask,           // x (C,H,W) * mask (1,H,W)
  kConstScale,        // c * x
  kResidualCombine,   // in: f, att, gamma (scalar node)
  kRowsFromFm,
  kFmFromRows,        // i0 = h, i1 = w
  kTranspose,
  kMatMul,
  kSoftmaxRows,
  kSum,
  kFocalLoss,
  kSmoothL1Loss,
  kBceLoss,
};

// Side data for loss nodes: targets/inclusion mask over the input map.
struct LossSide {
  std::vector<double> target;
  std::vector<double> include01;
  double alpha = 0.25;
  double gamma = 2.0;
  double beta = 1.0;
};

using NodeId = int;

// Record-based computation tape. Nodes are appended in construction order,
// which is a topological order by construction; backward is a reverse sweep.
// Single-threaded and deterministic.
class Graph {
 public:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<int> in;
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;
    int i0 = 0, i1 = 0;
    double c = 0.0;
    std::string pname;
    std::shared_ptr<LossSide> side;
  };

  NodeId input(Tensor t) {
    Node n;
    n.shape = t.shape;
    n.value = std::move(t.data);
    return push(std::move(n));
  }

  NodeId param(ParamStore& ps, const std::string& name) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return it->second;
    const Tensor& t = ps.get(name);
    Node n;
    n.shape = t.shape;
    n.value = t.data;
    n.pname = name;
    const NodeId id = push(std::move(n));
    param_nodes_[name] = id;
    param_list_.emplace_back(name, id);
    return id;
  }

  NodeId conv2d(NodeId x, NodeId w, NodeId b, int stride, int pad) {
    const auto& xs = shape(x);
    const auto& ws = shape(w);
    const auto& bs = shape(b);
    if (xs.size() != 3) fail("conv2d: input must be rank 3");
    if (ws.size() != 4) fail("conv2d: weights must be rank 4");
    const int O = ws[0], I = ws[1], kh = ws[2], kw = ws[3];
    if (!ops::conv_shape_supported(kh, kw, stride, pad))
      fail("conv2d: unsupported kernel " + std::to_string(kh) + "x" +
           std::to_string(kw) + " stride " + std::to_string(stride) +
           " pad " + std::to_string(pad));
    if (I != xs[0])
      fail("conv2d: input channels " + std::to_string(xs[0]) +
           " do not match weight in_channels " + std::to_string(I));
    if (bs.size() != 1 || bs[0] != O)
      fail("conv2d: bias length must equal out_channels " + std::to_string(O));
    const int OH = ops::conv_out_dim(xs[1], kh, stride, pad);
    const int OW = ops::conv_out_dim(xs[2], kw, stride, pad);
    if (OH < 1 || OW < 1)
      fail("conv2d: output dims degenerate for input " +
           std::to_string(xs[1]) + "x" + std::to_string(xs[2]));
    Node n;
    n.op = Op::kConv2d;
    n.in = {x, w, b};
    n.i0 = stride;
    n.i1 = pad;
    n.shape = {O, OH, OW};
    return push(std::move(n));
  }

  NodeId relu(NodeId x) { return unary(Op::kRelu, x); }
  NodeId sigmoid(NodeId x) { return unary(Op::kSigmoid, x); }

  NodeId channel_pool_concat(NodeId x) {
    const auto& xs = shape(x);
    if (xs.size() != 3) fail("channel_pool_concat: input must be rank 3");
    Node n;
    n.op = Op::kChannelPoolConcat;
    n.in = {x};
    n.shape = {2, xs[1], xs[2]};
    return push(std::move(n));
  }

  NodeId nearest_upsample(NodeId x, int factor) {
    const auto& xs = shape(x);
    if (xs.size() != 3) fail("nearest_upsample: input must be rank 3");
    if (factor < 1) fail("nearest_upsample: factor must be >= 1");
    Node n;
    n.op = Op::kNearestUpsample;
    n.in = {x};
    n.i0 = factor;
    n.shape = {xs[0], xs[1] * factor, xs[2] * factor};
    return push(std::move(n));
  }

  NodeId crop2d(NodeId x, int h, int w) {
    const auto& xs = shape(x);
    if (xs.size() != 3) fail("crop2d: input must be rank 3");
    if (h < 1 || w < 1 || h > xs[1] || w > xs[2])
      fail("crop2d: target " + std::to_string(h) + "x" + std::to_string(w) +
           " outside input " + std::to_string(xs[1]) + "x" +
           std::to_string(xs[2]));
    Node n;
    n.op = Op::kCrop2d;
    n.in = {x};
    n.i0 = h;
    n.i1 = w;
    n.shape = {xs[0], h, w};
    return push(std::move(n));
  }

  NodeId add(NodeId a, NodeId b) {
    if (shape(a) != shape(b)) fail("add: shape mismatch");
    Node n;
    n.op = Op::kAdd;
    n.in = {a, b};
    n.shape = shape(a);
    return push(std::move(n));
  }

  NodeId mul_mask(NodeId x, NodeId mask) {
    const auto& xs = shape(x);
    const auto& ms = shape(mask);
    if (xs.size() != 3 || ms.size() != 3 || ms[0] != 1 || ms[1] != xs[1] ||
        ms[2] != xs[2])
      fail("mul_mask: mask must be 1x(H)x(W) matching input");
    Node n;
    n.op = Op::kMulMask;
    n.in = {x, mask};
    n.shape = xs;
    return push(std::move(n));
  }

  NodeId const_scale(NodeId x, double c) {
    Node n;
    n.op = Op::kConstScale;
    n.in = {x};
    n.c = c;
    n.shape = shape(x);
    return push(std::move(n));
  }

  NodeId residual_combine(NodeId f, NodeId att, NodeId gamma) {
    if (shape(f) != shape(att)) fail("residual_combine: shape mismatch");
    if (numel(shape(gamma)) != 1)
      fail("residual_combine: gamma must be a scalar");
    Node n;
    n.op = Op::kResidualCombine;
    n.in = {f, att, gamma};
    n.shape = shape(f);
    return push(std::move(n));
  }

  NodeId rows_from_fm(NodeId x) {
    const auto& xs = shape(x);
    if (xs.size() != 3) fail("rows_from_fm: input must be rank 3");
    Node n;
    n.op = Op::kRowsFromFm;
    n.in = {x};
    n.shape = {xs[1] * xs[2], xs[0]};
    return push(std::move(n));
  }

  NodeId fm_from_rows(NodeId x, int h, int w) {
    const auto& xs = shape(x);
    if (xs.size() != 2) fail("fm_from_rows: input must be rank 2");
    if (xs[0] != h * w)
      fail("fm_from_rows: rows " + std::to_string(xs[0]) + " != " +
           std::to_string(h) + "*" + std::to_string(w));
    Node n;
    n.op = Op::kFmFromRows;
    n.in = {x};
    n.i0 = h;
    n.i1 = w;
    n.shape = {xs[1], h, w};
    return push(std::move(n));
  }

  NodeId transpose(NodeId x) {
    const auto& xs = shape(x);
    if (xs.size() != 2) fail("transpose: input must be rank 2");
    Node n;
    n.op = Op::kTranspose;
    n.in = {x};
    n.shape = {xs[1], xs[0]};
    return push(std::move(n));
  }

  NodeId matmul(NodeId a, NodeId b) {
    const auto& as = shape(a);
    const auto& bs = shape(b);
    if (as.size() != 2 || bs.size() != 2) fail("matmul: inputs must be rank 2");
    if (as[1] != bs[0])
      fail("matmul: inner dims " + std::to_string(as[1]) + " vs " +
           std::to_string(bs[0]));
    Node n;
    n.op = Op::kMatMul;
    n.in = {a, b};
    n.shape = {as[0], bs[1]};
    return push(std::move(n));
  }

  NodeId softmax_rows(NodeId x) {
    const auto& xs = shape(x);
    if (xs.size() != 2) fail("softmax_rows: input must be rank 2");
    Node n;
    n.op = Op::kSoftmaxRows;
    n.in = {x};
    n.shape = xs;
    return push(std::move(n));
  }

  NodeId sum(NodeId x) {
    Node n;
    n.op = Op::kSum;
    n.in = {x};
    n.shape = {1};
    return push(std::move(n));
  }

  NodeId focal_loss(NodeId logits, std::shared_ptr<LossSide> side) {
    return loss_node(Op::kFocalLoss, logits, std::move(side));
  }
  NodeId smooth_l1_loss(NodeId pred, std::shared_ptr<LossSide> side) {
    return loss_node(Op::kSmoothL1Loss, pred, std::move(side));
  }
  NodeId bce_loss(NodeId logits, std::shared_ptr<LossSide> side) {
    return loss_node(Op::kBceLoss, logits, std::move(side));
  }

  // by value: node storage may reallocate while callers still hold the shape
  std::vector<int> shape(NodeId id) const { return nodes_[id].shape; }
  const std::vector<double>& value(NodeId id) const {
    return nodes_[id].value;
  }
  const std::vector<double>& grad(NodeId id) const { return nodes_[id].grad; }
  std::vector<double>& mutable_value(NodeId id) { return nodes_[id].value; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<std::pair<std::string, NodeId>>& params() const {
    return param_list_;
  }

  void forward() {
    for (auto& n : nodes_) eval(n);
  }

  void backward(NodeId root, const std::vector<double>& seed) {
    if (seed.size() != nodes_[root].value.size())
      fail("backward: seed size " + std::to_string(seed.size()) +
           " does not match root size " +
           std::to_string(nodes_[root].value.size()));
    for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
    nodes_[root].grad = seed;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
      propagate(nodes_[i]);
  }

  void backward(NodeId root) { backward(root, {1.0}); }

 private:
  NodeId unary(Op op, NodeId x) {
    Node n;
    n.op = op;
    n.in = {x};
    n.shape = shape(x);
    return push(std::move(n));
  }

  NodeId loss_node(Op op, NodeId x, std::shared_ptr<LossSide> side) {
    const auto sz = nodes_[x].value.size();
    if (side->target.size() != sz || side->include01.size() != sz)
      fail("loss: side arrays must match input size");
    Node n;
    n.op = op;
    n.in = {x};
    n.shape = {1};
    n.side = std::move(side);
    return push(std::move(n));
  }

  NodeId push(Node n) {
    if (n.op != Op::kLeaf) n.value.assign(static_cast<size_t>(numel(n.shape)), 0.0);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void eval(Node& n) {
    auto* nd = nodes_.data();
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kConv2d: {
        const Node& x = nd[n.in[0]];
        const Node& w = nd[n.in[1]];
        const Node& b = nd[n.in[2]];
        ops::conv2d_fwd(x.value.data(), x.shape[0], x.shape[1], x.shape[2],
                        w.value.data(), b.value.data(), w.shape[0], w.shape[2],
                        w.shape[3], n.i0, n.i1, n.value.data(), n.shape[1],
                        n.shape[2]);
        break;
      }
      case Op::kRelu:
        ops::relu_fwd(nd[n.in[0]].value.data(), n.value.size(),
                      n.value.data());
        break;
      case Op::kSigmoid:
        ops::sigmoid_fwd(nd[n.in[0]].value.data(), n.value.size(),
                         n.value.data());
        break;
      case Op::kChannelPoolConcat: {
        const Node& x = nd[n.in[0]];
        ops::channel_pool_concat_fwd(x.value.data(), x.shape[0], x.shape[1],
                                     x.shape[2], n.value.data());
        break;
      }
      case Op::kNearestUpsample: {
        const Node& x = nd[n.in[0]];
        ops::nearest_upsample_fwd(x.value.data(), x.shape[0], x.shape[1],
                                  x.shape[2], n.i0, n.value.data());
        break;
      }
      case Op::kCrop2d: {
        const Node& x = nd[n.in[0]];
        ops::crop2d_fwd(x.value.data(), x.shape[0], x.shape[1], x.shape[2],
                        n.i0, n.i1, n.value.data());
        break;
      }
      case Op::kAdd: {
        const auto& a = nd[n.in[0]].value;
        const auto& b = nd[n.in[1]].value;
        for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = a[i] + b[i];
        break;
      }
      case Op::kMulMask: {
        const Node& x = nd[n.in[0]];
        const auto& m = nd[n.in[1]].value;
        const size_t hw = m.size();
        for (int c = 0; c < x.shape[0]; ++c)
          for (size_t p = 0; p < hw; ++p)
            n.value[c * hw + p] = x.value[c * hw + p] * m[p];
        break;
      }
      case Op::kConstScale: {
        const auto& x = nd[n.in[0]].value;
        for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = n.c * x[i];
        break;
      }
      case Op::kResidualCombine: {
        const auto& f = nd[n.in[0]].value;
        const auto& att = nd[n.in[1]].value;
        const double g = nd[n.in[2]].value[0];
        if (g == 0.0) {
          n.value = f;  // exact identity at init
        } else {
          for (size_t i = 0; i < n.value.size(); ++i)
            n.value[i] = f[i] + g * att[i];
        }
        break;
      }
      case Op::kRowsFromFm: {
        const Node& x = nd[n.in[0]];
        ops::rows_from_fm_fwd(x.value.data(), x.shape[0], x.shape[1],
                              x.shape[2], n.value.data());
        break;
      }
      case Op::kFmFromRows: {
        const Node& x = nd[n.in[0]];
        ops::fm_from_rows_fwd(x.value.data(), n.shape[0], n.i0, n.i1,
                              n.value.data());
        break;
      }
      case Op::kTranspose: {
        const Node& x = nd[n.in[0]];
        ops::transpose_fwd(x.value.data(), x.shape[0], x.shape[1],
                           n.value.data());
        break;
      }
      case Op::kMatMul: {
        const Node& a = nd[n.in[0]];
        const Node& b = nd[n.in[1]];
        ops::matmul_fwd(a.value.data(), b.value.data(), a.shape[0], a.shape[1],
                        b.shape[1], n.value.data());
        break;
      }
      case Op::kSoftmaxRows: {
        const Node& x = nd[n.in[0]];
        ops::softmax_rows_fwd(x.value.data(), x.shape[0], x.shape[1],
                              n.value.data());
        break;
      }
      case Op::kSum: {
        const auto& x = nd[n.in[0]].value;
        double s = 0.0;
        for (double v : x) s += v;
        n.value[0] = s;
        break;
      }
      case Op::kFocalLoss: {
        const Node& x = nd[n.in[0]];
        n.value[0] = ops::focal_fwd(x.value.data(), n.side->target.data(),
                                    n.side->include01.data(), x.value.size(),
                                    n.side->alpha, n.side->gamma);
        break;
      }
      case Op::kSmoothL1Loss: {
        const Node& x = nd[n.in[0]];
        n.value[0] = ops::smooth_l1_fwd(x.value.data(), n.side->target.data(),
                                        n.side->include01.data(),
                                        x.value.size(), n.side->beta);
        break;
      }
      case Op::kBceLoss: {
        const Node& x = nd[n.in[0]];
        n.value[0] = ops::bce_fwd(x.value.data(), n.side->target.data(),
                                  n.side->include01.data(), x.value.size());
        break;
      }
    }
  }

  void propagate(Node& n) {
    auto* nd = nodes_.data();
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kConv2d: {
        Node& x = nd[n.in[0]];
        Node& w = nd[n.in[1]];
        Node& b = nd[n.in[2]];
        ops::conv2d_bwd(x.value.data(), x.shape[0], x.shape[1], x.shape[2],
                        w.value.data(), w.shape[0], w.shape[2], w.shape[3],
                        n.i0, n.i1, n.grad.data(), n.shape[1], n.shape[2],
                        x.grad.data(), w.grad.data(), b.grad.data());
        break;
      }
      case Op::kRelu: {
        Node& x = nd[n.in[0]];
        ops::relu_bwd(x.value.data(), n.grad.size(), n.grad.data(),
                      x.grad.data());
        break;
      }
      case Op::kSigmoid: {
        Node& x = nd[n.in[0]];
        ops::sigmoid_bwd(n.value.data(), n.grad.size(), n.grad.data(),
                         x.grad.data());
        break;
      }
      case Op::kChannelPoolConcat: {
        Node& x = nd[n.in[0]];
        ops::channel_pool_concat_bwd(x.value.data(), x.shape[0], x.shape[1],
                                     x.shape[2], n.grad.data(), x.grad.data());
        break;
      }
      case Op::kNearestUpsample: {
        Node& x = nd[n.in[0]];
        ops::nearest_upsample_bwd(x.shape[0], x.shape[1], x.shape[2], n.i0,
                                  n.grad.data(), x.grad.data());
        break;
      }
      case Op::kCrop2d: {
        Node& x = nd[n.in[0]];
        ops::crop2d_bwd(x.shape[0], x.shape[1], x.shape[2], n.i0, n.i1,
                        n.grad.data(), x.grad.data());
        break;
      }
      case Op::kAdd: {
        Node& a = nd[n.in[0]];
        Node& b = nd[n.in[1]];
        for (size_t i = 0; i < n.grad.size(); ++i) {
          a.grad[i] += n.grad[i];
          b.grad[i] += n.grad[i];
        }
        break;
      }
      case Op::kMulMask: {
        Node& x = nd[n.in[0]];
        Node& m = nd[n.in[1]];
        const size_t hw = m.value.size();
        for (int c = 0; c < x.shape[0]; ++c)
          for (size_t p = 0; p < hw; ++p) {
            x.grad[c * hw + p] += n.grad[c * hw + p] * m.value[p];
            m.grad[p] += n.grad[c * hw + p] * x.value[c * hw + p];
          }
        break;
      }
      case Op::kConstScale: {
        Node& x = nd[n.in[0]];
        for (size_t i = 0; i < n.grad.size(); ++i)
          x.grad[i] += n.c * n.grad[i];
        break;
      }
      case Op::kResidualCombine: {
        Node& f = nd[n.in[0]];
        Node& att = nd[n.in[1]];
        Node& gm = nd[n.in[2]];
        const double g = gm.value[0];
        double dg = 0.0;
        for (size_t i = 0; i < n.grad.size(); ++i) {
          f.grad[i] += n.grad[i];
          att.grad[i] += g * n.grad[i];
          dg += att.value[i] * n.grad[i];
        }
        gm.grad[0] += dg;
        break;
      }
      case Op::kRowsFromFm: {
        Node& x = nd[n.in[0]];
        ops::rows_from_fm_bwd(x.shape[0], x.shape[1], x.shape[2],
                              n.grad.data(), x.grad.data());
        break;
      }
      case Op::kFmFromRows: {
        Node& x = nd[n.in[0]];
        ops::fm_from_rows_bwd(n.shape[0], n.i0, n.i1, n.grad.data(),
                              x.grad.data());
        break;
      }
      case Op::kTranspose: {
        Node& x = nd[n.in[0]];
        ops::transpose_bwd(x.shape[0], x.shape[1], n.grad.data(),
                           x.grad.data());
        break;
      }
      case Op::kMatMul: {
        Node& a = nd[n.in[0]];
        Node& b = nd[n.in[1]];
        ops::matmul_bwd(a.value.data(), b.value.data(), a.shape[0], a.shape[1],
                        b.shape[1], n.grad.data(), a.grad.data(),
                        b.grad.data());
        break;
      }
      case Op::kSoftmaxRows: {
        Node& x = nd[n.in[0]];
        ops::softmax_rows_bwd(n.value.data(), n.shape[0], n.shape[1],
                              n.grad.data(), x.grad.data());
        break;
      }
      case Op::kSum: {
        Node& x = nd[n.in[0]];
        for (size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += n.grad[0];
        break;
      }
      case Op::kFocalLoss: {
        Node& x = nd[n.in[0]];
        ops::focal_bwd(x.value.data(), n.side->target.data(),
                       n.side->include01.data(), x.value.size(),
                       n.side->alpha, n.side->gamma, n.grad[0],
                       x.grad.data());
        break;
      }
      case Op::kSmoothL1Loss: {
        Node& x = nd[n.in[0]];
        ops::smooth_l1_bwd(x.value.data(), n.side->target.data(),
                           n.side->include01.data(), x.value.size(),
                           n.side->beta, n.grad[0], x.grad.data());
        break;
      }
      case Op::kBceLoss: {
        Node& x = nd[n.in[0]];
        ops::bce_bwd(x.value.data(), n.side->target.data(),
                     n.side->include01.data(), x.value.size(), n.grad[0],
                     x.grad.data());
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::map<std::string, NodeId> param_nodes_;
  std::vector<std::pair<std::string, NodeId>> param_list_;
};

// Eager single-op helpers used by tests and tooling; they run the same graph
// kernels the model uses.
inline FeatureMap conv2d(const FeatureMap& x, const ConvWeights& w, int stride,
                         int pad) {
  w.validate();
  Graph g;
  const NodeId xn = g.input(to_tensor(x));
  const NodeId wn = g.input(
      Tensor({w.out_channels, w.in_channels, w.kernel_h, w.kernel_w},
             w.weights));
  const NodeId bn = g.input(Tensor({w.out_channels}, w.bias));
  const NodeId y = g.conv2d(xn, wn, bn, stride, pad);
  g.forward();
  return fm_from(g.shape(y), g.value(y));
}

inline FeatureMap channel_pool_concat(const FeatureMap& x) {
  Graph g;
  const NodeId y = g.channel_pool_concat(g.input(to_tensor(x)));
  g.forward();
  return fm_from(g.shape(y), g.value(y));
}

inline Matrix softmax_rows(const Matrix& m) {
  Graph g;
  const NodeId y = g.softmax_rows(g.input(to_tensor(m)));
  g.forward();
  return mat_from(g.shape(y), g.value(y));
}

inline FeatureMap sigmoid_map(const FeatureMap& x) {
  Graph g;
  const NodeId y = g.sigmoid(g.input(to_tensor(x)));
  g.forward();
  return fm_from(g.shape(y), g.value(y));
}

inline FeatureMap nearest_upsample(const FeatureMap& x, int factor) {
  Graph g;
  const NodeId y = g.nearest_upsample(g.input(to_tensor(x)), factor);
  g.forward();
  return fm_from(g.shape(y), g.value(y));
}

inline FeatureMap residual_combine(const FeatureMap& f, const FeatureMap& att,
                                   double gamma) {
  Graph g;
  const NodeId y = g.residual_combine(g.input(to_tensor(f)),
                                      g.input(to_tensor(att)),
                                      g.input(Tensor({1}, {gamma})));
  g.forward();
  return fm_from(g.shape(y), g.value(y));
}

}  // namespace dsa
