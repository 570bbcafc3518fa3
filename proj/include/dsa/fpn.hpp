#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dsa/graph.hpp"
#include "dsa/rng.hpp"
#include "dsa/tensor.hpp"

namespace dsa {

// Eager pyramid of feature maps with stride metadata, levels P3..P7.
struct FeaturePyramid {
  struct Level {
    int level = 0;
    int stride = 0;
    FeatureMap map;
  };
  std::vector<Level> levels;
};

struct PyramidNodes {
  struct Level {
    int level = 0;
    int stride = 0;
    NodeId node = 0;
  };
  std::vector<Level> levels;
};

// Parameters are initialized from a stream keyed by (seed, name), so adding
// or removing unrelated parameter groups never changes anyone else's draw.
inline void add_conv_param(ParamStore& ps, std::uint64_t init_key,
                           const std::string& name, int out_c, int in_c,
                           int k, double bias_init = 0.0) {
  Rng rng(Rng::derive(init_key, name));
  Tensor w({out_c, in_c, k, k});
  const double s = 1.0 / std::sqrt(double(in_c) * k * k);
  for (auto& v : w.data) v = rng.uniform(-s, s);
  ps.add(name + ".w", std::move(w));
  Tensor b({out_c});
  for (auto& v : b.data) v = bias_init;
  ps.add(name + ".b", std::move(b));
}

inline NodeId named_conv(Graph& g, ParamStore& ps, NodeId x,
                         const std::string& name, int stride, int pad) {
  return g.conv2d(x, g.param(ps, name + ".w"), g.param(ps, name + ".b"),
                  stride, pad);
}

inline void register_fpn_params(ParamStore& ps, std::uint64_t init_key,
                                int channels) {
  add_conv_param(ps, init_key, "fpn.stem1", channels, 3, 3);
  add_conv_param(ps, init_key, "fpn.stem2", channels, channels, 3);
  add_conv_param(ps, init_key, "fpn.stem3", channels, channels, 3);
  add_conv_param(ps, init_key, "fpn.c4", channels, channels, 3);
  add_conv_param(ps, init_key, "fpn.c5", channels, channels, 3);
  add_conv_param(ps, init_key, "fpn.lat3", channels, channels, 1);
  add_conv_param(ps, init_key, "fpn.lat4", channels, channels, 1);
  add_conv_param(ps, init_key, "fpn.lat5", channels, channels, 1);
  add_conv_param(ps, init_key, "fpn.p6", channels, channels, 3);
  add_conv_param(ps, init_key, "fpn.p7", channels, channels, 3);
}

// Bottom-up strided stack to C3..C5 (ReLU after each conv), top-down
// nearest-upsample + 1x1 lateral fusion to P3..P5, extra stride-2 convs for
// P6 and P7. All levels share one channel count.
inline PyramidNodes build_toy_fpn(Graph& g, ParamStore& ps, NodeId image) {
  const auto& is = g.shape(image);
  if (is.size() != 3 || is[0] != 3) fail("build_toy_fpn: expected a 3xHxW image");
  if (is[1] < 8 || is[2] < 8)
    fail("build_toy_fpn: image " + std::to_string(is[1]) + "x" +
         std::to_string(is[2]) + " is smaller than the conv3 stride (8)");

  const NodeId s1 = g.relu(named_conv(g, ps, image, "fpn.stem1", 2, 1));
  const NodeId s2 = g.relu(named_conv(g, ps, s1, "fpn.stem2", 2, 1));
  const NodeId c3 = g.relu(named_conv(g, ps, s2, "fpn.stem3", 2, 1));
  const NodeId c4 = g.relu(named_conv(g, ps, c3, "fpn.c4", 2, 1));
  const NodeId c5 = g.relu(named_conv(g, ps, c4, "fpn.c5", 2, 1));

  const NodeId p5 = named_conv(g, ps, c5, "fpn.lat5", 1, 0);
  auto fuse = [&](NodeId lateral, NodeId top) {
    const auto& ls = g.shape(lateral);
    const NodeId up = g.crop2d(g.nearest_upsample(top, 2), ls[1], ls[2]);
    return g.add(lateral, up);
  };
  const NodeId p4 = fuse(named_conv(g, ps, c4, "fpn.lat4", 1, 0), p5);
  const NodeId p3 = fuse(named_conv(g, ps, c3, "fpn.lat3", 1, 0), p4);
  const NodeId p6 = named_conv(g, ps, c5, "fpn.p6", 2, 1);
  const NodeId p7 = named_conv(g, ps, g.relu(p6), "fpn.p7", 2, 1);

  PyramidNodes out;
  out.levels = {{3, 8, p3}, {4, 16, p4}, {5, 32, p5}, {6, 64, p6},
                {7, 128, p7}};
  return out;
}

inline FeaturePyramid eval_toy_fpn(ParamStore& ps, const FeatureMap& image) {
  Graph g;
  const NodeId img = g.input(to_tensor(image));
  const PyramidNodes nodes = build_toy_fpn(g, ps, img);
  g.forward();
  FeaturePyramid p;
  for (const auto& l : nodes.levels)
    p.levels.push_back(
        {l.level, l.stride, fm_from(g.shape(l.node), g.value(l.node))});
  return p;
}

}  // namespace dsa
