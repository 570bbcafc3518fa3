#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dsa/anchors.hpp"
#include "dsa/attention.hpp"
#include "dsa/boxes.hpp"
#include "dsa/fpn.hpp"
#include "dsa/graph.hpp"

namespace dsa {

enum class Placement { kNone, kBefore, kAfter };
enum class GammaMode { kLearned, kFixedOne };

constexpr double kFocalAlpha = 0.25;
constexpr double kFocalGamma = 2.0;
constexpr double kSmoothL1Beta = 1.0;
constexpr double kPosIouThr = 0.5;
constexpr double kNegIouThr = 0.4;
constexpr int kMaxDetections = 100;

struct DetectorConfig {
  int image_size = 64;
  int channels = 16;
  int classes = 4;
  int anchors_per_loc = 3;
  int head_depth = 4;
  Placement placement = Placement::kBefore;
  AttentionVariant variant = AttentionVariant::kSelfAttention;
  bool shared = false;
  bool strided = false;
  int stride_kernel = 1;  // 1 or 3
  int dsa_lo = 4, dsa_hi = 7;
  GammaMode gamma_mode = GammaMode::kLearned;
  bool with_confidence = false;
  double nms_iou = 0.5;
  ScoreMode score_mode = ScoreMode::kClsOnly;
  double score_floor = 0.05;

  bool uses_dsa(int level) const {
    return placement != Placement::kNone && level >= dsa_lo && level <= dsa_hi;
  }

  std::string dsa_prefix(int level, bool cls) const {
    return "dsa.l" + std::to_string(level) + "." +
           (shared ? "sh" : (cls ? "cls" : "loc"));
  }

  void validate() const {
    if (image_size < 8) fail("config: image_size must be >= 8");
    if (channels < 1) fail("config: channels must be positive");
    if (classes < 1 || classes > 4)
      fail("config: classes must be in 1..4 (one per interior pattern)");
    if (anchors_per_loc < 1) fail("config: anchors must be >= 1");
    if (head_depth < 1) fail("config: head_depth must be >= 1");
    if (stride_kernel != 1 && stride_kernel != 3)
      fail("config: stride_kernel must be 1 or 3");
    if (dsa_lo < 3 || dsa_hi > 7 || dsa_lo > dsa_hi)
      fail("config: dsa_levels must be a sub-range of 3..7");
    if (score_mode == ScoreMode::kClsTimesConf && !with_confidence)
      fail("config: score_mode clsxconf requires with_confidence");
    if (nms_iou < 0.0 || nms_iou > 1.0) fail("config: nms_iou out of range");
    if (score_floor < 0.0 || score_floor >= 1.0)
      fail("config: score_floor out of range");
  }
};

// ---------------------------------------------------------------------------
// parameters

inline ParamStore init_detector_params(const DetectorConfig& cfg,
                                       std::uint64_t seed) {
  cfg.validate();
  ParamStore ps;
  const std::uint64_t key = Rng::derive(seed, "init");
  const int C = cfg.channels;
  register_fpn_params(ps, key, C);

  const double cls_bias = -std::log(99.0);  // focal-stable start: p ~= 0.01
  auto head = [&](const std::string& branch, int pred_c, double pred_bias) {
    for (int k = 0; k < cfg.head_depth; ++k)
      add_conv_param(ps, key, "head." + branch + "." + std::to_string(k), C, C,
                     1);
    add_conv_param(ps, key, "head." + branch + ".pred", pred_c, C, 1,
                   pred_bias);
  };
  head("cls", cfg.anchors_per_loc * cfg.classes, cls_bias);
  head("loc", cfg.anchors_per_loc * 4, 0.0);
  if (cfg.with_confidence) head("conf", cfg.anchors_per_loc, cls_bias);

  if (cfg.placement != Placement::kNone) {
    const double gamma0 = cfg.gamma_mode == GammaMode::kFixedOne ? 1.0 : 0.0;
    for (int level = cfg.dsa_lo; level <= cfg.dsa_hi; ++level) {
      std::vector<bool> branches =
          cfg.shared ? std::vector<bool>{true} : std::vector<bool>{true, false};
      for (bool cls : branches) {
        const std::string pfx = cfg.dsa_prefix(level, cls);
        if (cfg.variant == AttentionVariant::kSelfAttention) {
          const int k = cfg.strided ? cfg.stride_kernel : 1;
          add_conv_param(ps, key, pfx + ".q", C, C, k);
          add_conv_param(ps, key, pfx + ".k", C, C, k);
          add_conv_param(ps, key, pfx + ".v", C, C, k);
        } else {
          add_conv_param(ps, key, pfx + ".w7", 1, 2, 7);
        }
        ps.add(pfx + ".gamma", Tensor({1}, {gamma0}));
        if (cfg.gamma_mode == GammaMode::kFixedOne)
          ps.frozen.insert(pfx + ".gamma");
      }
    }
  }
  return ps;
}

// ---------------------------------------------------------------------------
// model graph

struct ModelNodes {
  PyramidNodes pyramid;
  std::vector<NodeId> cls_map, loc_map, conf_map;
  struct Rec {
    int level;
    std::string branch;
    BranchBuild build;
    NodeId gamma;
  };
  std::vector<Rec> records;
};

inline SelfAttentionNodes sa_nodes_from_store(Graph& g, ParamStore& ps,
                                              const DetectorConfig& cfg,
                                              const std::string& pfx) {
  SelfAttentionNodes n;
  n.wq = g.param(ps, pfx + ".q.w");
  n.bq = g.param(ps, pfx + ".q.b");
  n.wk = g.param(ps, pfx + ".k.w");
  n.bk = g.param(ps, pfx + ".k.b");
  n.wv = g.param(ps, pfx + ".v.w");
  n.bv = g.param(ps, pfx + ".v.b");
  n.gamma = g.param(ps, pfx + ".gamma");
  n.stride = cfg.strided ? 2 : 1;
  n.kernel = cfg.strided ? cfg.stride_kernel : 1;
  return n;
}

inline BranchBuild build_dsa_branch(Graph& g, ParamStore& ps,
                                    const DetectorConfig& cfg, int level,
                                    bool cls, NodeId input) {
  const std::string pfx = cfg.dsa_prefix(level, cls);
  if (cfg.variant == AttentionVariant::kSelfAttention)
    return build_self_attention_branch(g, input,
                                       sa_nodes_from_store(g, ps, cfg, pfx));
  CbamNodes n;
  n.w7 = g.param(ps, pfx + ".w7.w");
  n.b7 = g.param(ps, pfx + ".w7.b");
  n.gamma = g.param(ps, pfx + ".gamma");
  return build_cbam_branch(g, input, n);
}

inline ModelNodes build_detector(Graph& g, ParamStore& ps,
                                 const DetectorConfig& cfg, NodeId image) {
  ModelNodes m;
  m.pyramid = build_toy_fpn(g, ps, image);

  auto trunk = [&](NodeId x, const std::string& branch) {
    for (int k = 0; k < cfg.head_depth; ++k)
      x = g.relu(named_conv(g, ps, x,
                            "head." + branch + "." + std::to_string(k), 1, 0));
    return x;
  };
  auto record = [&](int level, const std::string& branch,
                    const BranchBuild& b, NodeId gamma) {
    m.records.push_back({level, branch, b, gamma});
  };
  auto gamma_node = [&](int level, bool cls) {
    return g.param(ps, cfg.dsa_prefix(level, cls) + ".gamma");
  };

  for (const auto& lv : m.pyramid.levels) {
    NodeId cls_in = lv.node, loc_in = lv.node;
    if (cfg.placement == Placement::kBefore && cfg.uses_dsa(lv.level)) {
      const BranchBuild cb = build_dsa_branch(g, ps, cfg, lv.level, true,
                                              lv.node);
      const BranchBuild lb =
          cfg.shared ? cb : build_dsa_branch(g, ps, cfg, lv.level, false,
                                             lv.node);
      cls_in = cb.out;
      loc_in = lb.out;
      record(lv.level, "cls", cb, gamma_node(lv.level, true));
      if (!cfg.shared) record(lv.level, "loc", lb, gamma_node(lv.level, false));
    }
    NodeId tc = trunk(cls_in, "cls");
    NodeId tl = trunk(loc_in, "loc");
    if (cfg.placement == Placement::kAfter && cfg.uses_dsa(lv.level)) {
      const BranchBuild cb = build_dsa_branch(g, ps, cfg, lv.level, true, tc);
      const BranchBuild lb = build_dsa_branch(g, ps, cfg, lv.level, false, tl);
      tc = cb.out;
      tl = lb.out;
      record(lv.level, "cls", cb, gamma_node(lv.level, true));
      record(lv.level, "loc", lb, gamma_node(lv.level, false));
    }
    m.cls_map.push_back(named_conv(g, ps, tc, "head.cls.pred", 1, 0));
    m.loc_map.push_back(named_conv(g, ps, tl, "head.loc.pred", 1, 0));
    if (cfg.with_confidence)
      m.conf_map.push_back(
          named_conv(g, ps, trunk(lv.node, "conf"), "head.conf.pred", 1, 0));
  }
  return m;
}

inline std::vector<LevelShape> pyramid_shapes(const Graph& g,
                                              const ModelNodes& m) {
  std::vector<LevelShape> shapes;
  for (const auto& l : m.pyramid.levels) {
    const auto& s = g.shape(l.node);
    shapes.push_back({l.level, l.stride, s[1], s[2]});
  }
  return shapes;
}

// ---------------------------------------------------------------------------
// losses

struct LossBreakdown {
  double focal = 0.0;
  double box = 0.0;
  double confidence = 0.0;
  double total = 0.0;
};

struct LossGraph {
  NodeId focal = -1, box = -1, conf = -1, total = -1;
  int n_pos = 0;
};

inline LossGraph build_loss(Graph& g, const ModelNodes& m,
                            const DetectorConfig& cfg,
                            const AnchorSet& anchors,
                            const std::vector<GroundTruth>& gts) {
  std::vector<BoxCwh> flat;
  for (const auto& lvl : anchors.levels)
    flat.insert(flat.end(), lvl.anchors.begin(), lvl.anchors.end());
  const auto assign = assign_targets(flat, gts, kPosIouThr, kNegIouThr);

  int n_pos = 0;
  for (const auto& a : assign)
    if (a.kind == AnchorKind::kPositive) ++n_pos;
  const double norm = 1.0 / std::max(1, n_pos);

  const int A = cfg.anchors_per_loc, K = cfg.classes;
  NodeId focal_sum = -1, box_sum = -1, conf_sum = -1;
  size_t base = 0;
  for (size_t li = 0; li < anchors.levels.size(); ++li) {
    const auto& lvl = anchors.levels[li];
    const int H = lvl.shape.h, W = lvl.shape.w;
    const size_t hw = static_cast<size_t>(H) * W;

    auto cls_side = std::make_shared<LossSide>();
    cls_side->alpha = kFocalAlpha;
    cls_side->gamma = kFocalGamma;
    cls_side->target.assign(static_cast<size_t>(A) * K * hw, 0.0);
    cls_side->include01.assign(static_cast<size_t>(A) * K * hw, 1.0);
    auto box_side = std::make_shared<LossSide>();
    box_side->beta = kSmoothL1Beta;
    box_side->target.assign(static_cast<size_t>(A) * 4 * hw, 0.0);
    box_side->include01.assign(static_cast<size_t>(A) * 4 * hw, 0.0);
    auto conf_side = std::make_shared<LossSide>();
    conf_side->target.assign(static_cast<size_t>(A) * hw, 0.0);
    conf_side->include01.assign(static_cast<size_t>(A) * hw, 1.0);

    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int a = 0; a < A; ++a) {
          const size_t ai = base + (static_cast<size_t>(y) * W + x) * A + a;
          const size_t pos = static_cast<size_t>(y) * W + x;
          const Assignment& as = assign[ai];
          if (as.kind == AnchorKind::kIgnore) {
            for (int k = 0; k < K; ++k)
              cls_side->include01[(static_cast<size_t>(a) * K + k) * hw + pos] =
                  0.0;
            conf_side->include01[static_cast<size_t>(a) * hw + pos] = 0.0;
          } else if (as.kind == AnchorKind::kPositive) {
            cls_side->target[(static_cast<size_t>(a) * K +
                              gts[as.gt].class_id) * hw + pos] = 1.0;
            conf_side->target[static_cast<size_t>(a) * hw + pos] = 1.0;
            const auto deltas = encode_box(flat[ai], gts[as.gt].box);
            for (int j = 0; j < 4; ++j) {
              const size_t e = (static_cast<size_t>(a) * 4 + j) * hw + pos;
              box_side->target[e] = deltas[j];
              box_side->include01[e] = 1.0;
            }
          }
        }

    const NodeId f = g.focal_loss(m.cls_map[li], cls_side);
    const NodeId b = g.smooth_l1_loss(m.loc_map[li], box_side);
    focal_sum = focal_sum < 0 ? f : g.add(focal_sum, f);
    box_sum = box_sum < 0 ? b : g.add(box_sum, b);
    if (cfg.with_confidence) {
      const NodeId c = g.bce_loss(m.conf_map[li], conf_side);
      conf_sum = conf_sum < 0 ? c : g.add(conf_sum, c);
    }
    base += lvl.anchors.size();
  }

  LossGraph lg;
  lg.n_pos = n_pos;
  lg.focal = g.const_scale(focal_sum, norm);
  lg.box = g.const_scale(box_sum, norm);
  lg.total = g.add(lg.focal, lg.box);
  if (cfg.with_confidence) {
    lg.conf = g.const_scale(conf_sum, norm);
    lg.total = g.add(lg.total, lg.conf);
  }
  return lg;
}

inline LossBreakdown read_loss(const Graph& g, const LossGraph& lg) {
  LossBreakdown lb;
  lb.focal = g.value(lg.focal)[0];
  lb.box = g.value(lg.box)[0];
  lb.confidence = lg.conf >= 0 ? g.value(lg.conf)[0] : 0.0;
  lb.total = g.value(lg.total)[0];
  return lb;
}

// ---------------------------------------------------------------------------
// inference

struct ModelMaps {
  std::vector<int> levels;
  std::vector<FeatureMap> pyramid, cls, loc, conf;
};

struct DetectResult {
  std::vector<Detection> detections;
  ModelMaps maps;
  std::vector<AttentionRecord> records;
};

inline DetectResult detect(ParamStore& ps, const DetectorConfig& cfg,
                           const FeatureMap& image, bool capture = false) {
  Graph g;
  const NodeId img = g.input(to_tensor(image));
  const ModelNodes m = build_detector(g, ps, cfg, img);
  g.forward();

  DetectResult res;
  for (size_t li = 0; li < m.pyramid.levels.size(); ++li) {
    res.maps.levels.push_back(m.pyramid.levels[li].level);
    res.maps.pyramid.push_back(fm_from(g.shape(m.pyramid.levels[li].node),
                                       g.value(m.pyramid.levels[li].node)));
    res.maps.cls.push_back(fm_from(g.shape(m.cls_map[li]),
                                   g.value(m.cls_map[li])));
    res.maps.loc.push_back(fm_from(g.shape(m.loc_map[li]),
                                   g.value(m.loc_map[li])));
    if (cfg.with_confidence)
      res.maps.conf.push_back(fm_from(g.shape(m.conf_map[li]),
                                      g.value(m.conf_map[li])));
  }
  if (capture)
    for (const auto& r : m.records)
      res.records.push_back(detail::make_record(g, r.build, r.level, r.branch,
                                                g.value(r.gamma)[0]));

  const AnchorSet anchors =
      generate_anchors(pyramid_shapes(g, m), cfg.anchors_per_loc);
  const double img_w = image.width, img_h = image.height;
  const int A = cfg.anchors_per_loc, K = cfg.classes;

  std::vector<Detection> cands;
  for (size_t li = 0; li < anchors.levels.size(); ++li) {
    const auto& cls = res.maps.cls[li];
    const auto& loc = res.maps.loc[li];
    const FeatureMap* conf = cfg.with_confidence ? &res.maps.conf[li] : nullptr;
    const int H = cls.height, W = cls.width;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int a = 0; a < A; ++a) {
          const BoxCwh& anchor =
              anchors.levels[li].anchors[(static_cast<size_t>(y) * W + x) * A +
                                         a];
          const double conf_s =
              conf ? ops::sigmoid(conf->at(a, y, x)) : -1.0;
          double deltas[4];
          for (int j = 0; j < 4; ++j) deltas[j] = loc.at(a * 4 + j, y, x);
          for (int k = 0; k < K; ++k) {
            const double s = ops::sigmoid(cls.at(a * K + k, y, x));
            if (s < cfg.score_floor) continue;
            const Box b = decode_box(anchor, deltas, img_w, img_h);
            if (b.x2 <= b.x1 || b.y2 <= b.y1) continue;
            cands.push_back({b, k, s, conf_s, 0.0});
          }
        }
  }
  res.detections = nms(cands, cfg.nms_iou, cfg.score_mode);
  if (res.detections.size() > kMaxDetections)
    res.detections.resize(kMaxDetections);
  return res;
}

// Single-branch head application, eager (tests and tooling).
inline FeatureMap head_forward(ParamStore& ps, const DetectorConfig& cfg,
                               const FeatureMap& f, const std::string& branch) {
  Graph g;
  NodeId x = g.input(to_tensor(f));
  for (int k = 0; k < cfg.head_depth; ++k)
    x = g.relu(named_conv(g, ps, x, "head." + branch + "." + std::to_string(k),
                          1, 0));
  x = named_conv(g, ps, x, "head." + branch + ".pred", 1, 0);
  g.forward();
  return fm_from(g.shape(x), g.value(x));
}

}  // namespace dsa
