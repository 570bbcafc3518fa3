#pragma once

#include <cmath>
#include <vector>

#include "dsa/boxes.hpp"

namespace dsa {

struct LevelShape {
  int level = 0;   // pyramid level id, stride = 2^level
  int stride = 0;
  int h = 0, w = 0;
};

// A square anchors per position, side = stride * 4 * 2^(i/A), centered at
// ((x + 0.5) * stride, (y + 0.5) * stride). Enumeration order within a level
// is (y, x, a).
struct AnchorSet {
  struct Level {
    LevelShape shape;
    std::vector<BoxCwh> anchors;
  };
  std::vector<Level> levels;

  long long total() const {
    long long n = 0;
    for (const auto& l : levels) n += static_cast<long long>(l.anchors.size());
    return n;
  }
};

inline AnchorSet generate_anchors(const std::vector<LevelShape>& shapes,
                                  int anchors_per_loc) {
  if (anchors_per_loc < 1) fail("generate_anchors: need at least one anchor");
  AnchorSet set;
  for (const auto& s : shapes) {
    AnchorSet::Level lvl;
    lvl.shape = s;
    lvl.anchors.reserve(static_cast<size_t>(s.h) * s.w * anchors_per_loc);
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x)
        for (int a = 0; a < anchors_per_loc; ++a) {
          const double side =
              s.stride * 4.0 * std::pow(2.0, double(a) / anchors_per_loc);
          lvl.anchors.push_back({(x + 0.5) * s.stride, (y + 0.5) * s.stride,
                                 side, side});
        }
    set.levels.push_back(std::move(lvl));
  }
  return set;
}

enum class AnchorKind { kNegative, kPositive, kIgnore };

struct Assignment {
  AnchorKind kind = AnchorKind::kNegative;
  int gt = -1;
};

// Max-IoU assignment with RetinaNet-style thresholds. Ties in an anchor's
// best ground truth go to the lowest gt id. Every gt then claims its single
// highest-IoU anchor (ties to the lowest anchor id); contested claims are
// resolved in favor of the lowest gt id.
inline std::vector<Assignment> assign_targets(
    const std::vector<BoxCwh>& anchors, const std::vector<GroundTruth>& gts,
    double pos_thr = 0.5, double neg_thr = 0.4) {
  if (!(0.0 <= neg_thr && neg_thr <= pos_thr && pos_thr <= 1.0))
    fail("assign_targets: need 0 <= neg_thr <= pos_thr <= 1");
  std::vector<Assignment> out(anchors.size());
  if (gts.empty()) return out;

  std::vector<Box> corners(anchors.size());
  for (size_t i = 0; i < anchors.size(); ++i) corners[i] = anchors[i].corners();

  std::vector<double> best_for_gt(gts.size(), -1.0);
  std::vector<int> best_anchor(gts.size(), -1);
  for (size_t i = 0; i < anchors.size(); ++i) {
    double best = -1.0;
    int arg = -1;
    for (size_t gi = 0; gi < gts.size(); ++gi) {
      const double v = iou(corners[i], gts[gi].box);
      if (v > best) {
        best = v;
        arg = static_cast<int>(gi);
      }
      if (v > best_for_gt[gi]) {
        best_for_gt[gi] = v;
        best_anchor[gi] = static_cast<int>(i);
      }
    }
    if (best >= pos_thr)
      out[i] = {AnchorKind::kPositive, arg};
    else if (best < neg_thr)
      out[i] = {AnchorKind::kNegative, -1};
    else
      out[i] = {AnchorKind::kIgnore, -1};
  }
  // force-match pass, descending so the lowest gt id wins contested anchors
  for (int gi = static_cast<int>(gts.size()) - 1; gi >= 0; --gi)
    if (best_anchor[gi] >= 0)
      out[best_anchor[gi]] = {AnchorKind::kPositive, gi};
  return out;
}

}  // namespace dsa
