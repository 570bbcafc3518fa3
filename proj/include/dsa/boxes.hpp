#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dsa/tensor.hpp"

namespace dsa {

// Corner-form box, continuous coordinates, area (x2-x1)*(y2-y1).
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double area() const { return (x2 - x1) * (y2 - y1); }
};

// Center-form box used for anchors.
struct BoxCwh {
  double cx = 0, cy = 0, w = 0, h = 0;
  Box corners() const {
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  }
};

inline double iou(const Box& a, const Box& b) {
  if (a.x2 <= a.x1 || a.y2 <= a.y1 || b.x2 <= b.x1 || b.y2 <= b.y1)
    fail("iou: zero-area box");
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

struct GroundTruth {
  Box box;
  int class_id = 0;
};

struct Detection {
  Box box;
  int class_id = 0;
  double cls_score = 0.0;
  double conf_score = -1.0;  // < 0 when the objectness head is absent
  double final_score = 0.0;
};

enum class ScoreMode { kClsOnly, kClsTimesConf };

inline double final_score(const Detection& d, ScoreMode mode) {
  if (mode == ScoreMode::kClsOnly || d.conf_score < 0.0) return d.cls_score;
  return d.cls_score * d.conf_score;
}

// Standard anchor-relative parameterization (dx, dy, dw, dh).
constexpr double kDeltaClamp = 4.135166556742356;  // ln(1000 / 16)

inline std::array<double, 4> encode_box(const BoxCwh& anchor, const Box& gt) {
  const double gw = gt.x2 - gt.x1, gh = gt.y2 - gt.y1;
  const double gcx = gt.x1 + gw / 2, gcy = gt.y1 + gh / 2;
  return {(gcx - anchor.cx) / anchor.w, (gcy - anchor.cy) / anchor.h,
          std::log(gw / anchor.w), std::log(gh / anchor.h)};
}

inline Box decode_box(const BoxCwh& anchor, const double* deltas, double img_w,
                      double img_h) {
  const double dw = std::min(deltas[2], kDeltaClamp);
  const double dh = std::min(deltas[3], kDeltaClamp);
  const double cx = anchor.cx + deltas[0] * anchor.w;
  const double cy = anchor.cy + deltas[1] * anchor.h;
  const double w = anchor.w * std::exp(dw);
  const double h = anchor.h * std::exp(dh);
  Box b{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  b.x1 = std::clamp(b.x1, 0.0, img_w);
  b.y1 = std::clamp(b.y1, 0.0, img_h);
  b.x2 = std::clamp(b.x2, 0.0, img_w);
  b.y2 = std::clamp(b.y2, 0.0, img_h);
  return b;
}

// Greedy per-class suppression. Detections are ranked by final_score
// descending (ties keep the lower input index); a kept box suppresses
// same-class boxes with IoU strictly above the threshold.
inline std::vector<Detection> nms(const std::vector<Detection>& dets,
                                  double iou_thr, ScoreMode mode) {
  std::vector<Detection> scored = dets;
  for (auto& d : scored) d.final_score = final_score(d, mode);
  std::vector<int> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scored[a].final_score > scored[b].final_score;
  });
  std::vector<bool> suppressed(scored.size(), false);
  std::vector<Detection> kept;
  for (size_t oi = 0; oi < order.size(); ++oi) {
    const int i = order[oi];
    if (suppressed[i]) continue;
    kept.push_back(scored[i]);
    for (size_t oj = oi + 1; oj < order.size(); ++oj) {
      const int j = order[oj];
      if (suppressed[j] || scored[j].class_id != scored[i].class_id) continue;
      if (iou(scored[j].box, scored[i].box) > iou_thr) suppressed[j] = true;
    }
  }
  return kept;
}

}  // namespace dsa
