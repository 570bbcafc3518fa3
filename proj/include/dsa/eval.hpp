#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dsa/boxes.hpp"

namespace dsa {

// Detection metrics: IoU thresholds 0.50:0.05:0.95, 101-point interpolated
// precision, area buckets small < 32^2 <= medium < 96^2 <= large. Buckets
// with no ground truth anywhere report -1.
struct EvalMetrics {
  double ap = -1, ap50 = -1, ap75 = -1;
  double ap_s = -1, ap_m = -1, ap_l = -1;
  double ar = -1, ar_s = -1, ar_m = -1, ar_l = -1;
};

inline std::vector<std::pair<std::string, double>> metric_rows(
    const EvalMetrics& m) {
  return {{"AP", m.ap},     {"AP50", m.ap50}, {"AP75", m.ap75},
          {"AP_S", m.ap_s}, {"AP_M", m.ap_m}, {"AP_L", m.ap_l},
          {"AR", m.ar},     {"AR_S", m.ar_s}, {"AR_M", m.ar_m},
          {"AR_L", m.ar_l}};
}

namespace detail {

struct ClassEval {
  // per IoU threshold: matched flags in accumulation order
  std::vector<double> scores;     // non-ignored detections, per threshold run
  std::vector<char> is_tp;
  long long n_gt = 0;
};

struct AreaRange {
  double lo, hi;
};

inline constexpr AreaRange kAreaAll{0.0, 1e18};
inline constexpr AreaRange kAreaS{0.0, 32.0 * 32.0};
inline constexpr AreaRange kAreaM{32.0 * 32.0, 96.0 * 96.0};
inline constexpr AreaRange kAreaL{96.0 * 96.0, 1e18};

// Greedy matching of one image's detections of one class at one threshold.
// Detections are taken in descending final-score order; each matches the
// available in-range gt with the highest IoU >= thr. Unmatched detections may
// be absorbed by out-of-range gts (ignored) or dropped if their own area is
// out of range, mirroring the usual benchmark protocol.
struct ImageStats {
  std::vector<std::pair<double, char>> records;  // (score, tp) for counted dets
  long long n_gt = 0;
  long long matched = 0;
};

inline ImageStats match_image(const std::vector<Detection>& dets,
                              const std::vector<GroundTruth>& gts, int cls,
                              double thr, const AreaRange& range) {
  ImageStats st;
  std::vector<int> gt_ids;
  std::vector<bool> gt_ignored;
  for (size_t i = 0; i < gts.size(); ++i) {
    if (gts[i].class_id != cls) continue;
    gt_ids.push_back(static_cast<int>(i));
    const double a = gts[i].box.area();
    gt_ignored.push_back(a < range.lo || a >= range.hi);
  }
  st.n_gt = std::count(gt_ignored.begin(), gt_ignored.end(), false);

  std::vector<int> order;
  for (size_t i = 0; i < dets.size(); ++i)
    if (dets[i].class_id == cls) order.push_back(static_cast<int>(i));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dets[a].final_score > dets[b].final_score;
  });

  std::vector<bool> gt_matched(gt_ids.size(), false);
  for (int di : order) {
    const Detection& d = dets[di];
    int best = -1;
    double best_iou = 0.0;
    for (size_t gi = 0; gi < gt_ids.size(); ++gi) {
      if (gt_matched[gi] || gt_ignored[gi]) continue;
      const double v = iou(d.box, gts[gt_ids[gi]].box);
      if (v >= thr && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(gi);
      }
    }
    if (best >= 0) {
      gt_matched[best] = true;
      ++st.matched;
      st.records.emplace_back(d.final_score, 1);
      continue;
    }
    bool absorbed = false;
    for (size_t gi = 0; gi < gt_ids.size() && !absorbed; ++gi)
      if (gt_ignored[gi] && iou(d.box, gts[gt_ids[gi]].box) >= thr)
        absorbed = true;
    if (absorbed) continue;
    const double a = d.box.area();
    if (a < range.lo || a >= range.hi) continue;  // out-of-range unmatched
    st.records.emplace_back(d.final_score, 0);
  }
  return st;
}

// 101-point interpolated average precision; NaN when the class has no gt.
inline double average_precision(std::vector<std::pair<double, char>> recs,
                                long long n_gt) {
  if (n_gt == 0) return std::nan("");
  std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  std::vector<double> precision, recall;
  long long tp = 0, fp = 0;
  for (const auto& [score, is_tp] : recs) {
    (is_tp ? tp : fp) += 1;
    precision.push_back(double(tp) / double(tp + fp));
    recall.push_back(double(tp) / double(n_gt));
  }
  // suffix max makes precision monotone non-increasing in recall
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0;
  size_t idx = 0;
  for (int r = 0; r <= 100; ++r) {
    const double target = r / 100.0;
    while (idx < recall.size() && recall[idx] < target) ++idx;
    ap += idx < precision.size() ? precision[idx] : 0.0;
  }
  return ap / 101.0;
}

}  // namespace detail

inline EvalMetrics evaluate_ap(
    const std::vector<std::vector<Detection>>& dets,
    const std::vector<std::vector<GroundTruth>>& gts, int classes) {
  if (gts.empty() || dets.size() != gts.size())
    fail("evaluate_ap: empty dataset or image count mismatch");

  const std::vector<double> thrs = {0.50, 0.55, 0.60, 0.65, 0.70,
                                    0.75, 0.80, 0.85, 0.90, 0.95};
  const std::vector<detail::AreaRange> ranges = {
      detail::kAreaAll, detail::kAreaS, detail::kAreaM, detail::kAreaL};

  // ap_sum[range][thr index] aggregated over defined classes
  std::vector<std::vector<double>> ap(4, std::vector<double>(thrs.size(), 0.0));
  std::vector<std::vector<double>> ar(4, std::vector<double>(thrs.size(), 0.0));
  std::vector<std::vector<int>> defined(4, std::vector<int>(thrs.size(), 0));

  for (int cls = 0; cls < classes; ++cls) {
    for (size_t ri = 0; ri < ranges.size(); ++ri) {
      for (size_t ti = 0; ti < thrs.size(); ++ti) {
        std::vector<std::pair<double, char>> recs;
        long long n_gt = 0, matched = 0;
        for (size_t img = 0; img < gts.size(); ++img) {
          const auto st = detail::match_image(dets[img], gts[img], cls,
                                              thrs[ti], ranges[ri]);
          recs.insert(recs.end(), st.records.begin(), st.records.end());
          n_gt += st.n_gt;
          matched += st.matched;
        }
        if (n_gt == 0) continue;
        ap[ri][ti] += detail::average_precision(std::move(recs), n_gt);
        ar[ri][ti] += double(matched) / double(n_gt);
        defined[ri][ti] += 1;
      }
    }
  }

  auto mean_over = [&](const std::vector<std::vector<double>>& acc, int ri,
                       int ti_lo, int ti_hi) {
    double sum = 0.0;
    int n = 0;
    for (int ti = ti_lo; ti <= ti_hi; ++ti) {
      if (defined[ri][ti] == 0) continue;
      sum += acc[ri][ti] / defined[ri][ti];
      ++n;
    }
    return n > 0 ? sum / n : -1.0;
  };

  EvalMetrics m;
  m.ap = mean_over(ap, 0, 0, 9);
  m.ap50 = mean_over(ap, 0, 0, 0);
  m.ap75 = mean_over(ap, 0, 5, 5);
  m.ap_s = mean_over(ap, 1, 0, 9);
  m.ap_m = mean_over(ap, 2, 0, 9);
  m.ap_l = mean_over(ap, 3, 0, 9);
  m.ar = mean_over(ar, 0, 0, 9);
  m.ar_s = mean_over(ar, 1, 0, 9);
  m.ar_m = mean_over(ar, 2, 0, 9);
  m.ar_l = mean_over(ar, 3, 0, 9);
  return m;
}

}  // namespace dsa
