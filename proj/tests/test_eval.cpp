#include <catch2/catch_amalgamated.hpp>

#include "dsa/eval.hpp"

using namespace dsa;

namespace {

Detection det(Box b, int cls, double score) {
  Detection d;
  d.box = b;
  d.class_id = cls;
  d.cls_score = score;
  d.final_score = score;
  return d;
}

}  // namespace

TEST_CASE("perfect predictions give AP 1 at every threshold", "[eval]") {
  std::vector<std::vector<GroundTruth>> gts = {
      {{{4, 4, 40, 44}, 0}, {{10, 50, 30, 60}, 1}},
      {{{0, 0, 20, 20}, 0}},
  };
  std::vector<std::vector<Detection>> dets(2);
  for (size_t img = 0; img < gts.size(); ++img)
    for (const auto& gt : gts[img])
      dets[img].push_back(det(gt.box, gt.class_id, 1.0));
  const EvalMetrics m = evaluate_ap(dets, gts, 2);
  REQUIRE(m.ap == 1.0);
  REQUIRE(m.ap50 == 1.0);
  REQUIRE(m.ap75 == 1.0);
  REQUIRE(m.ar == 1.0);
}

TEST_CASE("no predictions give zero AP and AR", "[eval]") {
  std::vector<std::vector<GroundTruth>> gts = {{{{4, 4, 40, 44}, 0}}};
  std::vector<std::vector<Detection>> dets(1);
  const EvalMetrics m = evaluate_ap(dets, gts, 1);
  REQUIRE(m.ap == 0.0);
  REQUIRE(m.ar == 0.0);
  REQUIRE(m.ap_l == -1.0);  // no large ground truth anywhere
}

TEST_CASE("empty dataset is rejected", "[eval]") {
  REQUIRE_THROWS(evaluate_ap({}, {}, 1));
}

TEST_CASE("three-image case matches the hand-traced curve", "[eval]") {
  // one class; three 40x40 gts (area 1600, medium bucket)
  const Box gt_box{0, 0, 40, 40};
  std::vector<std::vector<GroundTruth>> gts = {
      {{gt_box, 0}}, {{gt_box, 0}}, {{gt_box, 0}}};
  std::vector<std::vector<Detection>> dets(3);
  dets[0].push_back(det(gt_box, 0, 0.9));                 // exact match
  dets[0].push_back(det({50, 50, 60, 60}, 0, 0.85));      // small FP, area 100
  dets[1].push_back(det({0, 0, 40, 36}, 0, 0.8));         // IoU 0.9 match
  // image 2: miss

  const EvalMetrics m = evaluate_ap(dets, gts, 1);
  // hand trace (101-point interpolation):
  //   thr <= 0.90: TP(0.9), FP(0.85), TP(0.8) -> AP = (34*1 + 33*2/3)/101
  //   thr = 0.95:  TP(0.9), FP, FP            -> AP = 34/101
  const double ap_low = 56.0 / 101.0;
  const double ap_95 = 34.0 / 101.0;
  REQUIRE(m.ap50 == Catch::Approx(ap_low).epsilon(1e-12));
  REQUIRE(m.ap75 == Catch::Approx(ap_low).epsilon(1e-12));
  REQUIRE(m.ap == Catch::Approx((9 * ap_low + ap_95) / 10).epsilon(1e-12));
  // medium bucket ignores the area-100 FP entirely
  const double ap_m_low = 67.0 / 101.0;
  REQUIRE(m.ap_m ==
          Catch::Approx((9 * ap_m_low + ap_95) / 10).epsilon(1e-12));
  REQUIRE(m.ap_s == -1.0);
  REQUIRE(m.ap_l == -1.0);
  // recall: 2/3 for thr <= 0.9, 1/3 at 0.95
  REQUIRE(m.ar == Catch::Approx((9 * (2.0 / 3) + 1.0 / 3) / 10)
                      .epsilon(1e-12));
  REQUIRE(m.ar_m == m.ar);
}

TEST_CASE("evaluation is deterministic", "[eval]") {
  std::vector<std::vector<GroundTruth>> gts = {
      {{{0, 0, 40, 40}, 0}, {{10, 10, 44, 50}, 1}}};
  std::vector<std::vector<Detection>> dets(1);
  dets[0].push_back(det({1, 1, 39, 41}, 0, 0.7));
  dets[0].push_back(det({12, 9, 45, 52}, 1, 0.7));
  const EvalMetrics a = evaluate_ap(dets, gts, 2);
  const EvalMetrics b = evaluate_ap(dets, gts, 2);
  REQUIRE(a.ap == b.ap);
  REQUIRE(a.ar == b.ar);
}
