#include <catch2/catch_amalgamated.hpp>

#include "dsa/anchors.hpp"
#include "dsa/boxes.hpp"
#include "helpers.hpp"

using namespace dsa;

TEST_CASE("iou anchors", "[boxes]") {
  const Box a{0, 0, 2, 2};
  REQUIRE(iou(a, a) == 1.0);
  REQUIRE(iou(a, Box{5, 5, 6, 6}) == 0.0);
  REQUIRE(iou(a, Box{1, 1, 3, 3}) == Catch::Approx(1.0 / 7).epsilon(1e-15));
  REQUIRE_THROWS(iou(a, Box{1, 1, 1, 3}));
}

TEST_CASE("box encode/decode anchors", "[boxes]") {
  const BoxCwh anchor{10, 10, 4, 6};
  double zeros[4] = {0, 0, 0, 0};
  const Box b = decode_box(anchor, zeros, 100, 100);
  REQUIRE(b.x1 == Catch::Approx(8.0));
  REQUIRE(b.y1 == Catch::Approx(7.0));
  REQUIRE(b.x2 == Catch::Approx(12.0));
  REQUIRE(b.y2 == Catch::Approx(13.0));

  double grow[4] = {0, 0, std::log(2.0), 0};
  const Box wide = decode_box(anchor, grow, 100, 100);
  REQUIRE(wide.x2 - wide.x1 == Catch::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("encode/decode are mutual inverses away from clipping", "[boxes]") {
  Rng rng(50);
  for (int trial = 0; trial < 100; ++trial) {
    const BoxCwh anchor{rng.uniform(20, 40), rng.uniform(20, 40),
                        rng.uniform(4, 10), rng.uniform(4, 10)};
    const double dx[4] = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                          rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const Box decoded = decode_box(anchor, dx, 1000, 1000);
    const auto re = encode_box(anchor, decoded);
    for (int j = 0; j < 4; ++j) REQUIRE(std::abs(re[j] - dx[j]) < 1e-10);
  }
}

TEST_CASE("nms keeps a single detection", "[boxes]") {
  const std::vector<Detection> dets = {{{0, 0, 4, 4}, 0, 0.7, -1, 0}};
  const auto kept = nms(dets, 0.5, ScoreMode::kClsOnly);
  REQUIRE(kept.size() == 1);
  REQUIRE(kept[0].final_score == 0.7);
}

TEST_CASE("nms suppresses the lower-scored overlap", "[boxes]") {
  // IoU(a, b) = 0.6 > 0.5
  const Box a{0, 0, 10, 6};
  const Box b{0, 0, 10, 8};
  REQUIRE(iou(a, b) == Catch::Approx(0.75));
  const std::vector<Detection> dets = {{b, 0, 0.8, -1, 0}, {a, 0, 0.9, -1, 0}};
  const auto kept = nms(dets, 0.5, ScoreMode::kClsOnly);
  REQUIRE(kept.size() == 1);
  REQUIRE(kept[0].cls_score == 0.9);
}

TEST_CASE("nms keeps different classes apart", "[boxes]") {
  const Box a{0, 0, 10, 6};
  const std::vector<Detection> dets = {{a, 0, 0.9, -1, 0}, {a, 1, 0.8, -1, 0}};
  REQUIRE(nms(dets, 0.5, ScoreMode::kClsOnly).size() == 2);
}

TEST_CASE("confidence product flips the nms survivor", "[boxes]") {
  const Box a{0, 0, 10, 6};
  const Box b{0, 0, 10, 8};
  // equal class scores; confidences 1.0 vs 0.5
  const std::vector<Detection> dets = {{a, 0, 0.8, 0.5, 0},
                                       {b, 0, 0.8, 1.0, 0}};
  const auto cls_only = nms(dets, 0.5, ScoreMode::kClsOnly);
  REQUIRE(cls_only.size() == 1);
  REQUIRE(cls_only[0].conf_score == 0.5);  // tie broken by input order
  const auto with_conf = nms(dets, 0.5, ScoreMode::kClsTimesConf);
  REQUIRE(with_conf.size() == 1);
  REQUIRE(with_conf[0].conf_score == 1.0);
}

TEST_CASE("unit confidences make both modes identical bitwise", "[boxes]") {
  Rng rng(51);
  std::vector<Detection> dets;
  for (int i = 0; i < 40; ++i) {
    const double x = rng.uniform(0, 50), y = rng.uniform(0, 50);
    dets.push_back({{x, y, x + rng.uniform(4, 20), y + rng.uniform(4, 20)},
                    int(rng.next_int(0, 2)), rng.uniform(0.1, 1.0), 1.0, 0});
  }
  const auto a = nms(dets, 0.5, ScoreMode::kClsOnly);
  const auto b = nms(dets, 0.5, ScoreMode::kClsTimesConf);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(std::memcmp(&a[i].box, &b[i].box, sizeof(Box)) == 0);
    REQUIRE(a[i].final_score == b[i].final_score);
  }
}

TEST_CASE("nms output is a subset with bounded pairwise overlap", "[boxes]") {
  Rng rng(52);
  std::vector<Detection> dets;
  for (int i = 0; i < 60; ++i) {
    const double x = rng.uniform(0, 40), y = rng.uniform(0, 40);
    dets.push_back({{x, y, x + rng.uniform(5, 25), y + rng.uniform(5, 25)},
                    int(rng.next_int(0, 1)), rng.uniform(0.0, 1.0), -1, 0});
  }
  const auto kept = nms(dets, 0.5, ScoreMode::kClsOnly);
  REQUIRE(kept.size() <= dets.size());
  for (size_t i = 0; i < kept.size(); ++i)
    for (size_t j = i + 1; j < kept.size(); ++j)
      if (kept[i].class_id == kept[j].class_id)
        REQUIRE(iou(kept[i].box, kept[j].box) <= 0.5);
}

TEST_CASE("anchor generation matches the side/center formula", "[boxes]") {
  const auto set = generate_anchors({{7, 128, 1, 1}}, 1);
  REQUIRE(set.total() == 1);
  const BoxCwh& a = set.levels[0].anchors[0];
  REQUIRE(a.cx == 64.0);
  REQUIRE(a.cy == 64.0);
  REQUIRE(a.w == 512.0);
  REQUIRE(a.h == 512.0);
}

TEST_CASE("conv3 anchors outnumber all higher levels combined", "[boxes]") {
  const std::vector<LevelShape> shapes = {{3, 8, 8, 8},
                                          {4, 16, 4, 4},
                                          {5, 32, 2, 2},
                                          {6, 64, 1, 1},
                                          {7, 128, 1, 1}};
  const auto set = generate_anchors(shapes, 3);
  REQUIRE(set.levels[0].anchors.size() == 192);
  long long rest = 0;
  for (size_t i = 1; i < set.levels.size(); ++i)
    rest += set.levels[i].anchors.size();
  REQUIRE(rest == 66);
  REQUIRE(set.total() == 258);
}

TEST_CASE("assignment thresholds and force matching", "[boxes]") {
  // anchors: one exact match, one disjoint, one in the ignore window
  const std::vector<BoxCwh> anchors = {
      {10, 10, 8, 8},   // IoU 1 with gt
      {100, 100, 8, 8}, // disjoint
      {13, 10, 8, 8},   // partial overlap
  };
  const std::vector<GroundTruth> gts = {{{6, 6, 14, 14}, 1}};
  const double partial = iou(anchors[2].corners(), gts[0].box);
  REQUIRE(partial > 0.4);
  REQUIRE(partial < 0.5);
  const auto out = assign_targets(anchors, gts);
  REQUIRE(out[0].kind == AnchorKind::kPositive);
  REQUIRE(out[0].gt == 0);
  REQUIRE(out[1].kind == AnchorKind::kNegative);
  REQUIRE(out[2].kind == AnchorKind::kIgnore);
}

TEST_CASE("every gt claims its best anchor even below threshold", "[boxes]") {
  const std::vector<BoxCwh> anchors = {{10, 10, 20, 20}};
  const std::vector<GroundTruth> gts = {{{8, 8, 13, 13}, 0}};  // IoU ~ 0.06
  const auto out = assign_targets(anchors, gts);
  REQUIRE(out[0].kind == AnchorKind::kPositive);
  REQUIRE(out[0].gt == 0);
}

TEST_CASE("empty ground truth makes everything negative", "[boxes]") {
  const std::vector<BoxCwh> anchors = {{10, 10, 8, 8}, {20, 20, 8, 8}};
  const auto out = assign_targets(anchors, {});
  for (const auto& a : out) REQUIRE(a.kind == AnchorKind::kNegative);
}
