#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsa/boxes.hpp"
#include "dsa/io.hpp"
#include "dsa/rng.hpp"
#include "dsa/tensor.hpp"

namespace dsa {

// Synthetic detection scenes: axis-aligned rectangles whose class is encoded
// only by the interior fill pattern; every class shares the same 1-px border
// intensity, so edges carry localization signal and interiors carry class.
struct SceneConfig {
  int image_size = 64;
  int min_objects = 1;
  int max_objects = 4;
  int classes = 4;
  int size_min = 8;
  int size_max = 40;
  double overlap_cap = 0.3;
  double noise = 0.02;
  std::uint64_t seed = 1;

  void validate() const {
    if (image_size < 8) fail("scene: image_size must be >= 8");
    if (min_objects < 1 || max_objects < min_objects)
      fail("scene: objects range is empty");
    if (classes < 1 || classes > 4)
      fail("scene: classes must be in 1..4 (one per pattern)");
    if (size_min < 3 || size_max < size_min || size_max > image_size)
      fail("scene: size range invalid");
    if (overlap_cap < 0.0 || overlap_cap > 1.0)
      fail("scene: overlap_cap out of range");
    if (noise < 0.0) fail("scene: noise must be >= 0");
  }
};

struct Scene {
  FeatureMap image;
  std::vector<GroundTruth> gts;
  bool truncated = false;  // rejection sampling gave up before max_objects
};

constexpr double kSceneBackground = 0.1;
constexpr double kSceneBorder = 1.0;  // identical for every class
constexpr double kPatternHi = 0.9;
constexpr double kPatternLo = 0.3;
constexpr double kPatternSolid = 0.7;

// Interior pattern value at box-local coordinates (dx, dy):
// 0 solid, 1 horizontal stripes, 2 vertical stripes, 3 checkerboard.
inline double interior_value(int class_id, int dx, int dy) {
  switch (class_id) {
    case 0:
      return kPatternSolid;
    case 1:
      return dy % 2 == 0 ? kPatternHi : kPatternLo;
    case 2:
      return dx % 2 == 0 ? kPatternHi : kPatternLo;
    default:
      return (dx + dy) % 2 == 0 ? kPatternHi : kPatternLo;
  }
}

// Fully determined by (cfg.seed, index).
inline Scene generate_scene(const SceneConfig& cfg, int index) {
  cfg.validate();
  Rng rng = Rng(cfg.seed).fork("scene").fork(static_cast<std::uint64_t>(index));
  const int S = cfg.image_size;

  Scene scene;
  scene.image = FeatureMap(3, S, S);
  for (auto& v : scene.image.data) v = kSceneBackground;

  const int want =
      static_cast<int>(rng.next_int(cfg.min_objects, cfg.max_objects));
  const int size_hi = std::min(cfg.size_max, S);
  for (int oi = 0; oi < want; ++oi) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int w = static_cast<int>(rng.next_int(cfg.size_min, size_hi));
      const int h = static_cast<int>(rng.next_int(cfg.size_min, size_hi));
      const int x1 = static_cast<int>(rng.next_int(0, S - w));
      const int y1 = static_cast<int>(rng.next_int(0, S - h));
      const int cls = static_cast<int>(rng.next_int(0, cfg.classes - 1));
      const Box box{double(x1), double(y1), double(x1 + w), double(y1 + h)};
      bool ok = true;
      for (const auto& gt : scene.gts)
        if (iou(box, gt.box) > cfg.overlap_cap) {
          ok = false;
          break;
        }
      if (!ok) continue;
      scene.gts.push_back({box, cls});
      placed = true;
    }
    if (!placed) {
      scene.truncated = true;
      break;
    }
  }

  // later objects overwrite earlier ones in their (small) overlap region
  for (const auto& gt : scene.gts) {
    const int x1 = int(gt.box.x1), y1 = int(gt.box.y1);
    const int x2 = int(gt.box.x2), y2 = int(gt.box.y2);
    for (int y = y1; y < y2; ++y)
      for (int x = x1; x < x2; ++x) {
        const bool border =
            y == y1 || y == y2 - 1 || x == x1 || x == x2 - 1;
        const double v =
            border ? kSceneBorder
                   : interior_value(gt.class_id, x - x1 - 1, y - y1 - 1);
        for (int c = 0; c < 3; ++c) scene.image.at(c, y, x) = v;
      }
  }

  if (cfg.noise > 0.0)
    for (auto& v : scene.image.data) v += rng.uniform(-cfg.noise, cfg.noise);
  return scene;
}

// ---------------------------------------------------------------------------
// persisted dataset: manifest.json, images/NNNN.fmap, annotations.json

struct DatasetItem {
  int index = 0;
  bool train = true;
  bool truncated = false;
  std::vector<GroundTruth> gts;
};

struct Dataset {
  SceneConfig cfg;
  int n_train = 0;
  int n_val = 0;
  std::filesystem::path root;
  std::vector<DatasetItem> items;  // indices [0, n_train + n_val)

  FeatureMap load_image(int index) const {
    char name[32];
    std::snprintf(name, sizeof(name), "%04d.fmap", index);
    return read_fmap(root / "images" / name);
  }
};

inline nlohmann::json scene_config_json(const SceneConfig& c) {
  return {{"image_size", c.image_size}, {"min_objects", c.min_objects},
          {"max_objects", c.max_objects}, {"classes", c.classes},
          {"size_min", c.size_min}, {"size_max", c.size_max},
          {"overlap_cap", c.overlap_cap}, {"noise", c.noise},
          {"seed", c.seed}};
}

inline SceneConfig scene_config_from_json(const nlohmann::json& j) {
  SceneConfig c;
  c.image_size = j.at("image_size");
  c.min_objects = j.at("min_objects");
  c.max_objects = j.at("max_objects");
  c.classes = j.at("classes");
  c.size_min = j.at("size_min");
  c.size_max = j.at("size_max");
  c.overlap_cap = j.at("overlap_cap");
  c.noise = j.at("noise");
  c.seed = j.at("seed");
  return c;
}

inline Dataset make_dataset(const SceneConfig& cfg, int n_train, int n_val,
                            const std::filesystem::path& root) {
  cfg.validate();
  if (n_train < 1 || n_val < 1) fail("make_dataset: need n_train, n_val >= 1");
  std::error_code ec;
  std::filesystem::create_directories(root / "images", ec);
  if (ec) io_fail(root / "images", "cannot create dataset directory");

  Dataset ds;
  ds.cfg = cfg;
  ds.n_train = n_train;
  ds.n_val = n_val;
  ds.root = root;

  nlohmann::json ann = nlohmann::json::array();
  for (int i = 0; i < n_train + n_val; ++i) {
    const Scene s = generate_scene(cfg, i);
    char name[32];
    std::snprintf(name, sizeof(name), "%04d.fmap", i);
    write_fmap(root / "images" / name, s.image);

    DatasetItem item;
    item.index = i;
    item.train = i < n_train;
    item.truncated = s.truncated;
    item.gts = s.gts;
    ds.items.push_back(item);

    nlohmann::json objs = nlohmann::json::array();
    for (const auto& gt : s.gts)
      objs.push_back({{"box", {gt.box.x1, gt.box.y1, gt.box.x2, gt.box.y2}},
                      {"class", gt.class_id}});
    ann.push_back({{"index", i}, {"split", item.train ? "train" : "val"},
                   {"truncated", s.truncated}, {"objects", objs}});
  }

  nlohmann::json manifest = {{"format", "dsa-dataset-v1"},
                             {"n_train", n_train},
                             {"n_val", n_val},
                             {"scene", scene_config_json(cfg)}};
  std::ofstream mf(root / "manifest.json");
  if (!mf) io_fail(root / "manifest.json", "cannot open for writing");
  mf << manifest.dump(2) << '\n';
  std::ofstream af(root / "annotations.json");
  if (!af) io_fail(root / "annotations.json", "cannot open for writing");
  af << ann.dump(2) << '\n';
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& root) {
  std::ifstream mf(root / "manifest.json");
  if (!mf) io_fail(root / "manifest.json", "cannot open");
  nlohmann::json manifest = nlohmann::json::parse(mf);
  if (manifest.at("format") != "dsa-dataset-v1")
    io_fail(root / "manifest.json", "unknown dataset format");

  Dataset ds;
  ds.cfg = scene_config_from_json(manifest.at("scene"));
  ds.n_train = manifest.at("n_train");
  ds.n_val = manifest.at("n_val");
  ds.root = root;

  std::ifstream af(root / "annotations.json");
  if (!af) io_fail(root / "annotations.json", "cannot open");
  nlohmann::json ann = nlohmann::json::parse(af);
  for (const auto& e : ann) {
    DatasetItem item;
    item.index = e.at("index");
    item.train = e.at("split") == "train";
    item.truncated = e.at("truncated");
    for (const auto& o : e.at("objects")) {
      const auto& b = o.at("box");
      item.gts.push_back({{b[0], b[1], b[2], b[3]}, o.at("class")});
    }
    ds.items.push_back(item);
  }
  return ds;
}

}  // namespace dsa
