#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsa/detector.hpp"
#include "dsa/scenes.hpp"
#include "dsa/train.hpp"

namespace dsa {

// Flat key = value run configuration. Every key has a default; unknown keys
// are rejected by name; the full set echoes into the run report so a run is
// reproducible from its report alone.
class RunConfig {
 public:
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> kDefaults = {
        {"image_size", "64"},      {"channels", "16"},
        {"classes", "4"},          {"anchors", "3"},
        {"head_depth", "4"},       {"placement", "before"},
        {"variant", "self"},       {"shared", "false"},
        {"strided", "false"},      {"stride_kernel", "1x1"},
        {"dsa_levels", "4-7"},     {"gamma_mode", "learned"},
        {"with_confidence", "false"}, {"nms_iou", "0.5"},
        {"score_mode", "cls"},     {"score_floor", "0.05"},
        {"epochs", "12"},          {"lr", "0.01"},
        {"momentum", "0"},         {"weight_decay", "0"},
        {"batch_size", "1"},       {"train_size", "500"},
        {"val_size", "100"},       {"objects_min", "1"},
        {"objects_max", "4"},      {"size_min", "8"},
        {"size_max", "40"},        {"overlap_cap", "0.3"},
        {"noise", "0.02"},         {"seed", "1"},
    };
    return kDefaults;
  }

  static RunConfig from_file(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides,
                             std::ostream* warn = &std::cerr) {
    RunConfig cfg;
    cfg.kv_ = defaults();
    if (path) {
      std::ifstream in(*path);
      if (!in) fail("config: cannot open " + path->string());
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
          fail("config: malformed line " + std::to_string(lineno) + " in " +
               path->string());
        const std::string key = trim(trimmed.substr(0, eq));
        const std::string value = trim(trimmed.substr(eq + 1));
        if (!cfg.kv_.count(key))
          fail("config: unknown key '" + key + "' (line " +
               std::to_string(lineno) + ")");
        if (cfg.set_.count(key) && warn)
          *warn << "config: duplicate key '" << key
                << "', last occurrence wins\n";
        cfg.kv_[key] = value;
        cfg.set_.insert(key);
      }
    }
    for (const auto& ov : overrides) {
      const auto eq = ov.find('=');
      if (eq == std::string::npos)
        fail("config: override '" + ov + "' is not key=value");
      const std::string key = trim(ov.substr(0, eq));
      if (!cfg.kv_.count(key)) fail("config: unknown key '" + key + "'");
      cfg.kv_[key] = trim(ov.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

  std::string gets(const std::string& key) const { return kv_.at(key); }

  long long geti(const std::string& key) const {
    try {
      size_t pos = 0;
      const long long v = std::stoll(kv_.at(key), &pos);
      if (pos != kv_.at(key).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail("config: key '" + key + "': bad integer '" + kv_.at(key) + "'");
    }
  }

  double getd(const std::string& key) const {
    try {
      size_t pos = 0;
      const double v = std::stod(kv_.at(key), &pos);
      if (pos != kv_.at(key).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail("config: key '" + key + "': bad number '" + kv_.at(key) + "'");
    }
  }

  bool getb(const std::string& key) const {
    const std::string& v = kv_.at(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("config: key '" + key + "': bad boolean '" + v + "'");
  }

  std::uint64_t seed() const {
    return static_cast<std::uint64_t>(geti("seed"));
  }

  std::pair<int, int> dsa_levels() const {
    const std::string& v = kv_.at("dsa_levels");
    const auto dash = v.find('-');
    try {
      if (dash == std::string::npos) {
        const int l = std::stoi(v);
        return {l, l};
      }
      return {std::stoi(v.substr(0, dash)), std::stoi(v.substr(dash + 1))};
    } catch (const std::exception&) {
      fail("config: key 'dsa_levels': bad range '" + v + "'");
    }
  }

  DetectorConfig detector() const {
    DetectorConfig d;
    d.image_size = static_cast<int>(geti("image_size"));
    d.channels = static_cast<int>(geti("channels"));
    d.classes = static_cast<int>(geti("classes"));
    d.anchors_per_loc = static_cast<int>(geti("anchors"));
    d.head_depth = static_cast<int>(geti("head_depth"));
    d.placement = parse_placement(gets("placement"));
    d.variant = parse_variant(gets("variant"));
    d.shared = getb("shared");
    d.strided = getb("strided");
    d.stride_kernel = parse_stride_kernel(gets("stride_kernel"));
    std::tie(d.dsa_lo, d.dsa_hi) = dsa_levels();
    d.gamma_mode = parse_gamma_mode(gets("gamma_mode"));
    d.with_confidence = getb("with_confidence");
    d.nms_iou = getd("nms_iou");
    d.score_mode = parse_score_mode(gets("score_mode"));
    d.score_floor = getd("score_floor");
    d.validate();
    return d;
  }

  SceneConfig scene() const {
    SceneConfig s;
    s.image_size = static_cast<int>(geti("image_size"));
    s.min_objects = static_cast<int>(geti("objects_min"));
    s.max_objects = static_cast<int>(geti("objects_max"));
    s.classes = static_cast<int>(geti("classes"));
    s.size_min = static_cast<int>(geti("size_min"));
    s.size_max = static_cast<int>(geti("size_max"));
    s.overlap_cap = getd("overlap_cap");
    s.noise = getd("noise");
    s.seed = seed();
    s.validate();
    return s;
  }

  OptimizerConfig optimizer() const {
    OptimizerConfig o;
    o.lr = getd("lr");
    o.momentum = getd("momentum");
    o.weight_decay = getd("weight_decay");
    o.batch_size = static_cast<int>(geti("batch_size"));
    o.epochs = static_cast<int>(geti("epochs"));
    if (o.batch_size < 1) fail("config: batch_size must be >= 1");
    if (o.epochs < 0) fail("config: epochs must be >= 0");
    return o;
  }

  nlohmann::json echo() const {
    nlohmann::json j;
    for (const auto& [k, v] : kv_) j[k] = v;
    return j;
  }

  // FNV-1a over the canonical "key=value\n" serialization
  std::string digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
      }
    };
    for (const auto& [k, v] : kv_) {
      feed(k);
      feed("=");
      feed(v);
      feed("\n");
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }

  void set(const std::string& key, const std::string& value) {
    if (!kv_.count(key)) fail("config: unknown key '" + key + "'");
    kv_[key] = value;
  }

  void validate() const {
    detector();
    scene();
    optimizer();
    if (geti("train_size") < 1 || geti("val_size") < 1)
      fail("config: train_size and val_size must be >= 1");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static Placement parse_placement(const std::string& v) {
    if (v == "before") return Placement::kBefore;
    if (v == "after") return Placement::kAfter;
    if (v == "none") return Placement::kNone;
    fail("config: key 'placement': expected before|after|none, got '" + v +
         "'");
  }
  static AttentionVariant parse_variant(const std::string& v) {
    if (v == "self") return AttentionVariant::kSelfAttention;
    if (v == "cbam") return AttentionVariant::kCbam;
    fail("config: key 'variant': expected self|cbam, got '" + v + "'");
  }
  static int parse_stride_kernel(const std::string& v) {
    if (v == "1x1" || v == "1") return 1;
    if (v == "3x3" || v == "3") return 3;
    fail("config: key 'stride_kernel': expected 1x1|3x3, got '" + v + "'");
  }
  static GammaMode parse_gamma_mode(const std::string& v) {
    if (v == "learned") return GammaMode::kLearned;
    if (v == "fixed1") return GammaMode::kFixedOne;
    fail("config: key 'gamma_mode': expected learned|fixed1, got '" + v + "'");
  }
  static ScoreMode parse_score_mode(const std::string& v) {
    if (v == "cls") return ScoreMode::kClsOnly;
    if (v == "clsxconf") return ScoreMode::kClsTimesConf;
    fail("config: key 'score_mode': expected cls|clsxconf, got '" + v + "'");
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> set_;
};

}  // namespace dsa
