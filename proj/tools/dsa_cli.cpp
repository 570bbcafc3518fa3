// Command-line entry point: gradient checks, dataset generation, training,
// evaluation, ablation sweeps, cost reports, and attention heatmap export.
//
// Usage: dsa <subcommand> [--config FILE] [--out DIR] [key=value ...]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsa/config.hpp"
#include "dsa/cost.hpp"
#include "dsa/detector.hpp"
#include "dsa/eval.hpp"
#include "dsa/gradsuite.hpp"
#include "dsa/io.hpp"
#include "dsa/scenes.hpp"
#include "dsa/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
};

dsa::RunConfig load_config(const CommonArgs& args) {
  std::optional<fs::path> path;
  if (!args.config_path.empty()) path = args.config_path;
  return dsa::RunConfig::from_file(path, args.overrides);
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) dsa::io_fail(path, "cannot open for writing");
  out << j.dump(2) << '\n';
}

json base_report(const std::string& command, const dsa::RunConfig& cfg) {
  return {{"command", command},
          {"config", cfg.echo()},
          {"config_digest", cfg.digest()},
          {"seed", cfg.seed()}};
}

json metrics_json(const dsa::EvalMetrics& m) {
  json j;
  for (const auto& [key, value] : dsa::metric_rows(m)) j[key] = value;
  return j;
}

json cost_json(const dsa::CostReport& r) {
  return {{"level", r.level},
          {"variant", r.variant},
          {"n", r.n},
          {"n_att", r.n_att},
          {"d_k", r.d_k},
          {"analytic_madds", r.analytic_madds},
          {"measured_madds", r.measured_madds},
          {"analytic_exps", r.analytic_exps},
          {"measured_exps", r.measured_exps},
          {"measured", r.measured},
          {"attn_matrix_entries", r.attn_matrix_entries},
          {"peak_memory_bytes", r.peak_memory_bytes},
          {"cubic_madds", r.cubic_madds}};
}

std::uint64_t loss_trace_digest(const std::vector<dsa::LossBreakdown>& trace) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& lb : trace) {
    const auto bits = std::bit_cast<std::uint64_t>(lb.total);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

struct LoadedSplit {
  std::vector<dsa::FeatureMap> images;
  std::vector<std::vector<dsa::GroundTruth>> gts;
};

LoadedSplit load_split(const dsa::Dataset& ds, bool train) {
  LoadedSplit out;
  for (const auto& item : ds.items) {
    if (item.train != train) continue;
    out.images.push_back(ds.load_image(item.index));
    out.gts.push_back(item.gts);
  }
  return out;
}

void check_dataset_matches(const dsa::RunConfig& cfg, const dsa::Dataset& ds) {
  if (ds.cfg.image_size != cfg.geti("image_size") ||
      ds.cfg.classes != cfg.geti("classes"))
    dsa::fail("dataset does not match config (image_size/classes differ)");
}

std::vector<dsa::CostReport> model_cost_reports(const dsa::DetectorConfig& d) {
  std::vector<dsa::CostReport> reports;
  if (d.placement == dsa::Placement::kNone) return reports;
  for (int level = d.dsa_lo; level <= d.dsa_hi; ++level) {
    int dim = d.image_size;
    for (int i = 0; i < level; ++i) dim = (dim + 1) / 2;
    dim = std::max(dim, 1);
    if (d.strided && dim < 2) continue;
    auto r = dsa::flops_self_attention(d.channels, dim, dim, d.strided,
                                       d.stride_kernel);
    r.level = level;
    reports.push_back(r);
  }
  return reports;
}

dsa::EvalMetrics run_eval(dsa::ParamStore& ps, const dsa::DetectorConfig& dcfg,
                          const LoadedSplit& val, int classes) {
  std::vector<std::vector<dsa::Detection>> dets;
  dets.reserve(val.images.size());
  for (const auto& img : val.images)
    dets.push_back(dsa::detect(ps, dcfg, img).detections);
  return dsa::evaluate_ap(dets, val.gts, classes);
}

void write_metrics_csv(const fs::path& path, const std::string& config_digest,
                       const dsa::EvalMetrics& m) {
  std::ofstream out(path);
  if (!out) dsa::io_fail(path, "cannot open for writing");
  out << "config";
  for (const auto& [key, value] : dsa::metric_rows(m)) out << ',' << key;
  out << '\n' << config_digest;
  for (const auto& [key, value] : dsa::metric_rows(m))
    out << ',' << dsa::format_double(value);
  out << '\n';
}

// ---------------------------------------------------------------------------

int cmd_gradcheck(const CommonArgs& args) {
  const auto cfg = load_config(args);
  const auto reports = dsa::run_gradient_suite(1e-4, cfg.seed());
  bool all = true;
  std::printf("%-30s %8s %12s %12s %6s\n", "op", "probes", "max_abs",
              "max_rel", "pass");
  for (const auto& r : reports) {
    std::printf("%-30s %8d %12.3e %12.3e %6s\n", r.op.c_str(), r.probe_count,
                r.max_abs_err, r.max_rel_err, r.pass ? "yes" : "NO");
    all = all && r.pass;
  }
  fs::create_directories(args.out_dir);
  std::ofstream csv(fs::path(args.out_dir) / "gradcheck.csv");
  csv << "op,probes,max_abs_err,max_rel_err,pass\n";
  for (const auto& r : reports)
    csv << r.op << ',' << r.probe_count << ','
        << dsa::format_double(r.max_abs_err) << ','
        << dsa::format_double(r.max_rel_err) << ',' << (r.pass ? 1 : 0)
        << '\n';
  std::printf("gradient suite: %s (%zu checks)\n", all ? "PASS" : "FAIL",
              reports.size());
  return all ? 0 : 1;
}

int cmd_gen_data(const CommonArgs& args) {
  const auto cfg = load_config(args);
  const auto ds = dsa::make_dataset(cfg.scene(),
                                    static_cast<int>(cfg.geti("train_size")),
                                    static_cast<int>(cfg.geti("val_size")),
                                    args.out_dir);
  long long objects = 0;
  for (const auto& item : ds.items) objects += item.gts.size();
  std::printf("dataset: %d train + %d val images, %lld objects, at %s\n",
              ds.n_train, ds.n_val, objects, args.out_dir.c_str());
  return 0;
}

int train_one(const dsa::RunConfig& cfg, const dsa::Dataset& ds,
              const LoadedSplit& train_split, const LoadedSplit& val_split,
              const fs::path& out, dsa::EvalMetrics* metrics_out) {
  fs::create_directories(out);
  const auto dcfg = cfg.detector();
  const auto opt = cfg.optimizer();
  auto ps = dsa::init_detector_params(dcfg, cfg.seed());

  const auto stats = dsa::train(ps, dcfg, opt, train_split.images,
                                train_split.gts, cfg.seed());
  for (size_t e = 0; e < stats.epoch_mean.size(); ++e)
    std::printf("  epoch %2zu  lr %.5f  focal %.4f  box %.4f  conf %.4f  total %.4f\n",
                e + 1, stats.epoch_lr[e], stats.epoch_mean[e].focal,
                stats.epoch_mean[e].box, stats.epoch_mean[e].confidence,
                stats.epoch_mean[e].total);

  dsa::save_checkpoint(out / "checkpoint.dsackpt", ps);

  std::ofstream csv(out / "metrics.csv");
  csv << "config,epoch,lr,focal,box,confidence,total\n";
  for (size_t e = 0; e < stats.epoch_mean.size(); ++e)
    csv << cfg.digest() << ',' << e + 1 << ','
        << dsa::format_double(stats.epoch_lr[e]) << ','
        << dsa::format_double(stats.epoch_mean[e].focal) << ','
        << dsa::format_double(stats.epoch_mean[e].box) << ','
        << dsa::format_double(stats.epoch_mean[e].confidence) << ','
        << dsa::format_double(stats.epoch_mean[e].total) << '\n';
  csv.close();

  const auto metrics = run_eval(ps, dcfg, val_split, dcfg.classes);
  if (metrics_out) *metrics_out = metrics;

  json report = base_report("train", cfg);
  report["dataset"] = ds.root.string();
  report["metrics"] = metrics_json(metrics);
  char digest[24];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(
                    loss_trace_digest(stats.step_losses)));
  report["loss_trace_digest"] = digest;
  json cost = json::array();
  for (const auto& r : model_cost_reports(dcfg)) cost.push_back(cost_json(r));
  report["cost"] = cost;
  write_json_file(out / "run_report.json", report);

  std::printf("  val AP %.4f AP50 %.4f AP75 %.4f\n", metrics.ap, metrics.ap50,
              metrics.ap75);
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& data_dir) {
  const auto cfg = load_config(args);
  const auto ds = dsa::load_dataset(data_dir);
  check_dataset_matches(cfg, ds);
  const auto train_split = load_split(ds, true);
  const auto val_split = load_split(ds, false);
  std::printf("training on %zu images, validating on %zu\n",
              train_split.images.size(), val_split.images.size());
  return train_one(cfg, ds, train_split, val_split, args.out_dir, nullptr);
}

int cmd_eval(const CommonArgs& args, const std::string& data_dir,
             const std::string& checkpoint) {
  const auto cfg = load_config(args);
  const auto ds = dsa::load_dataset(data_dir);
  check_dataset_matches(cfg, ds);
  const auto dcfg = cfg.detector();
  auto ps = dsa::load_checkpoint(checkpoint);
  const auto expected = dsa::init_detector_params(dcfg, cfg.seed());
  if (expected.order != ps.order)
    dsa::fail("checkpoint parameters do not match the configured model");

  const auto val_split = load_split(ds, false);
  const auto metrics = run_eval(ps, dcfg, val_split, dcfg.classes);

  fs::create_directories(args.out_dir);
  write_metrics_csv(fs::path(args.out_dir) / "metrics.csv", cfg.digest(),
                    metrics);
  json report = base_report("eval", cfg);
  report["checkpoint"] = checkpoint;
  report["metrics"] = metrics_json(metrics);
  write_json_file(fs::path(args.out_dir) / "run_report.json", report);
  for (const auto& [key, value] : dsa::metric_rows(metrics))
    std::printf("%-5s %.4f\n", key.c_str(), value);
  return 0;
}

std::vector<std::pair<std::string, std::vector<std::string>>> ablate_grid(
    const std::vector<std::string>& vary) {
  if (vary.empty())
    return {{"1-baseline", {"placement=none"}},
            {"2-dsa-decoupled", {"placement=before", "shared=false"}},
            {"3-dsa-shared", {"placement=before", "shared=true"}},
            {"4-dsa-after", {"placement=after", "shared=false"}},
            {"5-dsa-gamma1", {"placement=before", "gamma_mode=fixed1"}},
            {"6-dsa-conf",
             {"placement=before", "with_confidence=true",
              "score_mode=clsxconf"}}};
  // cartesian product over the varied keys
  std::vector<std::pair<std::string, std::vector<std::string>>> grid = {
      {"", {}}};
  for (const auto& spec : vary) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      dsa::fail("--vary expects key=v1,v2,... got '" + spec + "'");
    const std::string key = spec.substr(0, eq);
    std::vector<std::string> values;
    std::string rest = spec.substr(eq + 1);
    size_t pos = 0;
    while (pos <= rest.size()) {
      size_t next = rest.find(',', pos);
      if (next == std::string::npos) next = rest.size();
      values.push_back(rest.substr(pos, next - pos));
      pos = next + 1;
    }
    std::vector<std::pair<std::string, std::vector<std::string>>> expanded;
    for (const auto& [name, overrides] : grid)
      for (const auto& v : values) {
        auto ov = overrides;
        ov.push_back(key + "=" + v);
        expanded.emplace_back(name.empty() ? key + "-" + v
                                           : name + "_" + key + "-" + v,
                              ov);
      }
    grid = std::move(expanded);
  }
  return grid;
}

int cmd_ablate(const CommonArgs& args, const std::string& data_dir,
               const std::vector<std::string>& vary) {
  const auto ds = dsa::load_dataset(data_dir);
  const auto train_split = load_split(ds, true);
  const auto val_split = load_split(ds, false);

  const auto grid = ablate_grid(vary);
  std::vector<std::pair<std::string,
                        std::vector<std::pair<std::string, double>>>> rows;
  for (const auto& [name, extra] : grid) {
    CommonArgs sub = args;
    sub.overrides.insert(sub.overrides.end(), extra.begin(), extra.end());
    const auto cfg = load_config(sub);
    check_dataset_matches(cfg, ds);
    std::printf("[%s]\n", name.c_str());
    dsa::EvalMetrics metrics;
    train_one(cfg, ds, train_split, val_split,
              fs::path(args.out_dir) / "runs" / name, &metrics);
    rows.emplace_back(name, dsa::metric_rows(metrics));
  }
  dsa::ablation_report(rows, fs::path(args.out_dir) / "ablation.csv");
  std::printf("ablation table: %s\n",
              (fs::path(args.out_dir) / "ablation.csv").string().c_str());
  return 0;
}

int cmd_cost(const CommonArgs& args, int C, int H, int W) {
  const auto cfg = load_config(args);
  std::vector<dsa::CostReport> reports;
  auto add_shape = [&](int level, int c, int h, int w) {
    reports.push_back(dsa::flops_self_attention(c, h, w, false));
    reports.back().level = level;
    if (h >= 2 && w >= 2)
      for (int k : {1, 3}) {
        reports.push_back(dsa::flops_self_attention(c, h, w, true, k));
        reports.back().level = level;
      }
  };
  if (C > 0 && H > 0 && W > 0) {
    add_shape(0, C, H, W);
  } else {
    const auto d = cfg.detector();
    for (int level = 3; level <= 7; ++level) {
      int dim = d.image_size;
      for (int i = 0; i < level; ++i) dim = (dim + 1) / 2;
      add_shape(level, d.channels, std::max(dim, 1), std::max(dim, 1));
    }
  }
  std::printf("%5s %-12s %8s %8s %14s %14s %10s %14s %12s %18s\n", "level",
              "variant", "N", "N_att", "analytic", "measured", "exps",
              "attn_entries", "mem_bytes", "cubic_formula");
  for (const auto& r : reports)
    std::printf("%5d %-12s %8lld %8lld %14llu %14s %10llu %14llu %12llu %18llu\n",
                r.level, r.variant.c_str(), r.n, r.n_att,
                static_cast<unsigned long long>(r.analytic_madds),
                r.measured
                    ? std::to_string(r.measured_madds).c_str()
                    : "-",
                static_cast<unsigned long long>(r.analytic_exps),
                static_cast<unsigned long long>(r.attn_matrix_entries),
                static_cast<unsigned long long>(r.peak_memory_bytes),
                static_cast<unsigned long long>(r.cubic_madds));

  fs::create_directories(args.out_dir);
  std::ofstream csv(fs::path(args.out_dir) / "cost.csv");
  csv << "level,variant,N,N_att,d_k,analytic_madds,measured_madds,measured,"
         "analytic_exps,measured_exps,attn_matrix_entries,peak_memory_bytes,"
         "cubic_madds\n";
  for (const auto& r : reports)
    csv << r.level << ',' << r.variant << ',' << r.n << ',' << r.n_att << ','
        << r.d_k << ',' << r.analytic_madds << ',' << r.measured_madds << ','
        << (r.measured ? 1 : 0) << ',' << r.analytic_exps << ','
        << r.measured_exps << ',' << r.attn_matrix_entries << ','
        << r.peak_memory_bytes << ',' << r.cubic_madds << '\n';
  csv.close();
  json report = base_report("cost", cfg);
  json cost = json::array();
  for (const auto& r : reports) cost.push_back(cost_json(r));
  report["cost"] = cost;
  write_json_file(fs::path(args.out_dir) / "run_report.json", report);
  return 0;
}

int cmd_attnmap(const CommonArgs& args, const std::string& checkpoint,
                const std::string& image_path, int level,
                const std::string& branch, int query_y, int query_x) {
  const auto cfg = load_config(args);
  const auto dcfg = cfg.detector();
  if (dcfg.placement == dsa::Placement::kNone)
    dsa::fail("attnmap: the configured model has no attention modules");
  auto ps = dsa::load_checkpoint(checkpoint);
  const auto image = dsa::read_fmap(image_path);

  const auto res = dsa::detect(ps, dcfg, image, /*capture=*/true);
  if (res.records.empty()) dsa::fail("attnmap: no attention records captured");
  fs::create_directories(args.out_dir);
  int exported = 0;
  for (const auto& rec : res.records) {
    if (level > 0 && rec.level != level) continue;
    if (!branch.empty() && rec.branch != branch) continue;
    int query = 0;
    if (rec.self_attention) {
      int qy = query_y, qx = query_x;
      if (level > 0) {
        // explicit level: the query must lie on that grid
        if (qy < 0 || qy >= rec.att_h || qx < 0 || qx >= rec.att_w)
          dsa::fail("attnmap: query position outside the attention grid " +
                    std::to_string(rec.att_h) + "x" +
                    std::to_string(rec.att_w));
      } else {
        qy = std::clamp(qy, 0, rec.att_h - 1);
        qx = std::clamp(qx, 0, rec.att_w - 1);
      }
      query = qy * rec.att_w + qx;
    }
    const std::string stem =
        "attn_l" + std::to_string(rec.level) + "_" + rec.branch;
    dsa::export_heatmap(rec, fs::path(args.out_dir) / (stem + ".pgm"),
                        dsa::HeatmapFormat::kPgm, query);
    dsa::export_heatmap(rec, fs::path(args.out_dir) / (stem + ".csv"),
                        dsa::HeatmapFormat::kCsv, query);
    const auto stats = rec.self_attention
                           ? dsa::attention_entropy(rec)
                           : dsa::AttentionStats{};
    std::printf("%s: grid %dx%d gamma %.5f mean_entropy %.4f\n", stem.c_str(),
                rec.att_h, rec.att_w, rec.gamma,
                rec.self_attention ? stats.mean_entropy : 0.0);
    ++exported;
  }
  if (exported == 0) dsa::fail("attnmap: no record matches level/branch");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decoupled spatial self-attention detection toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string data_dir, checkpoint, image_path, branch;
  std::vector<std::string> vary;
  int cost_c = 0, cost_h = 0, cost_w = 0;
  int level = 0, query_y = 0, query_x = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "key = value config file");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("overrides", common.overrides, "key=value overrides");
  };

  auto* g = app.add_subcommand("gradcheck", "run the gradient-check suite");
  add_common(g);
  auto* d = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(d);
  auto* t = app.add_subcommand("train", "train a detector");
  add_common(t);
  t->add_option("--data", data_dir, "dataset directory")->required();
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(e);
  e->add_option("--data", data_dir, "dataset directory")->required();
  e->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* a = app.add_subcommand("ablate", "train and compare a config grid");
  add_common(a);
  a->add_option("--data", data_dir, "dataset directory")->required();
  a->add_option("--vary", vary, "key=v1,v2 axis (repeatable)")->expected(1)
      ->allow_extra_args(false);
  auto* c = app.add_subcommand("cost", "attention cost reports");
  add_common(c);
  c->add_option("--C", cost_c, "channels");
  c->add_option("--H", cost_h, "feature map height");
  c->add_option("--W", cost_w, "feature map width");
  auto* m = app.add_subcommand("attnmap", "export attention heatmaps");
  add_common(m);
  m->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  m->add_option("--image", image_path, "input image (.fmap)")->required();
  m->add_option("--level", level, "pyramid level (default: all)");
  m->add_option("--branch", branch, "cls or loc (default: all)");
  m->add_option("--query-y", query_y, "query row on the attention grid");
  m->add_option("--query-x", query_x, "query column on the attention grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) return cmd_gradcheck(common);
    if (d->parsed()) return cmd_gen_data(common);
    if (t->parsed()) return cmd_train(common, data_dir);
    if (e->parsed()) return cmd_eval(common, data_dir, checkpoint);
    if (a->parsed()) return cmd_ablate(common, data_dir, vary);
    if (c->parsed()) return cmd_cost(common, cost_c, cost_h, cost_w);
    if (m->parsed()) return cmd_attnmap(common, checkpoint, image_path, level,
                                        branch, query_y, query_x);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 1;
}
