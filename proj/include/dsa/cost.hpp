#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dsa/attention.hpp"
#include "dsa/io.hpp"
#include "dsa/rng.hpp"

namespace dsa {

// Cost model for one self-attention branch. Multiply-accumulates cover the
// Q/K/V projections and the two attention matrix products; softmax
// exponentials are a separate column. cubic_madds is the naive d_k * N^3
// figure sometimes quoted for attention cost — reported for comparison
// against the quadratic kernel actually implemented, never used as truth.
struct CostReport {
  int level = 0;
  std::string variant;  // "plain", "strided-1x1", "strided-3x3"
  long long n = 0;      // H * W
  long long n_att = 0;  // attention grid positions (ceil(H/2)*ceil(W/2) strided)
  long long d_k = 0;
  std::uint64_t analytic_madds = 0;
  std::uint64_t measured_madds = 0;
  std::uint64_t analytic_exps = 0;
  std::uint64_t measured_exps = 0;
  bool measured = false;
  std::uint64_t attn_matrix_entries = 0;
  std::uint64_t peak_memory_bytes = 0;  // weights + Q/K/V at 8 bytes/real
  std::uint64_t cubic_madds = 0;
};

// Measuring re-runs the instrumented kernels on a matching random input;
// skipped (measured = false) when the analytic count exceeds the budget.
inline CostReport flops_self_attention(int C, int H, int W, bool strided,
                                       int kernel = 1,
                                       std::uint64_t measure_budget = 200000000ull) {
  if (C < 1 || H < 1 || W < 1) fail("flops_self_attention: bad dims");
  if (strided && (H < 2 || W < 2))
    fail("flops_self_attention: strided variant needs H, W >= 2");
  const int k = strided ? kernel : 1;
  if (k != 1 && k != 3) fail("flops_self_attention: kernel must be 1 or 3");

  CostReport r;
  r.variant = strided ? (k == 3 ? "strided-3x3" : "strided-1x1") : "plain";
  r.n = static_cast<long long>(H) * W;
  const long long ah = strided ? (H + 1) / 2 : H;
  const long long aw = strided ? (W + 1) / 2 : W;
  r.n_att = ah * aw;
  r.d_k = C;

  const std::uint64_t na = static_cast<std::uint64_t>(r.n_att);
  const std::uint64_t c = static_cast<std::uint64_t>(C);
  r.analytic_madds = 3 * c * na * (c * k * k)  // projections
                     + 2 * na * na * c;        // QK^T and AV
  r.analytic_exps = na * na;
  r.attn_matrix_entries = na * na;
  r.peak_memory_bytes = (na * na + 3 * na * c) * 8;
  r.cubic_madds = c * na * na * na;

  if (r.analytic_madds <= measure_budget) {
    Rng rng(Rng::derive(0x9d5ac1f3u, r.variant) ^ (c * 131 + na));
    FeatureMap f(C, H, W);
    for (auto& v : f.data) v = rng.uniform(-1.0, 1.0);
    SelfAttentionParams p = random_sa_params(rng, C, strided ? 2 : 1, k);
    Graph g;
    const NodeId fn = g.input(to_tensor(f));
    const auto nodes = detail::sa_nodes(g, p);
    build_self_attention_branch(g, fn, nodes);
    ops::reset_counters();
    g.forward();
    r.measured_madds = ops::madd_count;
    r.measured_exps = ops::exp_count;
    r.measured = true;
    ops::reset_counters();
  }
  return r;
}

// ---------------------------------------------------------------------------
// attention statistics and heatmap export

struct AttentionStats {
  std::vector<double> row_entropy;  // nats
  double mean_entropy = 0.0;
  double max_entropy = 0.0;
  double gamma = 0.0;
};

inline AttentionStats attention_entropy(const AttentionRecord& rec) {
  if (!rec.self_attention)
    fail("attention_entropy: record is not row-stochastic");
  AttentionStats st;
  st.gamma = rec.gamma;
  st.row_entropy.reserve(rec.weights.rows);
  for (int i = 0; i < rec.weights.rows; ++i) {
    double h = 0.0;
    for (int j = 0; j < rec.weights.cols; ++j) {
      const double w = rec.weights.at(i, j);
      if (w > 0.0) h -= w * std::log(w);
    }
    st.row_entropy.push_back(h);
    st.max_entropy = std::max(st.max_entropy, h);
    st.mean_entropy += h;
  }
  if (!st.row_entropy.empty()) st.mean_entropy /= st.row_entropy.size();
  return st;
}

enum class HeatmapFormat { kPgm, kCsv };

// Exports one H x W heatmap: the attended-weight row of the chosen query
// position for self-attention records, or the spatial mask for gate records.
inline void export_heatmap(const AttentionRecord& rec,
                           const std::filesystem::path& path,
                           HeatmapFormat format, int query = 0) {
  std::vector<double> vals;
  int h = rec.att_h, w = rec.att_w;
  if (rec.self_attention) {
    if (query < 0 || query >= rec.weights.rows)
      fail("export_heatmap: query position " + std::to_string(query) +
           " outside 0.." + std::to_string(rec.weights.rows - 1));
    vals.assign(rec.weights.data.begin() +
                    static_cast<size_t>(query) * rec.weights.cols,
                rec.weights.data.begin() +
                    static_cast<size_t>(query + 1) * rec.weights.cols);
  } else {
    vals = rec.mask.data;
    h = rec.mask.height;
    w = rec.mask.width;
  }
  if (format == HeatmapFormat::kPgm) {
    write_pgm(path, vals, h, w);
  } else {
    Matrix m(h, w);
    m.data = vals;
    write_csv_matrix(path, m);
  }
}

// ---------------------------------------------------------------------------
// ablation table

// One CSV row per named run, fixed metric column order, rows sorted by name.
// All rows must carry the identical metric key sequence.
inline void ablation_report(
    std::vector<std::pair<std::string,
                          std::vector<std::pair<std::string, double>>>> rows,
    const std::filesystem::path& path) {
  if (rows.empty()) fail("ablation_report: no runs");
  for (const auto& [name, metrics] : rows) {
    if (metrics.size() != rows[0].second.size())
      fail("ablation_report: heterogeneous metric sets (" + name + ")");
    for (size_t i = 0; i < metrics.size(); ++i)
      if (metrics[i].first != rows[0].second[i].first)
        fail("ablation_report: heterogeneous metric sets (" + name + ")");
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::ofstream out(path);
  if (!out) io_fail(path, "cannot open for writing");
  out << "config";
  for (const auto& [key, value] : rows[0].second) out << ',' << key;
  out << '\n';
  for (const auto& [name, metrics] : rows) {
    out << name;
    for (const auto& [key, value] : metrics) out << ',' << format_double(value);
    out << '\n';
  }
  if (!out) io_fail(path, "write failure");
}

}  // namespace dsa
