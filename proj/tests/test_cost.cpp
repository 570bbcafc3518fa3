#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "dsa/cost.hpp"
#include "helpers.hpp"

using namespace dsa;

TEST_CASE("doubling H and W scales the attention core by 16", "[cost]") {
  const auto small = flops_self_attention(8, 4, 4, false);
  const auto big = flops_self_attention(8, 8, 8, false);
  const auto core = [](const CostReport& r) {
    return r.analytic_madds -
           3ull * r.d_k * r.d_k * static_cast<std::uint64_t>(r.n_att);
  };
  REQUIRE(core(big) == 16 * core(small));
}

TEST_CASE("strided variant shrinks the attention matrix 16x on even dims",
          "[cost]") {
  const auto plain = flops_self_attention(8, 6, 8, false);
  const auto strided = flops_self_attention(8, 6, 8, true, 1);
  REQUIRE(plain.attn_matrix_entries == 16 * strided.attn_matrix_entries);
  REQUIRE(strided.n_att == plain.n / 4);
}

TEST_CASE("measured madds equal analytic madds across a shape grid",
          "[cost]") {
  for (int c : {2, 5, 16})
    for (auto [h, w] : {std::pair{2, 3}, std::pair{5, 5}, std::pair{8, 6}}) {
      const auto plain = flops_self_attention(c, h, w, false);
      REQUIRE(plain.measured);
      REQUIRE(plain.measured_madds == plain.analytic_madds);
      REQUIRE(plain.measured_exps == plain.analytic_exps);
      for (int k : {1, 3}) {
        const auto strided = flops_self_attention(c, h, w, true, k);
        REQUIRE(strided.measured);
        REQUIRE(strided.measured_madds == strided.analytic_madds);
        REQUIRE(strided.measured_exps == strided.analytic_exps);
      }
    }
}

TEST_CASE("the high-resolution estimate quantifies the memory blow-up",
          "[cost]") {
  // C = 256 features on a 600x1000 image at stride 8: 75 x 125 positions
  const auto r = flops_self_attention(256, 75, 125, false);
  REQUIRE(r.n == 9375);
  REQUIRE(r.attn_matrix_entries == 87890625ull);
  const double matrix_gb = double(r.attn_matrix_entries) * 8.0 / 1e9;
  REQUIRE(matrix_gb == Catch::Approx(0.703125));
  REQUIRE(r.peak_memory_bytes ==
          (87890625ull + 3ull * 9375 * 256) * 8);
  REQUIRE_FALSE(r.measured);  // far past the measurement budget
  // the naive cubic figure is n/2 times the implemented quadratic core
  const std::uint64_t core = 2ull * r.n_att * r.n_att * r.d_k;
  REQUIRE(r.cubic_madds / core == static_cast<std::uint64_t>(r.n) / 2);
}

TEST_CASE("entropy of uniform and one-hot rows", "[cost]") {
  AttentionRecord rec;
  rec.self_attention = true;
  rec.att_h = 2;
  rec.att_w = 2;
  rec.weights = Matrix(4, 4);
  for (auto& v : rec.weights.data) v = 0.25;
  const auto uniform = attention_entropy(rec);
  for (double h : uniform.row_entropy)
    REQUIRE(h == Catch::Approx(std::log(4.0)).epsilon(1e-14));

  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rec.weights.at(i, j) = i == j ? 1.0 : 0.0;
  const auto onehot = attention_entropy(rec);
  for (double h : onehot.row_entropy) REQUIRE(h == 0.0);
}

TEST_CASE("entropy matches an extended-precision oracle and its bounds",
          "[cost]") {
  Rng rng(70);
  AttentionRecord rec;
  rec.self_attention = true;
  rec.weights = Matrix(6, 6);
  for (int i = 0; i < 6; ++i) {
    long double sum = 0;
    for (int j = 0; j < 6; ++j) {
      rec.weights.at(i, j) = rng.uniform(0.01, 1.0);
      sum += rec.weights.at(i, j);
    }
    for (int j = 0; j < 6; ++j) rec.weights.at(i, j) /= double(sum);
  }
  const auto st = attention_entropy(rec);
  for (int i = 0; i < 6; ++i) {
    long double want = 0;
    for (int j = 0; j < 6; ++j) {
      const long double w = rec.weights.at(i, j);
      want -= w * logl(w);
    }
    REQUIRE(st.row_entropy[i] == Catch::Approx(double(want)).epsilon(1e-12));
    REQUIRE(st.row_entropy[i] >= 0.0);
    REQUIRE(st.row_entropy[i] <= std::log(6.0) + 1e-12);
  }
}

TEST_CASE("gate records are rejected by the entropy op", "[cost]") {
  AttentionRecord rec;
  rec.self_attention = false;
  REQUIRE_THROWS(attention_entropy(rec));
}

TEST_CASE("uniform weights export as constant gray", "[cost]") {
  AttentionRecord rec;
  rec.self_attention = true;
  rec.att_h = 2;
  rec.att_w = 2;
  rec.weights = Matrix(4, 4);
  for (auto& v : rec.weights.data) v = 0.25;
  const auto path = std::filesystem::temp_directory_path() / "dsa_hm.pgm";
  export_heatmap(rec, path, HeatmapFormat::kPgm, 1);
  std::ifstream in(path);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  REQUIRE(magic == "P2");
  REQUIRE(w == 2);
  REQUIRE(h == 2);
  int v;
  while (in >> v) REQUIRE(v == 255);
  std::filesystem::remove(path);
}

TEST_CASE("csv heatmap round-trips and its row sums to one", "[cost]") {
  Rng rng(71);
  AttentionRecord rec;
  rec.self_attention = true;
  rec.att_h = 3;
  rec.att_w = 3;
  rec.weights = Matrix(9, 9);
  for (int i = 0; i < 9; ++i) {
    double sum = 0;
    for (int j = 0; j < 9; ++j) {
      rec.weights.at(i, j) = rng.uniform(0.001, 1.0);
      sum += rec.weights.at(i, j);
    }
    for (int j = 0; j < 9; ++j) rec.weights.at(i, j) /= sum;
  }
  const auto path = std::filesystem::temp_directory_path() / "dsa_hm.csv";
  export_heatmap(rec, path, HeatmapFormat::kCsv, 4);
  const Matrix back = read_csv_matrix(path);
  REQUIRE(back.rows == 3);
  REQUIRE(back.cols == 3);
  double sum = 0;
  double max_rel = 0;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      const double want = rec.weights.at(4, y * 3 + x);
      max_rel = std::max(max_rel,
                         std::abs(back.at(y, x) - want) / std::abs(want));
      sum += back.at(y, x);
    }
  REQUIRE(max_rel < 1e-12);  // 12 significant digits survive the round trip
  REQUIRE(std::abs(sum - 1.0) < 1e-9);
  std::filesystem::remove(path);
}

TEST_CASE("ablation report shape and determinism", "[cost]") {
  const std::vector<std::pair<std::string, double>> metrics = {
      {"AP", 0.3}, {"AP50", 0.5}, {"AP75", 0.25}, {"AP_S", 0.1},
      {"AP_M", 0.4}, {"AP_L", -1.0}, {"AR", 0.5}, {"AR_S", 0.2},
      {"AR_M", 0.6}, {"AR_L", -1.0}};
  const auto path = std::filesystem::temp_directory_path() / "dsa_abl.csv";

  ablation_report({{"run-a", metrics}}, path);
  {
    std::ifstream in(path);
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    REQUIRE(header ==
            "config,AP,AP50,AP75,AP_S,AP_M,AP_L,AR,AR_S,AR_M,AR_L");
    REQUIRE_FALSE(std::getline(in, extra));
  }

  // identical runs produce identical rows, sorted by name
  ablation_report({{"run-b", metrics}, {"run-a", metrics}}, path);
  {
    std::ifstream in(path);
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    REQUIRE(row1.substr(0, 6) == "run-a,");
    REQUIRE(row2.substr(0, 6) == "run-b,");
    REQUIRE(row1.substr(6) == row2.substr(6));
  }

  // heterogeneous metric sets are rejected
  auto other = metrics;
  other[3].first = "AP_tiny";
  REQUIRE_THROWS(ablation_report({{"a", metrics}, {"b", other}}, path));
  REQUIRE_THROWS(ablation_report({}, path));
  std::filesystem::remove(path);
}
