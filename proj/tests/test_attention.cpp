#include <catch2/catch_amalgamated.hpp>

#include "dsa/attention.hpp"
#include "dsa/gradcheck.hpp"
#include "helpers.hpp"

using namespace dsa;
using test::random_fm;

using test::sdpa_oracle;

TEST_CASE("cbam zero weights give a uniform 0.5 mask", "[attention]") {
  Rng rng(20);
  const FeatureMap f = random_fm(rng, 3, 4, 4);
  CbamParams p;
  p.w7 = ConvWeights(1, 2, 7, 7);  // all zero
  const auto [mask, out] = cbam_spatial_attention(f, p);
  for (double v : mask.data) REQUIRE(v == 0.5);
  for (size_t i = 0; i < out.data.size(); ++i)
    REQUIRE(out.data[i] == Catch::Approx(0.5 * f.data[i]).margin(1e-15));
}

TEST_CASE("cbam 1x1 spatial input reduces to a closed form", "[attention]") {
  // single position: max = mean = v, so mask = sigmoid(sum of center taps * v)
  Rng rng(21);
  const double v = 0.37;
  FeatureMap f(1, 1, 1);
  f.data = {v};
  CbamParams p = random_cbam_params(rng);
  const double s = p.w7.at(0, 0, 3, 3) + p.w7.at(0, 1, 3, 3);
  const auto [mask, out] = cbam_spatial_attention(f, p);
  REQUIRE(mask.data[0] == Catch::Approx(1.0 / (1.0 + std::exp(-s * v)))
                              .epsilon(1e-14));
  REQUIRE(out.data[0] == Catch::Approx(mask.data[0] * v).epsilon(1e-14));
}

TEST_CASE("cbam matches the step-by-step composition oracle", "[attention]") {
  Rng rng(22);
  const FeatureMap f = random_fm(rng, 3, 5, 5);
  CbamParams p = random_cbam_params(rng);
  const auto [mask, out] = cbam_spatial_attention(f, p);

  const FeatureMap pooled = channel_pool_concat(f);
  const FeatureMap conv = conv2d(pooled, p.w7, 1, 3);
  const FeatureMap want_mask = sigmoid_map(conv);
  REQUIRE(test::max_abs_diff(mask.data, want_mask.data) == 0.0);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x)
        REQUIRE(out.at(c, y, x) ==
                Catch::Approx(f.at(c, y, x) * want_mask.at(0, y, x))
                    .margin(1e-15));
  for (double v : mask.data) {
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("scaled dot attention with one position returns v", "[attention]") {
  Rng rng(23);
  AttentionTensors t;
  t.q = test::random_matrix(rng, 1, 3);
  t.k = test::random_matrix(rng, 1, 3);
  t.v = test::random_matrix(rng, 1, 3);
  const Matrix out = scaled_dot_attention(t);
  REQUIRE(test::bitwise_equal(out.data, t.v.data));
  REQUIRE(t.weights.at(0, 0) == 1.0);
}

TEST_CASE("zero queries give uniform weights and the mean of v", "[attention]") {
  AttentionTensors t;
  t.q = Matrix(2, 1);
  t.k = Matrix(2, 1);
  t.k.data = {0.4, -1.2};
  t.v = Matrix(2, 1);
  t.v.data = {1.0, 3.0};
  const Matrix out = scaled_dot_attention(t);
  REQUIRE(out.at(0, 0) == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(out.at(1, 0) == Catch::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("scaled dot attention matches the extended-precision oracle",
          "[attention]") {
  Rng rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = int(rng.next_int(1, 9));
    const int d = int(rng.next_int(1, 4));
    AttentionTensors t;
    t.q = test::random_matrix(rng, n, d, -2, 2);
    t.k = test::random_matrix(rng, n, d, -2, 2);
    t.v = test::random_matrix(rng, n, d, -2, 2);
    const Matrix got = scaled_dot_attention(t);
    const Matrix want = sdpa_oracle(t.q, t.k, t.v);
    REQUIRE(test::max_rel_diff(got.data, want.data) < 1e-10);
    for (int i = 0; i < n; ++i) {
      double sum = 0;
      for (int j = 0; j < n; ++j) sum += t.weights.at(i, j);
      REQUIRE(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("attention outputs stay inside the v range", "[attention]") {
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = int(rng.next_int(2, 8));
    const int d = int(rng.next_int(1, 4));
    AttentionTensors t;
    t.q = test::random_matrix(rng, n, d, -3, 3);
    t.k = test::random_matrix(rng, n, d, -3, 3);
    t.v = test::random_matrix(rng, n, d, -2, 5);
    double lo = 1e300, hi = -1e300;
    for (double v : t.v.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const Matrix out = scaled_dot_attention(t);
    for (double v : out.data) {
      REQUIRE(v >= lo - 1e-12);
      REQUIRE(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("empty attention tensors are rejected", "[attention]") {
  AttentionTensors t;
  REQUIRE_THROWS(scaled_dot_attention(t));
}

TEST_CASE("zero query projection makes the branch spatially uniform",
          "[attention]") {
  Rng rng(26);
  const FeatureMap f = random_fm(rng, 2, 3, 3);
  SelfAttentionParams p = random_sa_params(rng, 2);
  p.wq.weights.assign(p.wq.weights.size(), 0.0);
  const auto [att, rec] = self_attention_branch(f, p);
  const FeatureMap vproj = conv2d(f, p.wv, 1, 0);
  for (int c = 0; c < 2; ++c) {
    double mean = 0;
    for (int i = 0; i < 9; ++i) mean += vproj.data[c * 9 + i];
    mean /= 9;
    for (int i = 0; i < 9; ++i)
      REQUIRE(att.data[c * 9 + i] == Catch::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("single-position branch returns the v projection", "[attention]") {
  Rng rng(27);
  const FeatureMap f = random_fm(rng, 3, 1, 1);
  const SelfAttentionParams p = random_sa_params(rng, 3);
  const auto [att, rec] = self_attention_branch(f, p);
  const FeatureMap vproj = conv2d(f, p.wv, 1, 0);
  REQUIRE(test::max_abs_diff(att.data, vproj.data) < 1e-15);
}

TEST_CASE("branch matches the conv/reshape/attention composition oracle",
          "[attention]") {
  Rng rng(28);
  const FeatureMap f = random_fm(rng, 2, 3, 3);
  const SelfAttentionParams p = random_sa_params(rng, 2);
  const auto [att, rec] = self_attention_branch(f, p, true);

  const FeatureMap q = conv2d(f, p.wq, 1, 0);
  const FeatureMap k = conv2d(f, p.wk, 1, 0);
  const FeatureMap v = conv2d(f, p.wv, 1, 0);
  AttentionTensors t;
  auto to_rows = [](const FeatureMap& m) {
    Matrix r(m.height * m.width, m.channels);
    for (int c = 0; c < m.channels; ++c)
      for (int pix = 0; pix < m.height * m.width; ++pix)
        r.at(pix, c) = m.data[c * m.height * m.width + pix];
    return r;
  };
  t.q = to_rows(q);
  t.k = to_rows(k);
  t.v = to_rows(v);
  const Matrix want = sdpa_oracle(t.q, t.k, t.v);
  Matrix got(9, 2);
  for (int c = 0; c < 2; ++c)
    for (int pix = 0; pix < 9; ++pix) got.at(pix, c) = att.data[c * 9 + pix];
  REQUIRE(test::max_rel_diff(got.data, want.data) < 1e-10);
  REQUIRE(rec.has_value());
  REQUIRE(rec->weights.rows == 9);
}

TEST_CASE("branch rejects channel mismatch", "[attention]") {
  Rng rng(29);
  const FeatureMap f = random_fm(rng, 3, 2, 2);
  const SelfAttentionParams p = random_sa_params(rng, 2);
  REQUIRE_THROWS(self_attention_branch(f, p));
}

TEST_CASE("residual combine anchors", "[attention]") {
  Rng rng(30);
  const FeatureMap f = random_fm(rng, 2, 3, 3);
  const FeatureMap att = random_fm(rng, 2, 3, 3);

  const FeatureMap zero_gamma = residual_combine(f, att, 0.0);
  REQUIRE(test::bitwise_equal(zero_gamma.data, f.data));

  FeatureMap zeros(2, 3, 3);
  const FeatureMap zero_att = residual_combine(f, zeros, 1.7);
  REQUIRE(test::bitwise_equal(zero_att.data, f.data));

  const FeatureMap doubled = residual_combine(f, f, 1.0);
  for (size_t i = 0; i < f.data.size(); ++i)
    REQUIRE(doubled.data[i] == 2.0 * f.data[i]);

  FeatureMap bad(2, 3, 2);
  REQUIRE_THROWS(residual_combine(f, bad, 1.0));
}

TEST_CASE("strided branch keeps the input shape for all small dims",
          "[attention]") {
  Rng rng(31);
  for (int h = 2; h <= 9; ++h)
    for (int w = 2; w <= 9; ++w) {
      for (int kernel : {1, 3}) {
        const FeatureMap f = random_fm(rng, 2, h, w);
        const SelfAttentionParams p = random_sa_params(rng, 2, 2, kernel);
        const FeatureMap att = strided_self_attention_branch(f, p);
        REQUIRE(att.channels == 2);
        REQUIRE(att.height == h);
        REQUIRE(att.width == w);
      }
    }
}

TEST_CASE("strided branch shrinks the attention matrix", "[attention]") {
  Rng rng(32);
  const FeatureMap f = random_fm(rng, 2, 4, 4);
  Graph g;
  const NodeId fn = g.input(to_tensor(f));
  const auto nodes = detail::sa_nodes(g, random_sa_params(rng, 2, 2, 1));
  const BranchBuild b = build_self_attention_branch(g, fn, nodes);
  // N = 16, N' = 4: the weight matrix is 16x smaller
  REQUIRE(g.shape(b.weights)[0] == 4);
  REQUIRE(g.shape(b.weights)[1] == 4);

  const FeatureMap f5 = random_fm(rng, 2, 5, 3);
  Graph g2;
  const NodeId fn2 = g2.input(to_tensor(f5));
  const auto nodes2 = detail::sa_nodes(g2, random_sa_params(rng, 2, 2, 3));
  const BranchBuild b2 = build_self_attention_branch(g2, fn2, nodes2);
  REQUIRE(g2.shape(b2.weights)[0] == 3 * 2);  // ceil(5/2)*ceil(3/2)
}

TEST_CASE("strided branch matches its composition oracle", "[attention]") {
  Rng rng(33);
  const FeatureMap f = random_fm(rng, 2, 4, 4);
  const SelfAttentionParams p = random_sa_params(rng, 2, 2, 1);
  const FeatureMap att = strided_self_attention_branch(f, p);

  const FeatureMap q = conv2d(f, p.wq, 2, 0);
  const FeatureMap k = conv2d(f, p.wk, 2, 0);
  const FeatureMap v = conv2d(f, p.wv, 2, 0);
  auto to_rows = [](const FeatureMap& m) {
    Matrix r(m.height * m.width, m.channels);
    for (int c = 0; c < m.channels; ++c)
      for (int pix = 0; pix < m.height * m.width; ++pix)
        r.at(pix, c) = m.data[c * m.height * m.width + pix];
    return r;
  };
  const Matrix reduced = sdpa_oracle(to_rows(q), to_rows(k), to_rows(v));
  FeatureMap low(2, 2, 2);
  for (int c = 0; c < 2; ++c)
    for (int pix = 0; pix < 4; ++pix) low.data[c * 4 + pix] = reduced.at(pix, c);
  const FeatureMap want = nearest_upsample(low, 2);
  REQUIRE(test::max_rel_diff(att.data, want.data) < 1e-10);
}

TEST_CASE("strided branch rejects degenerate inputs", "[attention]") {
  Rng rng(34);
  const FeatureMap f = random_fm(rng, 2, 1, 4);
  const SelfAttentionParams p = random_sa_params(rng, 2, 2, 1);
  REQUIRE_THROWS(strided_self_attention_branch(f, p));
}

TEST_CASE("fresh module is the identity for every variant", "[attention]") {
  Rng rng(35);
  const FeatureMap f = random_fm(rng, 3, 4, 4);
  for (auto variant : {AttentionVariant::kSelfAttention,
                       AttentionVariant::kCbam}) {
    for (bool strided : {false, true}) {
      if (variant == AttentionVariant::kCbam && strided) continue;
      DsaModuleParams p;
      p.variant = variant;
      p.strided = strided;
      p.cls_sa = random_sa_params(rng, 3, strided ? 2 : 1, 1);
      p.loc_sa = random_sa_params(rng, 3, strided ? 2 : 1, 1);
      p.cls_cb = random_cbam_params(rng);
      p.loc_cb = random_cbam_params(rng);
      const auto out = dsa_forward(f, p);
      REQUIRE(test::bitwise_equal(out.cls_feature.data, f.data));
      REQUIRE(test::bitwise_equal(out.loc_feature.data, f.data));
    }
  }
}

TEST_CASE("shared module yields bitwise-identical branch outputs",
          "[attention]") {
  Rng rng(36);
  const FeatureMap f = random_fm(rng, 2, 3, 3);
  DsaModuleParams p;
  p.shared = true;
  p.cls_sa = random_sa_params(rng, 2);
  p.cls_sa.gamma = 0.8;
  const auto out = dsa_forward(f, p);
  REQUIRE(test::bitwise_equal(out.cls_feature.data, out.loc_feature.data));
}

TEST_CASE("decoupled branches are isolated", "[attention]") {
  Rng rng(37);
  const FeatureMap f = random_fm(rng, 2, 3, 3);
  DsaModuleParams p;
  p.cls_sa = random_sa_params(rng, 2);
  p.loc_sa = random_sa_params(rng, 2);
  p.cls_sa.gamma = 0.5;
  p.loc_sa.gamma = 0.5;
  const auto base = dsa_forward(f, p);
  DsaModuleParams q = p;
  q.loc_sa.wq.weights[0] += 0.25;  // perturb only the loc branch
  q.loc_sa.gamma = -0.3;
  const auto perturbed = dsa_forward(f, q);
  REQUIRE(test::bitwise_equal(base.cls_feature.data,
                              perturbed.cls_feature.data));
  REQUIRE_FALSE(test::bitwise_equal(base.loc_feature.data,
                                    perturbed.loc_feature.data));
}

TEST_CASE("plain branch is permutation equivariant", "[attention]") {
  Rng rng(38);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = int(rng.next_int(2, 4));
    const int w = int(rng.next_int(2, 4));
    const FeatureMap f = random_fm(rng, 2, h, w);
    const SelfAttentionParams p = random_sa_params(rng, 2);
    const auto perm = test::random_permutation(rng, h * w);
    const auto [att, r1] = self_attention_branch(f, p);
    const auto [att_p, r2] =
        self_attention_branch(test::permute_spatial(f, perm), p);
    const FeatureMap want = test::permute_spatial(att, perm);
    REQUIRE(test::max_rel_diff(att_p.data, want.data) < 1e-10);
  }
}

TEST_CASE("cbam branch has a non-equivariance counterexample per seed",
          "[attention]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const FeatureMap f = random_fm(rng, 2, 5, 5);
    const CbamParams p = random_cbam_params(rng);
    bool found = false;
    for (int attempt = 0; attempt < 8 && !found; ++attempt) {
      const auto perm = test::random_permutation(rng, 25);
      const auto [m1, out] = cbam_spatial_attention(f, p);
      const auto [m2, out_p] =
          cbam_spatial_attention(test::permute_spatial(f, perm), p);
      const FeatureMap want = test::permute_spatial(out, perm);
      found = test::max_abs_diff(out_p.data, want.data) > 1e-6;
    }
    REQUIRE(found);
  }
}

TEST_CASE("gamma gradient equals the attention sum", "[attention]") {
  Rng rng(39);
  const FeatureMap f = random_fm(rng, 2, 3, 3);
  const FeatureMap att = random_fm(rng, 2, 3, 3);
  Graph g;
  const NodeId fn = g.input(to_tensor(f));
  const NodeId an = g.input(to_tensor(att));
  const NodeId gamma = g.input(Tensor({1}, {0.4}));
  const NodeId out = g.residual_combine(fn, an, gamma);
  const NodeId loss = g.sum(out);
  g.forward();
  g.backward(loss);
  double att_sum = 0;
  for (double v : att.data) att_sum += v;
  REQUIRE(g.grad(gamma)[0] == Catch::Approx(att_sum).epsilon(1e-14));

  // central differences on gamma directly
  auto eval = [&](double gm) {
    Graph h;
    const NodeId o = h.residual_combine(h.input(to_tensor(f)),
                                        h.input(to_tensor(att)),
                                        h.input(Tensor({1}, {gm})));
    const NodeId s = h.sum(o);
    h.forward();
    return h.value(s)[0];
  };
  const double hstep = 1e-5;
  const double numeric = (eval(0.4 + hstep) - eval(0.4 - hstep)) / (2 * hstep);
  REQUIRE(std::abs(numeric - att_sum) /
              std::max(std::abs(att_sum), 1e-8) < 1e-6);
}
