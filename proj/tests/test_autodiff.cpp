#include <catch2/catch_amalgamated.hpp>

#include "dsa/gradsuite.hpp"
#include "helpers.hpp"

using namespace dsa;

TEST_CASE("backprop through a linear scale", "[autodiff]") {
  Graph g;
  const NodeId x = g.input(Tensor({1}, {2.0}));
  const NodeId y = g.const_scale(x, 3.0);
  g.forward();
  g.backward(y);
  REQUIRE(g.value(y)[0] == 6.0);
  REQUIRE(g.grad(x)[0] == 3.0);
}

TEST_CASE("backprop through sigmoid at zero", "[autodiff]") {
  Graph g;
  const NodeId x = g.input(Tensor({1}, {0.0}));
  const NodeId y = g.sigmoid(x);
  g.forward();
  g.backward(y);
  REQUIRE(g.grad(x)[0] == 0.25);
}

TEST_CASE("seed shape mismatch is rejected", "[autodiff]") {
  Graph g;
  const NodeId x = g.input(Tensor({2}, {1.0, 2.0}));
  const NodeId y = g.relu(x);
  g.forward();
  REQUIRE_THROWS_WITH(g.backward(y, {1.0}),
                      Catch::Matchers::ContainsSubstring("seed"));
}

TEST_CASE("identity-like op gradcheck is exact", "[autodiff]") {
  // one-hot objectives per output element keep central-difference roundoff
  // at the ulp level, so exact linearity resolves below 1e-10
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = random_tensor(rng, {2, 3, 3});
    for (size_t k = 0; k < x.data.size(); ++k) {
      auto eval = [&](double v) {
        Tensor probe = x;
        probe.data[k] = v;
        Graph g;
        const NodeId out = g.crop2d(g.input(probe), 3, 3);
        g.forward();
        return g.value(out)[k];
      };
      const double h = 1e-5 * std::max(1.0, std::abs(x.data[k]));
      const double numeric = (eval(x.data[k] + h) - eval(x.data[k] - h)) /
                             (2 * h);
      Graph g;
      const NodeId in = g.input(x);
      const NodeId out = g.crop2d(in, 3, 3);
      g.forward();
      std::vector<double> seed(x.data.size(), 0.0);
      seed[k] = 1.0;
      g.backward(out, seed);
      const double analytic = g.grad(in)[k];
      worst = std::max(worst, std::abs(analytic - numeric) /
                                  std::max({std::abs(analytic),
                                            std::abs(numeric), 1e-8}));
    }
  }
  REQUIRE(worst < 1e-10);
}

TEST_CASE("full gradient suite passes at 1e-4", "[autodiff]") {
  const auto reports = run_gradient_suite();
  REQUIRE(reports.size() >= 24);
  for (const auto& r : reports) {
    INFO(r.op << " max_rel " << r.max_rel_err);
    REQUIRE(r.valid);
    REQUIRE(r.pass);
  }
}

TEST_CASE("self-attention parameters match finite differences at 1e-6",
          "[autodiff]") {
  // fixed 2x2x2 instance, every parameter probed
  const auto rep = gradient_check(
      "sa_2x2x2", 1e-6, 1, Rng(12),
      [](Rng& r) { return detail::sa_branch_instance(r, 1, 1); }, 1000);
  REQUIRE(rep.pass);
  REQUIRE(rep.max_rel_err < 1e-6);
}

TEST_CASE("backprop is deterministic bitwise", "[autodiff]") {
  auto run = [] {
    Rng rng(13);
    Graph g;
    const NodeId f = g.input(to_tensor(test::random_fm(rng, 2, 3, 3)));
    const auto nodes = detail::sa_nodes(g, random_sa_params(rng, 2));
    const BranchBuild b = build_self_attention_branch(g, f, nodes);
    const NodeId loss = g.sum(b.out);
    g.forward();
    g.backward(loss);
    return std::make_pair(g.value(b.out), g.grad(f));
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(test::bitwise_equal(a.first, b.first));
  REQUIRE(test::bitwise_equal(a.second, b.second));
}

TEST_CASE("graph rejects malformed wiring", "[autodiff]") {
  Graph g;
  const NodeId a = g.input(Tensor({2, 3}));
  const NodeId b = g.input(Tensor({2, 2}));
  REQUIRE_THROWS(g.add(a, b));
  REQUIRE_THROWS(g.matmul(a, a));
  REQUIRE_THROWS(g.residual_combine(a, a, b));
}

TEST_CASE("parameter nodes are deduplicated per graph", "[autodiff]") {
  ParamStore ps;
  ps.add("w", Tensor({2}, {1.0, 2.0}));
  Graph g;
  const NodeId n1 = g.param(ps, "w");
  const NodeId n2 = g.param(ps, "w");
  REQUIRE(n1 == n2);
  REQUIRE(g.params().size() == 1);
}
