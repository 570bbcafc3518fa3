#pragma once

#include <string>
#include <vector>

#include "dsa/attention.hpp"
#include "dsa/gradcheck.hpp"

namespace dsa {

namespace detail {

inline GradInstance conv_instance(Rng& rng, int kernel, int stride, int pad,
                                  int min_hw) {
  GradInstance gi;
  const int C = static_cast<int>(rng.next_int(1, 4));
  const int O = static_cast<int>(rng.next_int(1, 4));
  const int H = static_cast<int>(rng.next_int(min_hw, 4));
  const int W = static_cast<int>(rng.next_int(min_hw, 4));
  gi.leaves.push_back(random_tensor(rng, {C, H, W}));
  gi.leaves.push_back(random_tensor(rng, {O, C, kernel, kernel}));
  gi.leaves.push_back(random_tensor(rng, {O}));
  gi.build = [stride, pad](Graph& g, const std::vector<NodeId>& ids) {
    return g.conv2d(ids[0], ids[1], ids[2], stride, pad);
  };
  return gi;
}

inline GradInstance sa_branch_instance(Rng& rng, int stride, int kernel) {
  GradInstance gi;
  const int C = static_cast<int>(rng.next_int(1, 3));
  const int H = static_cast<int>(rng.next_int(stride, 4));
  const int W = static_cast<int>(rng.next_int(stride, 4));
  gi.leaves.push_back(random_tensor(rng, {C, H, W}));
  for (int i = 0; i < 3; ++i) {
    gi.leaves.push_back(random_tensor(rng, {C, C, kernel, kernel}));
    gi.leaves.push_back(random_tensor(rng, {C}, -0.2, 0.2));
  }
  gi.leaves.push_back(random_tensor(rng, {1}));
  gi.build = [stride, kernel](Graph& g, const std::vector<NodeId>& ids) {
    SelfAttentionNodes n;
    n.wq = ids[1];
    n.bq = ids[2];
    n.wk = ids[3];
    n.bk = ids[4];
    n.wv = ids[5];
    n.bv = ids[6];
    n.gamma = ids[7];
    n.stride = stride;
    n.kernel = kernel;
    return build_self_attention_branch(g, ids[0], n).out;
  };
  return gi;
}

inline std::shared_ptr<LossSide> random_side(Rng& rng, long long n) {
  auto side = std::make_shared<LossSide>();
  side->target.resize(n);
  side->include01.resize(n);
  for (long long i = 0; i < n; ++i) {
    side->target[i] = rng.next_int(0, 1) ? 1.0 : 0.0;
    side->include01[i] = rng.next_int(0, 3) ? 1.0 : 0.0;
  }
  side->include01[static_cast<size_t>(rng.next_int(0, n - 1))] = 1.0;
  return side;
}

}  // namespace detail

// Every registered primitive plus the attention branches and losses,
// checked against central differences on random small instances.
inline std::vector<GradCheckReport> run_gradient_suite(
    double tolerance = 1e-4, std::uint64_t seed = 20240901ull,
    int instances = 20) {
  std::vector<GradCheckReport> reports;
  auto run = [&](const std::string& name,
                 const std::function<GradInstance(Rng&)>& make) {
    reports.push_back(gradient_check(name, tolerance, instances,
                                     Rng(Rng::derive(seed, name)), make));
  };

  run("conv2d_1x1_s1", [](Rng& r) { return detail::conv_instance(r, 1, 1, 0, 1); });
  run("conv2d_1x1_s2", [](Rng& r) { return detail::conv_instance(r, 1, 2, 0, 2); });
  run("conv2d_3x3_s2", [](Rng& r) { return detail::conv_instance(r, 3, 2, 1, 2); });
  run("conv2d_7x7_s1", [](Rng& r) { return detail::conv_instance(r, 7, 1, 3, 1); });

  run("channel_pool_concat", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(
        r, {static_cast<int>(r.next_int(1, 4)),
            static_cast<int>(r.next_int(1, 4)),
            static_cast<int>(r.next_int(1, 4))}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.channel_pool_concat(ids[0]);
    };
    return gi;
  });

  run("softmax_rows", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {static_cast<int>(r.next_int(1, 4)),
                                          static_cast<int>(r.next_int(1, 4))},
                                      -3.0, 3.0));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.softmax_rows(ids[0]);
    };
    return gi;
  });

  run("sigmoid_map", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {2, static_cast<int>(r.next_int(1, 4)),
                                          static_cast<int>(r.next_int(1, 4))},
                                      -3.0, 3.0));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.sigmoid(ids[0]);
    };
    return gi;
  });

  run("relu", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {3, 3, 3}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.relu(ids[0]);
    };
    return gi;
  });

  run("nearest_upsample", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {2, static_cast<int>(r.next_int(1, 3)),
                                          static_cast<int>(r.next_int(1, 3))}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.nearest_upsample(ids[0], 2);
    };
    return gi;
  });

  run("crop2d", [](Rng& r) {
    GradInstance gi;
    const int H = static_cast<int>(r.next_int(2, 4));
    const int W = static_cast<int>(r.next_int(2, 4));
    gi.leaves.push_back(random_tensor(r, {2, H, W}));
    const int oh = static_cast<int>(r.next_int(1, H));
    const int ow = static_cast<int>(r.next_int(1, W));
    gi.build = [oh, ow](Graph& g, const std::vector<NodeId>& ids) {
      return g.crop2d(ids[0], oh, ow);
    };
    return gi;
  });

  run("add", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {2, 3, 2}));
    gi.leaves.push_back(random_tensor(r, {2, 3, 2}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.add(ids[0], ids[1]);
    };
    return gi;
  });

  run("mul_mask", [](Rng& r) {
    GradInstance gi;
    const int H = static_cast<int>(r.next_int(1, 4));
    const int W = static_cast<int>(r.next_int(1, 4));
    gi.leaves.push_back(random_tensor(r, {3, H, W}));
    gi.leaves.push_back(random_tensor(r, {1, H, W}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.mul_mask(ids[0], ids[1]);
    };
    return gi;
  });

  run("const_scale", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {2, 2, 3}));
    const double c = r.uniform(-2.0, 2.0);
    gi.build = [c](Graph& g, const std::vector<NodeId>& ids) {
      return g.const_scale(ids[0], c);
    };
    return gi;
  });

  run("transpose", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {static_cast<int>(r.next_int(1, 4)),
                                          static_cast<int>(r.next_int(1, 4))}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.transpose(ids[0]);
    };
    return gi;
  });

  run("matmul", [](Rng& r) {
    GradInstance gi;
    const int n = static_cast<int>(r.next_int(1, 4));
    const int k = static_cast<int>(r.next_int(1, 4));
    const int m = static_cast<int>(r.next_int(1, 4));
    gi.leaves.push_back(random_tensor(r, {n, k}));
    gi.leaves.push_back(random_tensor(r, {k, m}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.matmul(ids[0], ids[1]);
    };
    return gi;
  });

  run("rows_from_fm", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {2, 3, 2}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.rows_from_fm(ids[0]);
    };
    return gi;
  });

  run("fm_from_rows", [](Rng& r) {
    GradInstance gi;
    const int h = static_cast<int>(r.next_int(1, 3));
    const int w = static_cast<int>(r.next_int(1, 3));
    gi.leaves.push_back(random_tensor(r, {h * w, 3}));
    gi.build = [h, w](Graph& g, const std::vector<NodeId>& ids) {
      return g.fm_from_rows(ids[0], h, w);
    };
    return gi;
  });

  run("sum", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {3, 2, 2}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.sum(ids[0]);
    };
    return gi;
  });

  run("residual_combine", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {2, 3, 3}));
    gi.leaves.push_back(random_tensor(r, {2, 3, 3}));
    gi.leaves.push_back(random_tensor(r, {1}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      return g.residual_combine(ids[0], ids[1], ids[2]);
    };
    return gi;
  });

  run("attention_branch_plain",
      [](Rng& r) { return detail::sa_branch_instance(r, 1, 1); });
  run("attention_branch_strided_1x1",
      [](Rng& r) { return detail::sa_branch_instance(r, 2, 1); });
  run("attention_branch_strided_3x3",
      [](Rng& r) { return detail::sa_branch_instance(r, 2, 3); });

  run("attention_branch_cbam", [](Rng& r) {
    GradInstance gi;
    const int C = static_cast<int>(r.next_int(1, 3));
    const int H = static_cast<int>(r.next_int(1, 4));
    const int W = static_cast<int>(r.next_int(1, 4));
    gi.leaves.push_back(random_tensor(r, {C, H, W}));
    gi.leaves.push_back(random_tensor(r, {1, 2, 7, 7}, -0.3, 0.3));
    gi.leaves.push_back(random_tensor(r, {1}, -0.2, 0.2));
    gi.leaves.push_back(random_tensor(r, {1}));
    gi.build = [](Graph& g, const std::vector<NodeId>& ids) {
      CbamNodes n;
      n.w7 = ids[1];
      n.b7 = ids[2];
      n.gamma = ids[3];
      return build_cbam_branch(g, ids[0], n).out;
    };
    return gi;
  });

  run("focal_loss", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {3, 2, 2}, -2.0, 2.0));
    auto side = detail::random_side(r, 12);
    gi.build = [side](Graph& g, const std::vector<NodeId>& ids) {
      return g.focal_loss(ids[0], side);
    };
    return gi;
  });

  // residuals are kept away from the kink at |x| = beta
  run("smooth_l1_loss", [](Rng& r) {
    GradInstance gi;
    Tensor pred = random_tensor(r, {2, 2, 2}, -0.5, 0.5);
    auto side = std::make_shared<LossSide>();
    side->include01.assign(8, 1.0);
    side->target.resize(8);
    for (int i = 0; i < 8; ++i) {
      const double away = r.next_int(0, 1) ? r.uniform(-0.7, 0.7)
                                           : (r.next_int(0, 1) ? 1.0 : -1.0) *
                                                 r.uniform(1.3, 1.7);
      side->target[i] = pred.data[i] - away;
    }
    gi.leaves.push_back(std::move(pred));
    gi.build = [side](Graph& g, const std::vector<NodeId>& ids) {
      return g.smooth_l1_loss(ids[0], side);
    };
    return gi;
  });

  run("bce_loss", [](Rng& r) {
    GradInstance gi;
    gi.leaves.push_back(random_tensor(r, {2, 2, 3}, -2.0, 2.0));
    auto side = detail::random_side(r, 12);
    gi.build = [side](Graph& g, const std::vector<NodeId>& ids) {
      return g.bce_loss(ids[0], side);
    };
    return gi;
  });

  return reports;
}

}  // namespace dsa
