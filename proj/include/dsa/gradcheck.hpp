#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dsa/graph.hpp"
#include "dsa/rng.hpp"

namespace dsa {

struct GradCheckReport {
  std::string op;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  int probe_count = 0;
  bool pass = false;
  bool valid = true;  // false when a probe produced a non-finite value
};

// One randomized check instance: differentiable leaves plus a builder that
// assembles the op (or composite) under test on top of them.
struct GradInstance {
  std::vector<Tensor> leaves;
  std::function<NodeId(Graph&, const std::vector<NodeId>&)> build;
};

namespace detail {

inline double weighted_eval(const GradInstance& inst,
                            const std::vector<double>& w) {
  Graph g;
  std::vector<NodeId> ids;
  ids.reserve(inst.leaves.size());
  for (const auto& t : inst.leaves) ids.push_back(g.input(t));
  const NodeId out = inst.build(g, ids);
  g.forward();
  const auto& v = g.value(out);
  double s = 0.0;
  for (size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
  return s;
}

}  // namespace detail

// Central-difference check of one instance against the tape's analytic
// gradients. The scalar objective is a fixed random weighting of the output,
// scaled so |objective| stays small (~2e-2): central-difference roundoff is
// about one ulp of the objective over 2h, and keeping the objective small
// keeps that noise below the 1e-8 denominator floor at structurally-zero
// gradients. Step is 1e-5 * max(1, |v|) per probed scalar; relative error
// uses max(|analytic|, |numeric|, 1e-8) as denominator.
inline void gradient_check_instance(const GradInstance& inst, Rng& rng,
                                    int max_probes, GradCheckReport& rep) {
  Graph g;
  std::vector<NodeId> ids;
  for (const auto& t : inst.leaves) ids.push_back(g.input(t));
  const NodeId out = inst.build(g, ids);
  g.forward();

  double out_mag = 1.0;
  for (double v : g.value(out)) out_mag = std::max(out_mag, std::abs(v));
  const double scale = 0.02 / (double(g.value(out).size()) * out_mag);
  std::vector<double> w(g.value(out).size());
  for (auto& x : w) x = rng.next_int(0, 1) ? scale : -scale;
  g.backward(out, w);

  // enumerate probe sites (leaf, index)
  std::vector<std::pair<int, int>> sites;
  for (size_t li = 0; li < inst.leaves.size(); ++li)
    for (size_t k = 0; k < inst.leaves[li].data.size(); ++k)
      sites.emplace_back(static_cast<int>(li), static_cast<int>(k));
  if (static_cast<int>(sites.size()) > max_probes) {
    // deterministic sample without replacement
    for (int i = 0; i < max_probes; ++i) {
      const auto j = static_cast<size_t>(
          rng.next_int(i, static_cast<std::int64_t>(sites.size()) - 1));
      std::swap(sites[i], sites[j]);
    }
    sites.resize(max_probes);
  }

  GradInstance probe = inst;
  for (const auto& [li, k] : sites) {
    const double v = inst.leaves[li].data[k];
    const double h = 1e-5 * std::max(1.0, std::abs(v));
    probe.leaves[li].data[k] = v + h;
    const double lp = detail::weighted_eval(probe, w);
    probe.leaves[li].data[k] = v - h;
    const double lm = detail::weighted_eval(probe, w);
    probe.leaves[li].data[k] = v;
    if (!std::isfinite(lp) || !std::isfinite(lm)) {
      rep.valid = false;
      continue;
    }
    const double numeric = (lp - lm) / (2.0 * h);
    const double analytic = g.grad(ids[li])[k];
    const double abs_err = std::abs(analytic - numeric);
    const double rel = abs_err / std::max({std::abs(analytic),
                                           std::abs(numeric), 1e-8});
    rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    ++rep.probe_count;
  }
}

// Worst case over `instances` random instances produced by `make`.
inline GradCheckReport gradient_check(
    const std::string& name, double tolerance, int instances, Rng rng,
    const std::function<GradInstance(Rng&)>& make, int max_probes_each = 64) {
  GradCheckReport rep;
  rep.op = name;
  for (int i = 0; i < instances; ++i) {
    GradInstance inst = make(rng);
    gradient_check_instance(inst, rng, max_probes_each, rep);
  }
  rep.pass = rep.valid && rep.max_rel_err < tolerance;
  return rep;
}

inline Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace dsa
