#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsa/detector.hpp"
#include "dsa/rng.hpp"

namespace dsa {

struct OptimizerConfig {
  double lr = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
  int batch_size = 1;
  int epochs = 12;
};

// Step decay: x0.1 after 75% and after 100% of the epoch budget.
inline std::vector<int> lr_decay_epochs(int budget) {
  return {static_cast<int>(std::ceil(0.75 * budget)), budget};
}

inline double lr_at_epoch(double base, int epoch, int budget) {
  double lr = base;
  for (int p : lr_decay_epochs(budget))
    if (p < epoch) lr *= 0.1;
  return lr;
}

struct TrainStats {
  std::vector<LossBreakdown> step_losses;           // per optimizer step
  std::vector<double> epoch_lr;                     // per epoch
  std::vector<LossBreakdown> epoch_mean;            // per epoch
};

// Plain SGD over per-image graphs. Within a batch, gradients are accumulated
// in image order; parameter updates walk the store in registration order, so
// two runs with the same inputs are bitwise identical.
inline TrainStats train(ParamStore& ps, const DetectorConfig& cfg,
                        const OptimizerConfig& opt,
                        const std::vector<FeatureMap>& images,
                        const std::vector<std::vector<GroundTruth>>& gts,
                        std::uint64_t seed) {
  if (images.empty() || images.size() != gts.size())
    fail("train: empty dataset or annotation mismatch");
  if (opt.batch_size < 1 || opt.epochs < 0) fail("train: bad optimizer config");

  TrainStats stats;
  std::map<std::string, std::vector<double>> velocity;
  const Rng shuffle_base = Rng(seed).fork("shuffle");

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const double lr = lr_at_epoch(opt.lr, epoch, opt.epochs);
    stats.epoch_lr.push_back(lr);

    std::vector<int> order(images.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng = shuffle_base.fork(static_cast<std::uint64_t>(epoch));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<size_t>(rng.next_int(0, i))]);

    LossBreakdown epoch_sum;
    int epoch_steps = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(opt.batch_size)) {
      const size_t stop =
          std::min(order.size(), start + static_cast<size_t>(opt.batch_size));
      std::map<std::string, std::vector<double>> acc;
      LossBreakdown batch;
      for (size_t bi = start; bi < stop; ++bi) {
        const int img = order[bi];
        Graph g;
        const NodeId in = g.input(to_tensor(images[img]));
        const ModelNodes m = build_detector(g, ps, cfg, in);
        const AnchorSet anchors =
            generate_anchors(pyramid_shapes(g, m), cfg.anchors_per_loc);
        const LossGraph lg = build_loss(g, m, cfg, anchors, gts[img]);
        g.forward();
        const LossBreakdown lb = read_loss(g, lg);
        if (!std::isfinite(lb.total))
          throw std::runtime_error(
              "train: non-finite loss at epoch " + std::to_string(epoch) +
              " step " + std::to_string(epoch_steps + 1) + " image " +
              std::to_string(img));
        g.backward(lg.total);
        for (const auto& [name, node] : g.params()) {
          auto& buf = acc[name];
          const auto& grad = g.grad(node);
          if (buf.empty()) buf.assign(grad.size(), 0.0);
          for (size_t i = 0; i < grad.size(); ++i) buf[i] += grad[i];
        }
        batch.focal += lb.focal;
        batch.box += lb.box;
        batch.confidence += lb.confidence;
        batch.total += lb.total;
      }
      const double inv_n = 1.0 / double(stop - start);
      batch.focal *= inv_n;
      batch.box *= inv_n;
      batch.confidence *= inv_n;
      batch.total *= inv_n;
      stats.step_losses.push_back(batch);
      epoch_sum.focal += batch.focal;
      epoch_sum.box += batch.box;
      epoch_sum.confidence += batch.confidence;
      epoch_sum.total += batch.total;
      ++epoch_steps;

      if (lr == 0.0) continue;
      for (const auto& name : ps.order) {
        if (ps.frozen.count(name)) continue;
        auto it = acc.find(name);
        if (it == acc.end()) continue;
        auto& p = ps.get(name).data;
        auto& gacc = it->second;
        for (size_t i = 0; i < p.size(); ++i) {
          double grad = gacc[i] * inv_n;
          if (opt.weight_decay != 0.0) grad += opt.weight_decay * p[i];
          if (opt.momentum != 0.0) {
            auto& v = velocity[name];
            if (v.empty()) v.assign(p.size(), 0.0);
            v[i] = opt.momentum * v[i] + grad;
            grad = v[i];
          }
          p[i] -= lr * grad;
        }
      }
    }
    const double inv_steps = epoch_steps > 0 ? 1.0 / epoch_steps : 0.0;
    stats.epoch_mean.push_back({epoch_sum.focal * inv_steps,
                                epoch_sum.box * inv_steps,
                                epoch_sum.confidence * inv_steps,
                                epoch_sum.total * inv_steps});
  }
  return stats;
}

}  // namespace dsa
