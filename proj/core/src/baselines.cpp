#include "surropt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace surropt {

ModelParams train_logistic_regression(const Dataset& ds, double step, int iters,
                                      std::uint64_t seed) {
  (void)seed;  // deterministic zero init; kept for interface stability
  bool has_pos = false, has_neg = false;
  for (int i = 0; i < ds.size(); ++i) (ds.labels(i) > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw std::invalid_argument("train_logistic_regression: need both classes");

  const int d = ds.dim();
  auto grad_fn = [&](const Vector& packed) {
    ModelParams p = ModelParams::unpack(packed);
    ScoreVector sv = score(p, ds.features);
    Vector grad = Vector::Zero(d + 1);
    for (int i = 0; i < ds.size(); ++i) {
      double y = ds.labels(i);
      double margin = y * sv.scores(i);
      // d/ds log(1 + exp(-ys)) = -y * sigmoid(-ys)
      double sig = margin >= 0 ? std::exp(-margin) / (1.0 + std::exp(-margin))
                               : 1.0 / (1.0 + std::exp(margin));
      double c = -y * sig;
      grad.head(d) += c * ds.features.row(i).transpose();
      grad(d) += c;
    }
    return Vector(grad / ds.size());
  };
  Vector packed = adagrad_minimize(grad_fn, ModelParams::zeros(d).packed(), step, iters);
  return ModelParams::unpack(packed);
}

PostShiftResult post_shift(const ModelParams& model, const Dataset& tune_ds,
                           const MetricFn& metric) {
  if (tune_ds.size() < 1) throw std::invalid_argument("post_shift: empty tuning set");
  ScoreVector sv = score(model, tune_ds.features);
  std::vector<double> sorted(sv.scores.data(), sv.scores.data() + sv.scores.size());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<double> candidates;
  candidates.push_back(sorted.front() - 1.0);  // everything predicted positive
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  candidates.push_back(sorted.back() + 1.0);  // everything predicted negative

  PostShiftResult best;
  best.threshold = candidates.front();
  best.achieved_metric = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    ScoreVector shifted{sv.scores.array() - t};
    double v = metric(shifted, tune_ds);
    if (v < best.achieved_metric) {
      best.achieved_metric = v;
      best.threshold = t;
    }
  }
  return best;
}

ModelParams apply_threshold(const ModelParams& model, double threshold) {
  ModelParams out = model;
  out.bias -= threshold;
  return out;
}

}  // namespace surropt
