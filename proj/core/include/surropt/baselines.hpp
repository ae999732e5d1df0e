#pragma once

#include "surropt/metrics.hpp"

namespace surropt {

struct PostShiftResult {
  double threshold = 0.0;
  double achieved_metric = 0.0;  // on the tuning sample
};

/// Minimizes the mean logistic loss by Adagrad from the zero model.
ModelParams train_logistic_regression(const Dataset& ds, double step, int iters,
                                      std::uint64_t seed = 0);

/// Sweeps every threshold at the midpoints between consecutive distinct
/// sorted scores (plus +/-inf sentinels) and returns the metric-minimizing
/// one; predictions become sign(score - threshold).
PostShiftResult post_shift(const ModelParams& model, const Dataset& tune_ds,
                           const MetricFn& metric);

/// The model with the threshold folded into its bias.
ModelParams apply_threshold(const ModelParams& model, double threshold);

}  // namespace surropt
