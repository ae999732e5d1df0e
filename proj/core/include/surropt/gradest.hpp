#pragma once

#include <optional>
#include <vector>

#include "surropt/metrics.hpp"
#include "surropt/surrogates.hpp"

namespace surropt {

struct PerturbationConfig {
  int m = 1000;                          // number of perturbations
  double sigma = 0.1;
  std::optional<double> sigma2;          // two-step estimator only
  std::optional<int> minibatch;          // interp: shared example subset size
  std::optional<double> truncation_L;    // enables gradient truncation
  std::optional<std::vector<bool>> coord_mask;  // interp: which of the d+1
                                                // coordinates to perturb
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;           // substream base; callers vary per use

  void validate() const;
};

struct GradientDiagnostics {
  double condition_number = 0.0;
  double residual_norm = 0.0;
  int perturbations_used = 0;
  bool degenerate_surrogate = false;  // some surrogate insensitive to all perturbations
};

struct GradientEstimate {
  Vector g;
  GradientDiagnostics diagnostics;
};

/// A target profile component cannot be realized by shifting scores (e.g. a
/// hinge already at 0 asked to go below 0).
struct UnattainablePerturbation : std::runtime_error {
  int component;
  explicit UnattainablePerturbation(int k)
      : std::runtime_error("unattainable perturbation for surrogate component " +
                           std::to_string(k)),
        component(k) {}
};

struct EstimatorFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Score perturbation Delta, constant within each surrogate's subset and zero
/// elsewhere, such that the shifted profile matches target_profile within
/// 1e-8 per component. Requires pairwise disjoint subsets.
Vector solve_score_shift(const std::vector<SurrogateSpec>& specs,
                         const ScoreVector& scores, const Dataset& ds,
                         const SurrogateProfile& target_profile);

/// Finite-difference estimate via Gaussian perturbation of the surrogate
/// profile realized through score shifts; metric and surrogates are
/// evaluated on the same sample.
GradientEstimate fd_estimate(const MetricFn& metric,
                             const std::vector<SurrogateSpec>& specs,
                             const ModelParams& params, const Dataset& ds,
                             const PerturbationConfig& cfg);

/// Least-squares fit from surrogate differences to metric differences under
/// paired Gaussian perturbations of the (d+1) model parameters. The metric
/// may be evaluated on a different sample than the surrogates.
GradientEstimate interp_estimate(const MetricFn& metric,
                                 const std::vector<SurrogateSpec>& specs,
                                 const ModelParams& params, const Dataset& ds_surrogates,
                                 const Dataset& ds_metric, const PerturbationConfig& cfg);

/// Same-sample convenience overload.
GradientEstimate interp_estimate(const MetricFn& metric,
                                 const std::vector<SurrogateSpec>& specs,
                                 const ModelParams& params, const Dataset& ds,
                                 const PerturbationConfig& cfg);

/// Two-step variant for non-smooth links: estimates the gradient of the
/// Gaussian-smoothed link at scale sigma, probing at sigma2.
GradientEstimate two_step_fd_estimate(const MetricFn& metric,
                                      const std::vector<SurrogateSpec>& specs,
                                      const ModelParams& params, const Dataset& ds,
                                      const PerturbationConfig& cfg);

/// g when ||g|| <= 2 sqrt(K) L, else the zero vector.
Vector truncate_gradient(const Vector& g, double L);

}  // namespace surropt
