#pragma once

#include <optional>
#include <string>
#include <vector>

#include "surropt/gradest.hpp"

namespace surropt {

enum class EstimatorKind { FiniteDifference, Interpolation, TwoStep };

EstimatorKind parse_estimator(const std::string& text);
std::string estimator_to_string(EstimatorKind kind);

enum class ModelSelection { Last, BestValMetric };

struct PgdConfig {
  int T = 250;               // outer iterations
  double eta = 1.0;          // step size in surrogate space
  double proj_step = 1.0;    // Adagrad step for the inner projection
  int proj_iters = 100;
  EstimatorKind estimator = EstimatorKind::Interpolation;
  PerturbationConfig perturbation;
  std::uint64_t init_seed = 0;
  std::optional<ModelParams> warm_start;  // default init is the zero model
  std::optional<ModelSelection> model_selection;  // default: best_val_metric
                                                  // when a validation set exists

  void validate() const;
};

struct PgdRecord {
  int t = 0;
  Vector u;          // profile at the start of the iteration
  Vector u_tilde;    // gradient-updated target
  Vector g_hat;
  GradientDiagnostics g_diagnostics;
  double train_metric = 0.0;
  std::optional<double> val_metric;
  double proj_objective = 0.0;  // ||(l(theta^{t+1}) - u_tilde)_+||^2
};

struct PgdTrace {
  std::vector<PgdRecord> records;
  Vector final_u;  // profile after the last projection

  void save_jsonl(const std::string& path) const;
};

/// Minimizes Q(theta) = ||(l(theta) - u_tilde)_+||^2 by Adagrad from the warm
/// start, returning the best iterate seen and its realized profile.
std::pair<ModelParams, SurrogateProfile> project_inexact(
    const std::vector<SurrogateSpec>& specs, const Dataset& ds, const Vector& u_tilde,
    const ModelParams& warm_start, const PgdConfig& cfg);

/// Generic core of the projection: profile_fn maps a parameter vector to the
/// K surrogate values; grad_fn gives the gradient of component k. Lets tests
/// run the projection on analytic toy surrogates.
std::pair<Vector, Vector> project_inexact_generic(
    const std::function<Vector(const Vector&)>& profile_fn,
    const std::function<Vector(const Vector&, int)>& grad_fn, const Vector& u_tilde,
    const Vector& theta0, double step, int iters);

/// Componentwise max{u_tilde, u_proj}: completes the over-constrained
/// projection to the exact Euclidean projection onto the epigraph.
Vector complete_exact_projection(const SurrogateProfile& u_proj, const Vector& u_tilde);

struct PgdResult {
  ModelParams params;
  PgdTrace trace;
};

/// Outer surrogate-space projected gradient descent. The metric used for
/// gradient estimation is evaluated on ds_val when provided (interp
/// estimator only; the FD estimators are same-sample and always probe the
/// metric on ds_train). Surrogates are always evaluated on ds_train.
PgdResult surrogate_pgd(const MetricFn& metric, const std::vector<SurrogateSpec>& specs,
                        const Dataset& ds_train, const Dataset* ds_val,
                        const PgdConfig& cfg);

/// <g_hat, l(theta)> + D(theta, theta_prev): the projection step rewritten as
/// an adaptively weighted combination of the surrogates plus a proximal term.
double proximal_form_objective(const std::vector<SurrogateSpec>& specs, const Dataset& ds,
                               const ModelParams& params, const ModelParams& prev,
                               const Vector& g_hat, double eta);

/// Per-iteration gradient-mapping norm ||u^t - max{u_tilde^{t+1}, u^{t+1}}|| / eta.
std::vector<double> stationarity_diagnostic(const PgdTrace& trace, double eta);

}  // namespace surropt
