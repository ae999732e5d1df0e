#include "surropt/optimizer.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace surropt {

namespace {

using nlohmann::json;

json vec_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

double clipped_sq_distance(const Vector& profile, const Vector& u_tilde) {
  return (profile - u_tilde).cwiseMax(0.0).squaredNorm();
}

}  // namespace

EstimatorKind parse_estimator(const std::string& text) {
  if (text == "fd") return EstimatorKind::FiniteDifference;
  if (text == "interp") return EstimatorKind::Interpolation;
  if (text == "two_step") return EstimatorKind::TwoStep;
  throw std::invalid_argument("unknown estimator '" + text + "' (fd | interp | two_step)");
}

std::string estimator_to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::FiniteDifference: return "fd";
    case EstimatorKind::Interpolation: return "interp";
    case EstimatorKind::TwoStep: return "two_step";
  }
  return "?";
}

void PgdConfig::validate() const {
  if (T < 1) throw std::invalid_argument("PgdConfig: T must be >= 1");
  if (eta <= 0) throw std::invalid_argument("PgdConfig: eta must be > 0");
  if (proj_step <= 0) throw std::invalid_argument("PgdConfig: proj_step must be > 0");
  if (proj_iters < 1) throw std::invalid_argument("PgdConfig: proj_iters must be >= 1");
  perturbation.validate();
}

void PgdTrace::save_jsonl(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("PgdTrace::save_jsonl: cannot open " + path);
  for (const auto& r : records) {
    json line = {
        {"t", r.t},
        {"u", vec_to_json(r.u)},
        {"u_tilde", vec_to_json(r.u_tilde)},
        {"g_hat", vec_to_json(r.g_hat)},
        {"train_metric", r.train_metric},
        {"proj_objective", r.proj_objective},
        {"condition_number", r.g_diagnostics.condition_number},
        {"residual_norm", r.g_diagnostics.residual_norm},
        {"perturbations_used", r.g_diagnostics.perturbations_used},
    };
    if (r.val_metric) line["val_metric"] = *r.val_metric;
    f << line.dump() << "\n";
  }
}

std::pair<Vector, Vector> project_inexact_generic(
    const std::function<Vector(const Vector&)>& profile_fn,
    const std::function<Vector(const Vector&, int)>& grad_fn, const Vector& u_tilde,
    const Vector& theta0, double step, int iters) {
  if (!u_tilde.allFinite())
    throw std::invalid_argument("project_inexact: non-finite target");

  auto objective = [&](const Vector& th) {
    return clipped_sq_distance(profile_fn(th), u_tilde);
  };

  double warm_obj = objective(theta0);
  if (warm_obj == 0.0) return {theta0, profile_fn(theta0)};

  Vector theta = theta0;
  Vector acc = Vector::Zero(theta.size());
  Vector best_theta = theta;
  double best_obj = warm_obj;
  const double delta = 1e-8;

  for (int it = 0; it < iters; ++it) {
    Vector excess = (profile_fn(theta) - u_tilde).cwiseMax(0.0);
    Vector grad = Vector::Zero(theta.size());
    for (Eigen::Index k = 0; k < excess.size(); ++k) {
      if (excess(k) > 0)
        grad += 2.0 * excess(k) * grad_fn(theta, static_cast<int>(k));
    }
    if (!grad.allFinite())
      throw std::runtime_error("project_inexact: non-finite gradient at inner iteration " +
                               std::to_string(it));
    acc.array() += grad.array().square();
    theta.array() -= step * grad.array() / (acc.array() + delta).sqrt();

    double obj = objective(theta);
    if (!std::isfinite(obj))
      throw std::runtime_error("project_inexact: non-finite objective");
    if (obj < best_obj) {
      best_obj = obj;
      best_theta = theta;
    }
    if (best_obj == 0.0) break;
  }
  return {best_theta, profile_fn(best_theta)};
}

std::pair<ModelParams, SurrogateProfile> project_inexact(
    const std::vector<SurrogateSpec>& specs, const Dataset& ds, const Vector& u_tilde,
    const ModelParams& warm_start, const PgdConfig& cfg) {
  auto profile_fn = [&](const Vector& th) {
    return eval_profile(specs, ModelParams::unpack(th), ds).values;
  };
  auto grad_fn = [&](const Vector& th, int k) {
    return surrogate_gradient(specs[static_cast<std::size_t>(k)],
                              ModelParams::unpack(th), ds);
  };
  auto [theta, profile] = project_inexact_generic(profile_fn, grad_fn, u_tilde,
                                                  warm_start.packed(), cfg.proj_step,
                                                  cfg.proj_iters);
  return {ModelParams::unpack(theta), SurrogateProfile{profile}};
}

Vector complete_exact_projection(const SurrogateProfile& u_proj, const Vector& u_tilde) {
  if (u_proj.values.size() != u_tilde.size())
    throw std::invalid_argument("complete_exact_projection: length mismatch");
  return u_proj.values.cwiseMax(u_tilde);
}

PgdResult surrogate_pgd(const MetricFn& metric, const std::vector<SurrogateSpec>& specs,
                        const Dataset& ds_train, const Dataset* ds_val,
                        const PgdConfig& cfg) {
  cfg.validate();
  if (specs.empty()) throw std::invalid_argument("surrogate_pgd: no surrogates");

  ModelParams theta =
      cfg.warm_start ? *cfg.warm_start : ModelParams::zeros(ds_train.dim());
  SurrogateProfile u = eval_profile(specs, theta, ds_train);

  // FD and two-step perturb scores, so their metric probes share the
  // surrogate sample; only interp supports a separate metric sample.
  const bool split_sample = ds_val != nullptr &&
                            cfg.estimator == EstimatorKind::Interpolation;
  const Dataset& metric_ds = split_sample ? *ds_val : ds_train;

  ModelSelection selection = cfg.model_selection.value_or(
      ds_val != nullptr ? ModelSelection::BestValMetric : ModelSelection::Last);
  if (selection == ModelSelection::BestValMetric && ds_val == nullptr)
    throw std::invalid_argument("surrogate_pgd: best_val_metric needs a validation set");

  PgdTrace trace;
  trace.records.reserve(static_cast<std::size_t>(cfg.T));
  ModelParams best_theta = theta;
  double best_val = std::numeric_limits<double>::infinity();
  if (ds_val) best_val = metric(score(theta, ds_val->features), *ds_val);

  for (int t = 1; t <= cfg.T; ++t) {
    if (!u.values.allFinite())
      throw std::runtime_error("surrogate_pgd: non-finite profile at iteration " +
                               std::to_string(t));
    PerturbationConfig pcfg = cfg.perturbation;
    pcfg.stream_id = cfg.perturbation.stream_id + static_cast<std::uint64_t>(t);

    GradientEstimate est;
    try {
      switch (cfg.estimator) {
        case EstimatorKind::FiniteDifference:
          est = fd_estimate(metric, specs, theta, ds_train, pcfg);
          break;
        case EstimatorKind::Interpolation:
          est = interp_estimate(metric, specs, theta, ds_train, metric_ds, pcfg);
          break;
        case EstimatorKind::TwoStep:
          est = two_step_fd_estimate(metric, specs, theta, ds_train, pcfg);
          break;
      }
    } catch (const EstimatorFailure& e) {
      throw EstimatorFailure(std::string(e.what()) + " (outer iteration " +
                             std::to_string(t) + ")");
    }

    Vector u_tilde = u.values - cfg.eta * est.g;
    auto [next_theta, next_u] = project_inexact(specs, ds_train, u_tilde, theta, cfg);

    PgdRecord rec;
    rec.t = t;
    rec.u = u.values;
    rec.u_tilde = u_tilde;
    rec.g_hat = est.g;
    rec.g_diagnostics = est.diagnostics;
    rec.train_metric = metric(score(next_theta, ds_train.features), ds_train);
    rec.proj_objective = clipped_sq_distance(next_u.values, u_tilde);
    if (ds_val) {
      double vm = metric(score(next_theta, ds_val->features), *ds_val);
      rec.val_metric = vm;
      if (vm < best_val) {
        best_val = vm;
        best_theta = next_theta;
      }
    }
    trace.records.push_back(std::move(rec));

    theta = next_theta;
    u = next_u;
  }
  trace.final_u = u.values;

  PgdResult result;
  result.trace = std::move(trace);
  result.params = selection == ModelSelection::BestValMetric ? best_theta : theta;
  return result;
}

double proximal_form_objective(const std::vector<SurrogateSpec>& specs, const Dataset& ds,
                               const ModelParams& params, const ModelParams& prev,
                               const Vector& g_hat, double eta) {
  if (eta <= 0) throw std::invalid_argument("proximal_form_objective: eta must be > 0");
  Vector a = eval_profile(specs, params, ds).values;
  Vector b = eval_profile(specs, prev, ds).values;
  double lin = g_hat.dot(a);
  double d1 = (a - b).squaredNorm();
  double d2 = (a - b + eta * g_hat).cwiseMax(0.0).squaredNorm();
  double d3 = (b - eta * g_hat - a).cwiseMax(0.0).squaredNorm();
  return lin + (d1 + d2 - d3) / (2.0 * eta);
}

std::vector<double> stationarity_diagnostic(const PgdTrace& trace, double eta) {
  if (trace.records.empty())
    throw std::invalid_argument("stationarity_diagnostic: empty trace");
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    const Vector& u_next =
        i + 1 < trace.records.size() ? trace.records[i + 1].u : trace.final_u;
    Vector completed = r.u_tilde.cwiseMax(u_next);
    out.push_back((r.u - completed).norm() / eta);
  }
  return out;
}

}  // namespace surropt
