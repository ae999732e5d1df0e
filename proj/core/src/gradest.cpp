#include "surropt/gradest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace surropt {

namespace {

constexpr double kShiftBracket = 1e3;
constexpr double kShiftTol = 1e-10;
constexpr double kProfileTol = 1e-8;
constexpr int kMaxResample = 5;

RandomStream substream(const PerturbationConfig& cfg, std::uint64_t j) {
  return RandomStream(cfg.seed, cfg.stream_id * 1000003ULL + j);
}

/// Surrogate value after adding a uniform shift delta to the subset scores.
double shifted_value(const SurrogateSpec& spec, const ScoreVector& scores,
                     const Dataset& ds, const std::vector<int>& idx, double delta) {
  ScoreVector shifted = scores;
  for (int i : idx) shifted.scores(i) += delta;
  return eval_surrogate(spec, shifted, ds);
}

}  // namespace

void PerturbationConfig::validate() const {
  if (m < 1) throw std::invalid_argument("PerturbationConfig: m must be >= 1");
  if (sigma <= 0) throw std::invalid_argument("PerturbationConfig: sigma must be > 0");
  if (sigma2 && *sigma2 <= 0)
    throw std::invalid_argument("PerturbationConfig: sigma2 must be > 0");
  if (minibatch && *minibatch < 1)
    throw std::invalid_argument("PerturbationConfig: minibatch must be >= 1");
  if (truncation_L && *truncation_L <= 0)
    throw std::invalid_argument("PerturbationConfig: truncation_L must be > 0");
}

Vector solve_score_shift(const std::vector<SurrogateSpec>& specs,
                         const ScoreVector& scores, const Dataset& ds,
                         const SurrogateProfile& target_profile) {
  if (static_cast<std::size_t>(target_profile.size()) != specs.size())
    throw std::invalid_argument("solve_score_shift: target length mismatch");
  if (!subsets_pairwise_disjoint(specs, ds))
    throw std::invalid_argument("solve_score_shift: surrogate subsets must be disjoint");

  Vector delta = Vector::Zero(scores.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    double target = target_profile.values(static_cast<Eigen::Index>(k));
    if (target < 0) throw UnattainablePerturbation(static_cast<int>(k));
    std::vector<int> idx = subset_indices(specs[k], ds);
    double current = eval_surrogate(specs[k], scores, ds);
    if (std::abs(current - target) <= kProfileTol) continue;  // zero shift

    // The per-subset value is monotone in a uniform shift; bisect on it.
    double lo = -kShiftBracket, hi = kShiftBracket;
    double f_lo = shifted_value(specs[k], scores, ds, idx, lo) - target;
    double f_hi = shifted_value(specs[k], scores, ds, idx, hi) - target;
    if (f_lo == 0.0) { hi = lo; f_hi = f_lo; }
    if (f_lo * f_hi > 0) throw UnattainablePerturbation(static_cast<int>(k));
    while (hi - lo > kShiftTol) {
      double mid = 0.5 * (lo + hi);
      double f_mid = shifted_value(specs[k], scores, ds, idx, mid) - target;
      if (f_mid == 0.0) { lo = hi = mid; break; }
      if ((f_mid > 0) == (f_lo > 0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    double d = 0.5 * (lo + hi);
    if (std::abs(shifted_value(specs[k], scores, ds, idx, d) - target) > kProfileTol)
      throw UnattainablePerturbation(static_cast<int>(k));
    for (int i : idx) delta(i) += d;
  }
  return delta;
}

GradientEstimate fd_estimate(const MetricFn& metric,
                             const std::vector<SurrogateSpec>& specs,
                             const ModelParams& params, const Dataset& ds,
                             const PerturbationConfig& cfg) {
  cfg.validate();
  if (cfg.sigma2)
    throw std::invalid_argument("fd_estimate: sigma2 is for the two-step estimator");
  if (!subsets_pairwise_disjoint(specs, ds))
    throw std::invalid_argument(
        "fd_estimate: surrogate subsets must be pairwise disjoint");

  const int K = static_cast<int>(specs.size());
  ScoreVector base = score(params, ds.features);
  SurrogateProfile profile = eval_profile_from_scores(specs, base, ds);
  double m0 = metric(base, ds);

  Vector g = Vector::Zero(K);
  int used = 0;
  for (int j = 0; j < cfg.m; ++j) {
    RandomStream rs = substream(cfg, static_cast<std::uint64_t>(j));
    for (int attempt = 0; attempt <= kMaxResample; ++attempt) {
      Vector z = gaussian_vector(rs, K);
      SurrogateProfile target{profile.values + cfg.sigma * z};
      try {
        Vector delta = solve_score_shift(specs, base, ds, target);
        ScoreVector shifted{base.scores + delta};
        g += (metric(shifted, ds) - m0) / cfg.sigma * z;
        ++used;
        break;
      } catch (const UnattainablePerturbation&) {
        // resample
      }
    }
  }
  if (used * 2 < cfg.m)
    throw EstimatorFailure("fd_estimate: more than half the perturbations unattainable (" +
                           std::to_string(cfg.m - used) + "/" + std::to_string(cfg.m) + ")");
  g /= static_cast<double>(used);

  GradientEstimate est;
  est.g = g;
  est.diagnostics.perturbations_used = used;
  return est;
}

namespace {

Dataset sample_rows(const Dataset& ds, int count, RandomStream& rs) {
  int n = ds.size();
  if (count >= n) return ds;
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    std::size_t j = static_cast<std::size_t>(i) +
                    rs.uniform_index(static_cast<std::uint64_t>(n - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return ds.subset(idx);
}

}  // namespace

GradientEstimate interp_estimate(const MetricFn& metric,
                                 const std::vector<SurrogateSpec>& specs,
                                 const ModelParams& params, const Dataset& ds_surrogates,
                                 const Dataset& ds_metric, const PerturbationConfig& cfg) {
  cfg.validate();
  if (cfg.sigma2)
    throw std::invalid_argument("interp_estimate: sigma2 is for the two-step estimator");
  const int K = static_cast<int>(specs.size());
  const int dp1 = params.dim() + 1;
  if (cfg.coord_mask && static_cast<int>(cfg.coord_mask->size()) != dp1)
    throw std::invalid_argument("interp_estimate: coord_mask length must be d+1");

  const bool same_sample = &ds_surrogates == &ds_metric;
  Dataset surr = ds_surrogates;
  Dataset metr_storage;
  const Dataset* metr = same_sample ? &surr : &ds_metric;
  if (cfg.minibatch) {
    RandomStream rs = substream(cfg, static_cast<std::uint64_t>(cfg.m) + 1);
    surr = sample_rows(ds_surrogates, *cfg.minibatch, rs);
    if (same_sample) {
      metr = &surr;
    } else {
      metr_storage = sample_rows(ds_metric, *cfg.minibatch, rs);
      metr = &metr_storage;
    }
  }

  Vector theta = params.packed();
  Matrix H(cfg.m, K);
  Vector mdiff(cfg.m);
  auto eval_at = [&](const Vector& packed, Vector& profile_out, double& metric_out) {
    ModelParams p = ModelParams::unpack(packed);
    profile_out = eval_profile(specs, p, surr).values;
    metric_out = metric(score(p, metr->features), *metr);
  };
  for (int j = 0; j < cfg.m; ++j) {
    RandomStream rs = substream(cfg, static_cast<std::uint64_t>(j));
    Vector z1 = gaussian_vector(rs, dp1);
    Vector z2 = gaussian_vector(rs, dp1);
    if (cfg.coord_mask) {
      for (int c = 0; c < dp1; ++c) {
        if (!(*cfg.coord_mask)[static_cast<std::size_t>(c)]) {
          z1(c) = 0.0;
          z2(c) = 0.0;
        }
      }
    }
    Vector p1, p2;
    double m1 = 0, m2 = 0;
    eval_at(theta + cfg.sigma * z1, p1, m1);
    eval_at(theta + cfg.sigma * z2, p2, m2);
    H.row(j) = (p1 - p2).transpose();
    mdiff(j) = m1 - m2;
  }

  GradientEstimate est;
  for (int k = 0; k < K; ++k) {
    if (H.col(k).cwiseAbs().maxCoeff() == 0.0) est.diagnostics.degenerate_surrogate = true;
  }
  est.g = least_squares_solve(H, mdiff, 0.0);
  est.diagnostics.perturbations_used = cfg.m;
  est.diagnostics.residual_norm = (H * est.g - mdiff).norm();
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(H.transpose() * H);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    est.diagnostics.condition_number =
        lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  }
  if (cfg.truncation_L) est.g = truncate_gradient(est.g, *cfg.truncation_L);
  return est;
}

GradientEstimate interp_estimate(const MetricFn& metric,
                                 const std::vector<SurrogateSpec>& specs,
                                 const ModelParams& params, const Dataset& ds,
                                 const PerturbationConfig& cfg) {
  return interp_estimate(metric, specs, params, ds, ds, cfg);
}

GradientEstimate two_step_fd_estimate(const MetricFn& metric,
                                      const std::vector<SurrogateSpec>& specs,
                                      const ModelParams& params, const Dataset& ds,
                                      const PerturbationConfig& cfg) {
  cfg.validate();
  const int K = static_cast<int>(specs.size());
  double sigma2;
  if (cfg.sigma2) {
    sigma2 = *cfg.sigma2;
  } else if (cfg.truncation_L) {
    sigma2 = std::sqrt(cfg.sigma / (std::pow(K, 1.5) * *cfg.truncation_L));
  } else {
    throw std::invalid_argument("two_step_fd_estimate: sigma2 (or truncation_L) required");
  }
  if (!subsets_pairwise_disjoint(specs, ds))
    throw std::invalid_argument(
        "two_step_fd_estimate: surrogate subsets must be pairwise disjoint");

  ScoreVector base = score(params, ds.features);
  SurrogateProfile profile = eval_profile_from_scores(specs, base, ds);

  Vector g = Vector::Zero(K);
  int used = 0;
  for (int j = 0; j < cfg.m; ++j) {
    RandomStream rs = substream(cfg, static_cast<std::uint64_t>(j));
    for (int attempt = 0; attempt <= kMaxResample; ++attempt) {
      Vector z1 = gaussian_vector(rs, K);
      Vector z2 = gaussian_vector(rs, K);
      SurrogateProfile t1{profile.values + cfg.sigma * z1};
      SurrogateProfile t2{profile.values + cfg.sigma * z1 + sigma2 * z2};
      try {
        Vector d1 = solve_score_shift(specs, base, ds, t1);
        Vector d2 = solve_score_shift(specs, base, ds, t2);
        ScoreVector s1{base.scores + d1};
        ScoreVector s2{base.scores + d2};
        g += (metric(s2, ds) - metric(s1, ds)) / sigma2 * z2;
        ++used;
        break;
      } catch (const UnattainablePerturbation&) {
        // resample
      }
    }
  }
  if (used * 2 < cfg.m)
    throw EstimatorFailure(
        "two_step_fd_estimate: more than half the perturbations unattainable");
  g /= static_cast<double>(used);

  GradientEstimate est;
  est.g = g;
  est.diagnostics.perturbations_used = used;
  return est;
}

Vector truncate_gradient(const Vector& g, double L) {
  if (L <= 0) throw std::invalid_argument("truncate_gradient: L must be > 0");
  double bound = 2.0 * std::sqrt(static_cast<double>(g.size())) * L;
  if (g.norm() <= bound) return g;
  return Vector::Zero(g.size());
}

}  // namespace surropt
