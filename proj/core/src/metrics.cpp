#include "surropt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace surropt {

void MetricSpec::validate() const {
  if (kind == MetricKind::PrecisionAtKLoss) {
    if (!k) throw std::invalid_argument("metric: p_at_k requires k");
    if (*k < 1) throw std::invalid_argument("metric: k must be >= 1");
  } else if (k) {
    throw std::invalid_argument("metric: k only valid for p_at_k");
  }
}

std::string MetricSpec::to_string() const {
  switch (kind) {
    case MetricKind::ErrorRate: return "error";
    case MetricKind::GmeanLoss: return "gmean";
    case MetricKind::MacroFLoss: return "macro_f";
    case MetricKind::PrbepLoss: return "prbep";
    case MetricKind::PrecisionAtKLoss: return "p_at_k:" + std::to_string(*k);
  }
  return "?";
}

MetricSpec MetricSpec::parse(const std::string& text) {
  MetricSpec spec;
  if (text == "error") spec.kind = MetricKind::ErrorRate;
  else if (text == "gmean") spec.kind = MetricKind::GmeanLoss;
  else if (text == "macro_f") spec.kind = MetricKind::MacroFLoss;
  else if (text == "prbep") spec.kind = MetricKind::PrbepLoss;
  else if (text.rfind("p_at_k:", 0) == 0) {
    spec.kind = MetricKind::PrecisionAtKLoss;
    spec.k = std::stoi(text.substr(7));
  } else {
    throw std::invalid_argument("metric spec '" + text + "': unknown metric");
  }
  spec.validate();
  return spec;
}

ConfusionRates confusion_rates(const ScoreVector& scores, const Dataset& ds) {
  if (scores.size() != ds.size())
    throw std::invalid_argument("confusion_rates: score length mismatch");
  Eigen::VectorXi preds = predict(scores);
  int tp = 0, tn = 0, fp = 0, fn = 0;
  for (int i = 0; i < ds.size(); ++i) {
    if (ds.labels(i) > 0) {
      preds(i) > 0 ? ++tp : ++fn;
    } else {
      preds(i) > 0 ? ++fp : ++tn;
    }
  }
  if (tp + fn == 0) throw std::invalid_argument("confusion_rates: no positive examples");
  if (tn + fp == 0) throw std::invalid_argument("confusion_rates: no negative examples");
  ConfusionRates r;
  r.tpr = static_cast<double>(tp) / (tp + fn);
  r.fnr = static_cast<double>(fn) / (tp + fn);
  r.tnr = static_cast<double>(tn) / (tn + fp);
  r.fpr = static_cast<double>(fp) / (tn + fp);
  return r;
}

double error_rate(const ScoreVector& scores, const Dataset& ds) {
  if (scores.size() != ds.size())
    throw std::invalid_argument("error_rate: score length mismatch");
  Eigen::VectorXi preds = predict(scores);
  int wrong = 0;
  for (int i = 0; i < ds.size(); ++i)
    if (preds(i) != ds.labels(i)) ++wrong;
  return static_cast<double>(wrong) / ds.size();
}

double gmean_loss(const ScoreVector& scores, const Dataset& ds) {
  ConfusionRates r = confusion_rates(scores, ds);
  return 1.0 - std::sqrt(r.tpr * r.tnr);
}

double macro_f_loss(const ScoreVector& scores, const Dataset& ds) {
  if (!ds.groups) throw std::invalid_argument("macro_f_loss: dataset has no groups");
  if (scores.size() != ds.size())
    throw std::invalid_argument("macro_f_loss: score length mismatch");
  Eigen::VectorXi preds = predict(scores);
  double f_sum = 0.0;
  for (int g = 0; g < 2; ++g) {
    int tp = 0, fp = 0, fn = 0, n_pos = 0;
    for (int i = 0; i < ds.size(); ++i) {
      if ((*ds.groups)(i) != g) continue;
      if (ds.labels(i) > 0) {
        ++n_pos;
        preds(i) > 0 ? ++tp : ++fn;
      } else if (preds(i) > 0) {
        ++fp;
      }
    }
    if (n_pos == 0)
      throw std::invalid_argument("macro_f_loss: group " + std::to_string(g) +
                                  " has no positives");
    // F = 2TP / (2TP + FP + FN); zero predicted positives gives F = 0.
    double denom = 2.0 * tp + fp + fn;
    f_sum += denom > 0 ? 2.0 * tp / denom : 0.0;
  }
  return 1.0 - 0.5 * f_sum;
}

namespace {

/// Indices of the k highest scores, ties broken by ascending example index.
std::vector<int> top_k_indices(const ScoreVector& scores, int k) {
  std::vector<int> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return scores.scores(a) > scores.scores(b);
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

double precision_at_k_loss(const ScoreVector& scores, const Dataset& ds, int k) {
  if (scores.size() != ds.size())
    throw std::invalid_argument("precision_at_k_loss: score length mismatch");
  if (k < 1 || k > ds.size())
    throw std::invalid_argument("precision_at_k_loss: k out of range");
  int hits = 0;
  for (int i : top_k_indices(scores, k))
    if (ds.labels(i) > 0) ++hits;
  return 1.0 - static_cast<double>(hits) / k;
}

double prbep_loss(const ScoreVector& scores, const Dataset& ds) {
  int n_pos = 0;
  for (int i = 0; i < ds.size(); ++i)
    if (ds.labels(i) > 0) ++n_pos;
  if (n_pos == 0) throw std::invalid_argument("prbep_loss: no positive examples");
  return precision_at_k_loss(scores, ds, n_pos);
}

MetricFn make_metric(const MetricSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case MetricKind::ErrorRate:
      return [](const ScoreVector& s, const Dataset& d) { return error_rate(s, d); };
    case MetricKind::GmeanLoss:
      return [](const ScoreVector& s, const Dataset& d) { return gmean_loss(s, d); };
    case MetricKind::MacroFLoss:
      return [](const ScoreVector& s, const Dataset& d) { return macro_f_loss(s, d); };
    case MetricKind::PrbepLoss:
      return [](const ScoreVector& s, const Dataset& d) { return prbep_loss(s, d); };
    case MetricKind::PrecisionAtKLoss: {
      int k = *spec.k;
      return [k](const ScoreVector& s, const Dataset& d) {
        return precision_at_k_loss(s, d, k);
      };
    }
  }
  throw std::logic_error("make_metric: unreachable");
}

SyntheticPsi SyntheticPsi::linear(const Vector& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) < 0) throw std::invalid_argument("SyntheticPsi::linear: coefficients must be >= 0");
  SyntheticPsi psi;
  psi.value = [a](const Vector& u) { return a.dot(u); };
  psi.grad = [a](const Vector&) { return a; };
  return psi;
}

SyntheticPsi SyntheticPsi::geometric_mean(int K) {
  SyntheticPsi psi;
  psi.value = [K](const Vector& u) {
    double log_sum = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) log_sum += std::log(u(i));
    return std::exp(log_sum / K);
  };
  psi.grad = [K](const Vector& u) {
    double v = 0.0;
    {
      double log_sum = 0.0;
      for (Eigen::Index i = 0; i < u.size(); ++i) log_sum += std::log(u(i));
      v = std::exp(log_sum / K);
    }
    Vector g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) g(i) = v / (K * u(i));
    return g;
  };
  return psi;
}

SyntheticPsi SyntheticPsi::softmax_max(int K, double temperature) {
  if (temperature <= 0) throw std::invalid_argument("softmax_max: temperature must be > 0");
  SyntheticPsi psi;
  double t = temperature;
  psi.value = [t](const Vector& u) {
    double mx = u.maxCoeff();
    double s = (t * (u.array() - mx)).exp().sum();
    return mx + std::log(s) / t;
  };
  psi.grad = [t](const Vector& u) {
    double mx = u.maxCoeff();
    Vector e = (t * (u.array() - mx)).exp();
    return Vector(e / e.sum());
  };
  (void)K;
  return psi;
}

MetricFn make_synthetic_metric(const SyntheticPsi& psi,
                               const std::vector<SurrogateSpec>& specs,
                               std::function<double(const ScoreVector&)> slack_fn) {
  return [psi, specs, slack_fn](const ScoreVector& scores, const Dataset& ds) {
    SurrogateProfile p = eval_profile_from_scores(specs, scores, ds);
    double v = psi.value(p.values);
    if (slack_fn) v += slack_fn(scores);
    return v;
  };
}

}  // namespace surropt
