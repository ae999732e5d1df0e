#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "surropt/surrogates.hpp"

namespace surropt {

enum class MetricKind { ErrorRate, GmeanLoss, MacroFLoss, PrbepLoss, PrecisionAtKLoss };

/// Evaluation metric expressed as a loss in [0, 1] (lower is better).
/// Serialized in configs as: error | gmean | macro_f | prbep | p_at_k:<k>.
struct MetricSpec {
  MetricKind kind = MetricKind::ErrorRate;
  std::optional<int> k;  // precision_at_k only

  void validate() const;
  std::string to_string() const;
  static MetricSpec parse(const std::string& text);

  /// True when the paper reports the complement (1 - loss) of this metric,
  /// e.g. F-measure and precision metrics.
  bool display_as_complement() const {
    return kind == MetricKind::MacroFLoss || kind == MetricKind::PrbepLoss ||
           kind == MetricKind::PrecisionAtKLoss;
  }
};

struct ConfusionRates {
  double tpr = 0, tnr = 0, fpr = 0, fnr = 0;
};

ConfusionRates confusion_rates(const ScoreVector& scores, const Dataset& ds);

double error_rate(const ScoreVector& scores, const Dataset& ds);
double gmean_loss(const ScoreVector& scores, const Dataset& ds);
double macro_f_loss(const ScoreVector& scores, const Dataset& ds);
double prbep_loss(const ScoreVector& scores, const Dataset& ds);
double precision_at_k_loss(const ScoreVector& scores, const Dataset& ds, int k);

/// Black-box view of a metric: scores and labels in, loss out.
using MetricFn = std::function<double(const ScoreVector&, const Dataset&)>;

MetricFn make_metric(const MetricSpec& spec);

/// Known link function psi with its gradient, for estimator tests and the
/// synthetic studies.
struct SyntheticPsi {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;

  static SyntheticPsi linear(const Vector& a);
  /// (prod u_k)^(1/K) on the positive orthant.
  static SyntheticPsi geometric_mean(int K);
  /// Softmax-smoothed max: (1/t) log sum exp(t u_k).
  static SyntheticPsi softmax_max(int K, double temperature);
};

/// Metric M(scores) = psi(profile(scores)) + slack(scores). The slack, when
/// given, receives the raw score vector.
MetricFn make_synthetic_metric(
    const SyntheticPsi& psi, const std::vector<SurrogateSpec>& specs,
    std::function<double(const ScoreVector&)> slack_fn = nullptr);

}  // namespace surropt
