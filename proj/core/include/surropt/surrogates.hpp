#pragma once

#include <optional>
#include <string>
#include <vector>

#include "surropt/data.hpp"
#include "surropt/model.hpp"

namespace surropt {

enum class SurrogateKind { Hinge, Logistic, Sigmoid, PrecisionAtRecall };

enum class SubsetKind { All, Positives, Negatives, GroupPositives, GroupNegatives };

/// One surrogate loss: a pointwise loss family averaged over an example
/// subset. Serialized as "kind:subset[:tau]", e.g. "hinge:positives",
/// "hinge:group0_negatives", "precision_at_recall:all:0.25".
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::Hinge;
  SubsetKind subset = SubsetKind::All;
  int group = 0;                 // used by the group subsets
  std::optional<double> tau;     // precision_at_recall only

  void validate() const;
  std::string to_string() const;
  static SurrogateSpec parse(const std::string& text);
};

struct SurrogateProfile {
  Vector values;
  int size() const { return static_cast<int>(values.size()); }
};

/// Row indices the spec's subset selects on ds. precision_at_recall touches
/// every example and reports the full index set.
std::vector<int> subset_indices(const SurrogateSpec& spec, const Dataset& ds);

/// True when the K surrogates act on pairwise disjoint example subsets
/// (required by the score-space perturbation of the FD estimators).
bool subsets_pairwise_disjoint(const std::vector<SurrogateSpec>& specs, const Dataset& ds);

double eval_surrogate(const SurrogateSpec& spec, const ScoreVector& scores,
                      const Dataset& ds);

SurrogateProfile eval_profile(const std::vector<SurrogateSpec>& specs,
                              const ModelParams& params, const Dataset& ds);

SurrogateProfile eval_profile_from_scores(const std::vector<SurrogateSpec>& specs,
                                          const ScoreVector& scores, const Dataset& ds);

/// Analytic (sub)gradient of the surrogate w.r.t. the packed (weights, bias)
/// vector; hinge takes the 0 element of the subdifferential at the kink, and
/// precision_at_recall treats its quantile threshold as locally constant.
Vector surrogate_gradient(const SurrogateSpec& spec, const ModelParams& params,
                          const Dataset& ds);

}  // namespace surropt
