#include "surropt/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace surropt {

namespace {

double logistic_loss(double margin) {
  // log(1 + exp(-margin)), stable for large |margin|
  if (margin > 0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

std::string subset_to_string(const SurrogateSpec& s) {
  switch (s.subset) {
    case SubsetKind::All: return "all";
    case SubsetKind::Positives: return "positives";
    case SubsetKind::Negatives: return "negatives";
    case SubsetKind::GroupPositives:
      return "group" + std::to_string(s.group) + "_positives";
    case SubsetKind::GroupNegatives:
      return "group" + std::to_string(s.group) + "_negatives";
  }
  return "?";
}

}  // namespace

void SurrogateSpec::validate() const {
  if (kind == SurrogateKind::PrecisionAtRecall) {
    if (!tau) throw std::invalid_argument("surrogate: precision_at_recall requires tau");
    if (*tau <= 0.0 || *tau >= 1.0)
      throw std::invalid_argument("surrogate: tau must be in (0, 1)");
    if (subset != SubsetKind::All)
      throw std::invalid_argument("surrogate: precision_at_recall requires subset 'all'");
  } else if (tau) {
    throw std::invalid_argument("surrogate: tau only valid for precision_at_recall");
  }
  if (group != 0 && group != 1)
    throw std::invalid_argument("surrogate: group id must be 0 or 1");
}

std::string SurrogateSpec::to_string() const {
  std::string kind_str;
  switch (kind) {
    case SurrogateKind::Hinge: kind_str = "hinge"; break;
    case SurrogateKind::Logistic: kind_str = "logistic"; break;
    case SurrogateKind::Sigmoid: kind_str = "sigmoid"; break;
    case SurrogateKind::PrecisionAtRecall: kind_str = "precision_at_recall"; break;
  }
  std::string out = kind_str + ":" + subset_to_string(*this);
  if (tau) {
    std::ostringstream ss;
    ss << *tau;
    out += ":" + ss.str();
  }
  return out;
}

SurrogateSpec SurrogateSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3)
    throw std::invalid_argument("surrogate spec '" + text + "': expected kind:subset[:tau]");

  SurrogateSpec spec;
  if (parts[0] == "hinge") spec.kind = SurrogateKind::Hinge;
  else if (parts[0] == "logistic") spec.kind = SurrogateKind::Logistic;
  else if (parts[0] == "sigmoid") spec.kind = SurrogateKind::Sigmoid;
  else if (parts[0] == "precision_at_recall") spec.kind = SurrogateKind::PrecisionAtRecall;
  else throw std::invalid_argument("surrogate spec '" + text + "': unknown kind");

  const std::string& sub = parts[1];
  if (sub == "all") spec.subset = SubsetKind::All;
  else if (sub == "positives") spec.subset = SubsetKind::Positives;
  else if (sub == "negatives") spec.subset = SubsetKind::Negatives;
  else if (sub.rfind("group", 0) == 0) {
    auto us = sub.find('_');
    if (us == std::string::npos)
      throw std::invalid_argument("surrogate spec '" + text + "': bad group subset");
    spec.group = std::stoi(sub.substr(5, us - 5));
    std::string tail = sub.substr(us + 1);
    if (tail == "positives") spec.subset = SubsetKind::GroupPositives;
    else if (tail == "negatives") spec.subset = SubsetKind::GroupNegatives;
    else throw std::invalid_argument("surrogate spec '" + text + "': bad group subset");
  } else {
    throw std::invalid_argument("surrogate spec '" + text + "': unknown subset");
  }

  if (parts.size() == 3) spec.tau = std::stod(parts[2]);
  spec.validate();
  return spec;
}

std::vector<int> subset_indices(const SurrogateSpec& spec, const Dataset& ds) {
  std::vector<int> out;
  for (int i = 0; i < ds.size(); ++i) {
    bool in = false;
    switch (spec.subset) {
      case SubsetKind::All: in = true; break;
      case SubsetKind::Positives: in = ds.labels(i) > 0; break;
      case SubsetKind::Negatives: in = ds.labels(i) < 0; break;
      case SubsetKind::GroupPositives:
        if (!ds.groups) throw std::invalid_argument("surrogate subset needs groups");
        in = ds.labels(i) > 0 && (*ds.groups)(i) == spec.group;
        break;
      case SubsetKind::GroupNegatives:
        if (!ds.groups) throw std::invalid_argument("surrogate subset needs groups");
        in = ds.labels(i) < 0 && (*ds.groups)(i) == spec.group;
        break;
    }
    if (in) out.push_back(i);
  }
  return out;
}

bool subsets_pairwise_disjoint(const std::vector<SurrogateSpec>& specs, const Dataset& ds) {
  std::set<int> seen;
  for (const auto& spec : specs) {
    for (int i : subset_indices(spec, ds)) {
      if (!seen.insert(i).second) return false;
    }
  }
  return true;
}

double eval_surrogate(const SurrogateSpec& spec, const ScoreVector& scores,
                      const Dataset& ds) {
  spec.validate();
  if (scores.size() != ds.size())
    throw std::invalid_argument("eval_surrogate: score length does not match dataset");

  if (spec.kind == SurrogateKind::PrecisionAtRecall) {
    std::vector<double> pos_scores;
    double neg_sum = 0.0;
    int n_neg = 0;
    for (int i = 0; i < ds.size(); ++i)
      if (ds.labels(i) > 0) pos_scores.push_back(scores.scores(i));
    if (pos_scores.empty())
      throw std::invalid_argument("eval_surrogate: precision_at_recall needs positives");
    Vector ps = Eigen::Map<Vector>(pos_scores.data(),
                                   static_cast<Eigen::Index>(pos_scores.size()));
    double t = empirical_quantile(ps, 1.0 - *spec.tau);
    double pos_sum = 0.0;
    for (int i = 0; i < ds.size(); ++i) {
      double s = scores.scores(i);
      if (ds.labels(i) > 0) {
        pos_sum += std::max(0.0, 1.0 + t - s);
      } else {
        neg_sum += std::max(0.0, 1.0 + s - t);
        ++n_neg;
      }
    }
    if (n_neg == 0)
      throw std::invalid_argument("eval_surrogate: precision_at_recall needs negatives");
    return neg_sum / n_neg + *spec.tau * pos_sum / static_cast<double>(pos_scores.size());
  }

  std::vector<int> idx = subset_indices(spec, ds);
  if (idx.empty())
    throw std::invalid_argument("eval_surrogate: empty subset '" + subset_to_string(spec) +
                                "'");
  double sum = 0.0;
  for (int i : idx) {
    double margin = ds.labels(i) * scores.scores(i);
    switch (spec.kind) {
      case SurrogateKind::Hinge: sum += std::max(0.0, 1.0 - margin); break;
      case SurrogateKind::Logistic: sum += logistic_loss(margin); break;
      case SurrogateKind::Sigmoid: sum += sigmoid(-margin); break;
      default: break;
    }
  }
  return sum / static_cast<double>(idx.size());
}

SurrogateProfile eval_profile_from_scores(const std::vector<SurrogateSpec>& specs,
                                          const ScoreVector& scores, const Dataset& ds) {
  if (specs.empty()) throw std::invalid_argument("eval_profile: no surrogates");
  if (scores.size() == 0) throw std::invalid_argument("eval_profile: empty score vector");
  SurrogateProfile p;
  p.values.resize(static_cast<Eigen::Index>(specs.size()));
  for (std::size_t k = 0; k < specs.size(); ++k)
    p.values(static_cast<Eigen::Index>(k)) = eval_surrogate(specs[k], scores, ds);
  return p;
}

SurrogateProfile eval_profile(const std::vector<SurrogateSpec>& specs,
                              const ModelParams& params, const Dataset& ds) {
  return eval_profile_from_scores(specs, score(params, ds.features), ds);
}

Vector surrogate_gradient(const SurrogateSpec& spec, const ModelParams& params,
                          const Dataset& ds) {
  spec.validate();
  ScoreVector sv = score(params, ds.features);
  int d = params.dim();
  Vector grad = Vector::Zero(d + 1);
  auto accumulate = [&](int i, double dphi_ds) {
    grad.head(d) += dphi_ds * ds.features.row(i).transpose();
    grad(d) += dphi_ds;
  };

  if (spec.kind == SurrogateKind::PrecisionAtRecall) {
    std::vector<double> pos_scores;
    int n_pos = 0, n_neg = 0;
    for (int i = 0; i < ds.size(); ++i) {
      if (ds.labels(i) > 0) { pos_scores.push_back(sv.scores(i)); ++n_pos; }
      else ++n_neg;
    }
    if (n_pos == 0 || n_neg == 0)
      throw std::invalid_argument("surrogate_gradient: precision_at_recall needs both classes");
    Vector ps = Eigen::Map<Vector>(pos_scores.data(),
                                   static_cast<Eigen::Index>(pos_scores.size()));
    double t = empirical_quantile(ps, 1.0 - *spec.tau);
    for (int i = 0; i < ds.size(); ++i) {
      double s = sv.scores(i);
      if (ds.labels(i) > 0) {
        if (1.0 + t - s > 0) accumulate(i, -*spec.tau / n_pos);
      } else {
        if (1.0 + s - t > 0) accumulate(i, 1.0 / n_neg);
      }
    }
    return grad;
  }

  std::vector<int> idx = subset_indices(spec, ds);
  if (idx.empty()) throw std::invalid_argument("surrogate_gradient: empty subset");
  double inv = 1.0 / static_cast<double>(idx.size());
  for (int i : idx) {
    double y = ds.labels(i);
    double margin = y * sv.scores(i);
    double dphi_ds = 0.0;
    switch (spec.kind) {
      case SurrogateKind::Hinge:
        dphi_ds = margin < 1.0 ? -y : 0.0;
        break;
      case SurrogateKind::Logistic:
        dphi_ds = -y * sigmoid(-margin);
        break;
      case SurrogateKind::Sigmoid: {
        double s = sigmoid(margin);
        dphi_ds = -y * s * (1.0 - s);
        break;
      }
      default: break;
    }
    if (dphi_ds != 0.0) accumulate(i, dphi_ds * inv);
  }
  return grad;
}

}  // namespace surropt
