#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "surropt/numerics.hpp"

namespace surropt {

/// Feature matrix with +/-1 labels, optional binary group ids, and a flag per
/// column marking features that only take values in {0, 1}.
struct Dataset {
  Matrix features;                       // n x d
  Eigen::VectorXi labels;                // entries in {-1, +1}
  std::optional<Eigen::VectorXi> groups; // entries in {0, 1}, length n
  std::vector<bool> binary_feature_mask; // length d

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }

  Dataset subset(const std::vector<int>& indices) const;

  /// Sanity checks on the invariants above; throws on violation.
  void validate() const;
};

struct SplitSpec {
  double train_frac = 4.0 / 9.0;
  double val_frac = 2.0 / 9.0;
  double test_frac = 1.0 / 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 2-D simulated task: positives ~ N([0,0], 0.2 I), negatives an equal-prior
/// mixture of N([-1,-1], 0.1 I) and N([1,1], 0.1 I). The positive count is
/// exact: round(positive_frac * n).
Dataset generate_simulated(int n, double positive_frac, std::uint64_t seed);

/// Grouped variant used by the fairness experiments when no CSV is supplied:
/// same geometry per group with a group-dependent shift, plus one binary
/// feature column. Group ids are assigned Bernoulli(0.5).
Dataset generate_simulated_grouped(int n, double positive_frac, std::uint64_t seed);

struct CsvOptions {
  std::string label_column;
  std::optional<std::string> group_column;
  std::vector<std::string> binary_columns;
  /// Columns dropped entirely (e.g. an alternate label column).
  std::vector<std::string> exclude_columns;
  /// Mapping for non-numeric group values, e.g. {"M", 0}, {"F", 1}.
  std::map<std::string, int> group_value_map;
};

/// Comma-separated, first row header, '.' decimal point. Labels accepted as
/// {-1, 1} or {0, 1} with 0 -> -1.
Dataset load_csv(const std::string& path, const CsvOptions& options);

void save_csv(const Dataset& ds, const std::string& path);

/// Picks floor(fraction * |group|) examples of target_group uniformly at
/// random; adds N(0, column stddev^2) noise to their real features and flips
/// each of their binary features independently with probability flip_prob.
/// Column stddevs are computed on the full input dataset.
Dataset inject_group_noise(const Dataset& ds, int target_group, double fraction,
                           double flip_prob, std::uint64_t seed);

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

}  // namespace surropt
