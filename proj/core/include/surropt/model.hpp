#pragma once

#include <string>

#include "surropt/numerics.hpp"

namespace surropt {

/// Linear scorer f(x) = <weights, x> + bias.
struct ModelParams {
  Vector weights;
  double bias = 0.0;

  int dim() const { return static_cast<int>(weights.size()); }

  static ModelParams zeros(int d) { return {Vector::Zero(d), 0.0}; }

  /// Flat (d+1)-vector with the bias appended; used by parameter-space
  /// perturbations and by the generic Adagrad driver.
  Vector packed() const;
  static ModelParams unpack(const Vector& v);
};

struct ScoreVector {
  Vector scores;
  int size() const { return static_cast<int>(scores.size()); }
};

ScoreVector score(const ModelParams& params, const Matrix& features);

/// sign predictions; zero scores map to -1.
Eigen::VectorXi predict(const ScoreVector& scores);

/// Checkpoint: first line d, then the d weights, then the bias.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace surropt
