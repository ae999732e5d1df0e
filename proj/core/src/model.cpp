#include "surropt/model.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace surropt {

Vector ModelParams::packed() const {
  Vector v(weights.size() + 1);
  v.head(weights.size()) = weights;
  v(weights.size()) = bias;
  return v;
}

ModelParams ModelParams::unpack(const Vector& v) {
  if (v.size() < 1) throw std::invalid_argument("ModelParams::unpack: empty vector");
  ModelParams p;
  p.weights = v.head(v.size() - 1);
  p.bias = v(v.size() - 1);
  return p;
}

ScoreVector score(const ModelParams& params, const Matrix& features) {
  if (features.cols() != params.weights.size())
    throw std::invalid_argument("score: feature width " + std::to_string(features.cols()) +
                                " does not match weight length " +
                                std::to_string(params.weights.size()));
  ScoreVector sv;
  sv.scores = (features * params.weights).array() + params.bias;
  return sv;
}

Eigen::VectorXi predict(const ScoreVector& scores) {
  Eigen::VectorXi out(scores.scores.size());
  for (Eigen::Index i = 0; i < scores.scores.size(); ++i)
    out(i) = scores.scores(i) > 0.0 ? 1 : -1;
  return out;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f << std::setprecision(17);
  f << params.weights.size() << "\n";
  for (Eigen::Index i = 0; i < params.weights.size(); ++i) f << params.weights(i) << "\n";
  f << params.bias << "\n";
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  Eigen::Index d = 0;
  if (!(f >> d) || d < 0) throw std::runtime_error("load_checkpoint: bad header in " + path);
  ModelParams p;
  p.weights.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(f >> p.weights(i)))
      throw std::runtime_error("load_checkpoint: truncated weights in " + path);
  }
  if (!(f >> p.bias)) throw std::runtime_error("load_checkpoint: missing bias in " + path);
  return p;
}

}  // namespace surropt
