#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace surropt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Deterministic random stream. Same (seed, stream_id) always reproduces the
/// identical sequence; distinct stream_ids give independent substreams.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform in [0, 1).
  double uniform();

  /// Standard normal draw (Box-Muller; implementation-independent so streams
  /// are byte-identical across platforms).
  double gaussian();

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t next_u64();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// dim i.i.d. standard-normal draws; advances the stream.
Vector gaussian_vector(RandomStream& stream, int dim);

/// Minimizer of ||Hx - b||^2 + ridge*||x||^2 via normal equations.
/// With ridge = 0 and a factorization failure, retries with an automatic
/// ridge floor of 1e-10 * trace(H^T H) / K.
Vector least_squares_solve(const Matrix& H, const Vector& b, double ridge = 0.0);

/// Adagrad: theta_i -= step * g_i / sqrt(acc_i + 1e-8), acc_i += g_i^2.
Vector adagrad_minimize(const std::function<Vector(const Vector&)>& grad_fn,
                        const Vector& theta0, double step, int iters);

/// Value at rank ceil(tau * n) (1-indexed) of the ascending-sorted values;
/// tau = 0 returns the minimum.
double empirical_quantile(const Vector& values, double tau);

}  // namespace surropt
