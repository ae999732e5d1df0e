#include "surropt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace surropt {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  // Mix seed and stream_id so nearby pairs land far apart in state space.
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = stream_id ^ 0x5851f42d4c957f2dULL;
  std::uint64_t b = splitmix64(s);
  state_ = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

std::uint64_t RandomStream::next_u64() { return splitmix64(state_); }

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::uint64_t RandomStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection sampling to avoid modulo bias.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

Vector gaussian_vector(RandomStream& stream, int dim) {
  if (dim < 1) throw std::invalid_argument("gaussian_vector: dim must be >= 1");
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = stream.gaussian();
  return v;
}

Vector least_squares_solve(const Matrix& H, const Vector& b, double ridge) {
  if (H.rows() < 1 || H.cols() < 1)
    throw std::invalid_argument("least_squares_solve: empty system");
  if (H.rows() != b.size())
    throw std::invalid_argument("least_squares_solve: dimension mismatch");
  const auto K = H.cols();
  Matrix A = H.transpose() * H;
  Vector rhs = H.transpose() * b;
  if (ridge > 0.0) A.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(A);
  if (ldlt.info() == Eigen::Success) {
    Vector x = ldlt.solve(rhs);
    if (x.allFinite()) {
      // Accept only if the normal equations are actually satisfied;
      // LDLT can report success on singular systems.
      double resid = (A * x - rhs).norm();
      if (resid <= 1e-8 * (rhs.norm() + 1.0)) return x;
    }
  }
  double floor = 1e-10 * A.trace() / static_cast<double>(K);
  if (floor <= 0.0) floor = 1e-12;
  A.diagonal().array() += floor;
  return Eigen::LDLT<Matrix>(A).solve(rhs);
}

Vector adagrad_minimize(const std::function<Vector(const Vector&)>& grad_fn,
                        const Vector& theta0, double step, int iters) {
  if (iters < 1) throw std::invalid_argument("adagrad_minimize: iters must be >= 1");
  if (step <= 0.0) throw std::invalid_argument("adagrad_minimize: step must be positive");
  const double delta = 1e-8;
  Vector theta = theta0;
  Vector acc = Vector::Zero(theta0.size());
  for (int t = 0; t < iters; ++t) {
    Vector g = grad_fn(theta);
    if (!g.allFinite())
      throw std::runtime_error("adagrad_minimize: non-finite gradient at iteration " +
                               std::to_string(t));
    acc.array() += g.array().square();
    theta.array() -= step * g.array() / (acc.array() + delta).sqrt();
  }
  return theta;
}

double empirical_quantile(const Vector& values, double tau) {
  if (values.size() < 1) throw std::invalid_argument("empirical_quantile: empty input");
  if (tau < 0.0 || tau > 1.0)
    throw std::invalid_argument("empirical_quantile: tau must be in [0, 1]");
  std::vector<double> v(values.data(), values.data() + values.size());
  std::stable_sort(v.begin(), v.end());
  if (tau == 0.0) return v.front();
  auto n = static_cast<std::ptrdiff_t>(v.size());
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(tau * static_cast<double>(n)));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, n);
  return v[static_cast<std::size_t>(rank - 1)];
}

}  // namespace surropt
