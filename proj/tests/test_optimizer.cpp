#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "surropt/optimizer.hpp"

using namespace surropt;

namespace {

Dataset separable(int n_pos, int n_neg, double x0 = 0.5) {
  Dataset ds;
  int n = n_pos + n_neg;
  ds.features = Matrix(n, 1);
  ds.labels = Eigen::VectorXi(n);
  for (int i = 0; i < n; ++i) {
    bool pos = i < n_pos;
    ds.labels(i) = pos ? 1 : -1;
    ds.features(i, 0) = pos ? x0 : -x0;
  }
  ds.binary_feature_mask = {false};
  return ds;
}

std::vector<SurrogateSpec> hinge_pair() {
  return {SurrogateSpec::parse("hinge:positives"), SurrogateSpec::parse("hinge:negatives")};
}

// K = 2 quadratic toy over scalar theta: l(theta) = ((theta-1)^2, (theta+1)^2).
Vector quad_profile(const Vector& th) {
  Vector u(2);
  u << (th(0) - 1) * (th(0) - 1), (th(0) + 1) * (th(0) + 1);
  return u;
}

Vector quad_grad(const Vector& th, int k) {
  Vector g(1);
  g << (k == 0 ? 2 * (th(0) - 1) : 2 * (th(0) + 1));
  return g;
}

}  // namespace

TEST_CASE("estimator parsing") {
  CHECK(parse_estimator("fd") == EstimatorKind::FiniteDifference);
  CHECK(parse_estimator("interp") == EstimatorKind::Interpolation);
  CHECK(parse_estimator("two_step") == EstimatorKind::TwoStep);
  CHECK_THROWS(parse_estimator("sgd"));
}

TEST_CASE("project_inexact returns the warm start when already feasible") {
  Dataset ds = separable(3, 3);
  auto specs = hinge_pair();
  ModelParams warm{Vector(1), 0.05};
  warm.weights << 0.2;
  Vector u_tilde = eval_profile(specs, warm, ds).values.array() + 0.5;
  PgdConfig cfg;
  auto [theta, profile] = project_inexact(specs, ds, u_tilde, warm, cfg);
  CHECK(theta.weights == warm.weights);
  CHECK(theta.bias == warm.bias);
  CHECK((profile.values - u_tilde).cwiseMax(0.0).squaredNorm() == 0.0);
}

TEST_CASE("generic projection on the 1-D quadratic reaches the feasible set") {
  // l(theta) = theta^2, u_tilde = 4, warm start 3: feasible set |theta| <= 2
  auto profile = [](const Vector& th) { return Vector(Vector::Constant(1, th(0) * th(0))); };
  auto grad = [](const Vector& th, int) { return Vector(Vector::Constant(1, 2 * th(0))); };
  Vector u_tilde = Vector::Constant(1, 4.0);
  auto [theta, prof] = project_inexact_generic(profile, grad, u_tilde,
                                               Vector::Constant(1, 3.0), 1.0, 100);
  double excess = std::max(0.0, prof(0) - 4.0);
  CHECK(excess * excess <= 1e-4);
}

TEST_CASE("generic projection matches the 1-D grid oracle on the K = 2 quadratic") {
  Vector u_tilde(2);
  u_tilde << 0.5, 0.5;  // infeasible: no theta has both quadratics <= 0.5
  auto [theta, prof] = project_inexact_generic(quad_profile, quad_grad, u_tilde,
                                               Vector::Constant(1, 0.8), 1.0, 100);
  double achieved = (prof - u_tilde).cwiseMax(0.0).squaredNorm();

  double best = std::numeric_limits<double>::infinity();
  for (double t = -3.0; t <= 3.0; t += 1e-4) {
    Vector th = Vector::Constant(1, t);
    best = std::min(best, (quad_profile(th) - u_tilde).cwiseMax(0.0).squaredNorm());
  }
  CHECK(achieved <= best + 1e-3);
}

TEST_CASE("Lemma 6 completion matches a brute-force epigraph projection") {
  // U = {u : exists theta with u >= l(theta)} for the quadratic toy.
  Vector u_tilde(2);
  u_tilde << 0.5, 0.5;
  auto [theta, prof] = project_inexact_generic(quad_profile, quad_grad, u_tilde,
                                               Vector::Constant(1, 0.8), 1.0, 200);
  Vector completed = complete_exact_projection(SurrogateProfile{prof}, u_tilde);

  double best_dist = std::numeric_limits<double>::infinity();
  for (double t = -3.0; t <= 3.0; t += 1e-4) {
    Vector candidate = quad_profile(Vector::Constant(1, t)).cwiseMax(u_tilde);
    best_dist = std::min(best_dist, (candidate - u_tilde).norm());
  }
  CHECK((completed - u_tilde).norm() <= best_dist + 1e-3);
  // dominance (Lemma 1): the realized profile never exceeds the completion
  CHECK((prof.array() <= completed.array() + 0.0).all());
}

TEST_CASE("complete_exact_projection frozen examples") {
  SurrogateProfile u{Vector(2)};
  u.values << 1, 2;
  Vector t(2);
  t << 0.5, 3;
  Vector c = complete_exact_projection(u, t);
  CHECK(c(0) == 1.0);
  CHECK(c(1) == 3.0);

  Vector below(2);
  below << 0.5, 1.5;
  CHECK(complete_exact_projection(u, below) == u.values);
  Vector above(2);
  above << 2, 3;
  CHECK(complete_exact_projection(u, above) == above);
}

TEST_CASE("surrogate_pgd with a constant metric is a fixed point") {
  Dataset ds = separable(4, 4);
  auto specs = hinge_pair();
  MetricFn metric = [](const ScoreVector&, const Dataset&) { return 0.3; };
  PgdConfig cfg;
  cfg.T = 5;
  cfg.estimator = EstimatorKind::FiniteDifference;
  cfg.perturbation.m = 50;
  cfg.perturbation.sigma = 0.1;
  PgdResult res = surrogate_pgd(metric, specs, ds, nullptr, cfg);
  CHECK(res.params.weights.isZero(0.0));
  CHECK(res.params.bias == 0.0);
  for (const auto& r : res.trace.records) {
    CHECK(r.g_hat.isZero(0.0));
    CHECK(r.u == res.trace.records.front().u);
  }
}

TEST_CASE("surrogate_pgd descends a smooth monotone link on separable data") {
  auto specs = hinge_pair();
  Vector a(2);
  a << 1.0, 1.0;
  SyntheticPsi psi = SyntheticPsi::linear(a);
  MetricFn metric = make_synthetic_metric(psi, specs);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Dataset ds = separable(6, 10);
    PgdConfig cfg;
    cfg.T = 50;
    cfg.eta = 0.3;
    cfg.estimator = EstimatorKind::FiniteDifference;
    cfg.perturbation.m = 200;
    cfg.perturbation.sigma = 0.1;
    cfg.perturbation.seed = seed;
    PgdResult res = surrogate_pgd(metric, specs, ds, nullptr, cfg);
    double initial = psi.value(res.trace.records.front().u);
    double final_val = psi.value(res.trace.final_u);
    CHECK(final_val <= initial - 0.1);
  }
}

TEST_CASE("realizability: final profile equals the final model's profile") {
  Dataset ds = separable(5, 5);
  auto specs = hinge_pair();
  Vector a(2);
  a << 1.0, 1.0;
  MetricFn metric = make_synthetic_metric(SyntheticPsi::linear(a), specs);
  PgdConfig cfg;
  cfg.T = 10;
  cfg.eta = 0.3;
  cfg.estimator = EstimatorKind::FiniteDifference;
  cfg.perturbation.m = 100;
  cfg.perturbation.sigma = 0.1;
  cfg.model_selection = ModelSelection::Last;
  PgdResult res = surrogate_pgd(metric, specs, ds, nullptr, cfg);
  CHECK(res.trace.final_u == eval_profile(specs, res.params, ds).values);
}

TEST_CASE("dominance: every iterate profile is below its Lemma 6 completion") {
  Dataset ds = separable(5, 5);
  auto specs = hinge_pair();
  Vector a(2);
  a << 1.0, 0.5;
  MetricFn metric = make_synthetic_metric(SyntheticPsi::linear(a), specs);
  PgdConfig cfg;
  cfg.T = 20;
  cfg.eta = 0.2;
  cfg.estimator = EstimatorKind::FiniteDifference;
  cfg.perturbation.m = 100;
  cfg.perturbation.sigma = 0.1;
  PgdResult res = surrogate_pgd(metric, specs, ds, nullptr, cfg);
  for (std::size_t i = 0; i < res.trace.records.size(); ++i) {
    const Vector& u_next = i + 1 < res.trace.records.size()
                               ? res.trace.records[i + 1].u
                               : res.trace.final_u;
    Vector completed = res.trace.records[i].u_tilde.cwiseMax(u_next);
    CHECK((u_next.array() <= completed.array()).all());
  }
}

TEST_CASE("proximal form: substitution at theta = theta_prev and the scalar example") {
  // single positive example with x = 1: l(w, b) = max(0, 1 - (w + b))
  Dataset ds;
  ds.features = Matrix::Ones(1, 1);
  ds.labels = Eigen::VectorXi::Ones(1);
  ds.binary_feature_mask = {false};
  std::vector<SurrogateSpec> specs = {SurrogateSpec::parse("hinge:positives")};

  ModelParams prev{Vector(1), 0.0};
  prev.weights << 2.0;  // l(prev) = 0
  ModelParams cur{Vector(1), 0.0};
  cur.weights << 0.5;  // l(cur) = 0.5
  Vector g_hat = Vector::Constant(1, 1.0);
  CHECK(proximal_form_objective(specs, ds, cur, prev, g_hat, 1.0) ==
        doctest::Approx(1.75).epsilon(1e-12));

  // theta = theta_prev: <g, l> + (1/2eta)||(eta g)_+||^2 - (1/2eta)||(-eta g)_+||^2
  double eta = 0.7;
  Vector u_prev = eval_profile(specs, prev, ds).values;
  double expected = g_hat.dot(u_prev) +
                    (eta * g_hat).cwiseMax(0.0).squaredNorm() / (2 * eta) -
                    (-eta * g_hat).cwiseMax(0.0).squaredNorm() / (2 * eta);
  CHECK(proximal_form_objective(specs, ds, prev, prev, g_hat, eta) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Appendix C identity: difference is constant over random theta") {
  RandomStream rs(57);
  Dataset ds = separable(4, 4, 0.8);
  std::vector<SurrogateSpec> specs = {SurrogateSpec::parse("hinge:positives"),
                                      SurrogateSpec::parse("hinge:negatives"),
                                      SurrogateSpec::parse("logistic:all")};
  ModelParams prev{gaussian_vector(rs, 1), rs.gaussian()};
  Vector g_hat = gaussian_vector(rs, 3);
  double eta = 0.4;
  Vector u_prev = eval_profile(specs, prev, ds).values;
  Vector u_tilde = u_prev - eta * g_hat;
  double expected_const = 0.5 * eta * g_hat.squaredNorm() - g_hat.dot(u_prev);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int trial = 0; trial < 100; ++trial) {
    ModelParams theta{gaussian_vector(rs, 1), rs.gaussian()};
    Vector u = eval_profile(specs, theta, ds).values;
    double clipped = (u - u_tilde).cwiseMax(0.0).squaredNorm() / eta;
    double diff = clipped - proximal_form_objective(specs, ds, theta, prev, g_hat, eta);
    lo = std::min(lo, diff);
    hi = std::max(hi, diff);
  }
  double scale = std::max(1.0, std::abs(expected_const));
  CHECK((hi - lo) / scale <= 1e-9);
  CHECK(std::abs(lo - expected_const) / scale <= 1e-9);
}

TEST_CASE("stationarity diagnostic on hand-built traces") {
  PgdTrace trace;
  PgdRecord r0;  // zero-gradient iteration: u_tilde = u, next u equal
  r0.t = 1;
  r0.u = Vector::Constant(2, 1.0);
  r0.u_tilde = Vector::Constant(2, 1.0);
  r0.g_hat = Vector::Zero(2);
  PgdRecord r1;  // fully absorbed descent step
  r1.t = 2;
  r1.u = Vector::Constant(2, 1.0);
  r1.u_tilde = Vector(2);
  r1.u_tilde << 0.8, 0.7;
  r1.g_hat = Vector(2);
  double eta = 0.5;
  r1.g_hat << (1.0 - 0.8) / eta, (1.0 - 0.7) / eta;
  trace.records = {r0, r1};
  trace.final_u = Vector(2);
  trace.final_u << 0.5, 0.6;  // below u_tilde: step fully absorbed

  std::vector<double> diag = stationarity_diagnostic(trace, eta);
  REQUIRE(diag.size() == 2);
  CHECK(diag[0] == 0.0);
  CHECK(diag[1] == doctest::Approx(r1.g_hat.norm()).epsilon(1e-12));
}

TEST_CASE("monotone transform of the metric with doubled eta gives identical iterates") {
  Dataset ds = separable(5, 5);
  auto specs = hinge_pair();
  Vector a(2);
  a << 1.0, 1.0;
  MetricFn base = make_synthetic_metric(SyntheticPsi::linear(a), specs);
  MetricFn scaled = [&base](const ScoreVector& s, const Dataset& d) {
    return 0.5 * base(s, d) + 0.1;
  };
  PgdConfig cfg;
  cfg.T = 15;
  cfg.eta = 0.2;
  cfg.estimator = EstimatorKind::FiniteDifference;
  cfg.perturbation.m = 100;
  cfg.perturbation.sigma = 0.1;
  cfg.perturbation.seed = 3;
  PgdResult r1 = surrogate_pgd(base, specs, ds, nullptr, cfg);
  PgdConfig cfg2 = cfg;
  cfg2.eta = 2.0 * cfg.eta;
  PgdResult r2 = surrogate_pgd(scaled, specs, ds, nullptr, cfg2);
  REQUIRE(r1.trace.records.size() == r2.trace.records.size());
  for (std::size_t i = 0; i < r1.trace.records.size(); ++i) {
    CHECK((r1.trace.records[i].u - r2.trace.records[i].u).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((r1.trace.records[i].g_hat - 2.0 * r2.trace.records[i].g_hat)
              .lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("model selection returns the best validation iterate by default") {
  Dataset train = separable(6, 10);
  Dataset val = separable(5, 8);
  auto specs = hinge_pair();
  Vector a(2);
  a << 1.0, 1.0;
  MetricFn metric = make_synthetic_metric(SyntheticPsi::linear(a), specs);
  PgdConfig cfg;
  cfg.T = 30;
  cfg.eta = 0.3;
  cfg.estimator = EstimatorKind::FiniteDifference;
  cfg.perturbation.m = 100;
  cfg.perturbation.sigma = 0.1;
  PgdResult res = surrogate_pgd(metric, specs, train, &val, cfg);
  double returned = metric(score(res.params, val.features), val);
  for (const auto& r : res.trace.records) {
    REQUIRE(r.val_metric.has_value());
    CHECK(returned <= *r.val_metric + 1e-12);
  }
}

TEST_CASE("trace JSONL round-trips through a file") {
  Dataset ds = separable(4, 4);
  auto specs = hinge_pair();
  Vector a(2);
  a << 1.0, 1.0;
  MetricFn metric = make_synthetic_metric(SyntheticPsi::linear(a), specs);
  PgdConfig cfg;
  cfg.T = 3;
  cfg.estimator = EstimatorKind::FiniteDifference;
  cfg.perturbation.m = 20;
  cfg.perturbation.sigma = 0.1;
  PgdResult res = surrogate_pgd(metric, specs, ds, nullptr, cfg);
  res.trace.save_jsonl("trace_test.jsonl");
  std::ifstream f("trace_test.jsonl");
  int lines = 0;
  std::string line;
  while (std::getline(f, line)) ++lines;
  f.close();
  std::remove("trace_test.jsonl");
  CHECK(lines == 3);
}
