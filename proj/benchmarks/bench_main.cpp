#include <benchmark/benchmark.h>

#include "surropt/data.hpp"
#include "surropt/gradest.hpp"
#include "surropt/metrics.hpp"
#include "surropt/surrogates.hpp"

namespace {

using namespace surropt;

std::vector<SurrogateSpec> two_class_specs() {
  return {SurrogateSpec::parse("hinge:positives"), SurrogateSpec::parse("hinge:negatives")};
}

void BM_EvalProfile(benchmark::State& state) {
  Dataset ds = generate_simulated(static_cast<int>(state.range(0)), 0.10, 7);
  auto specs = two_class_specs();
  ModelParams p = ModelParams::zeros(ds.dim());
  p.weights << 0.3, -0.2;
  p.bias = 0.1;
  for (auto _ : state) {
    SurrogateProfile prof = eval_profile(specs, p, ds);
    benchmark::DoNotOptimize(prof);
  }
}
BENCHMARK(BM_EvalProfile)->Arg(1000)->Arg(10000);

void BM_FdEstimate(benchmark::State& state) {
  Dataset ds = generate_simulated(2000, 0.10, 7);
  auto specs = two_class_specs();
  ModelParams p = ModelParams::zeros(ds.dim());
  MetricFn metric = make_metric(MetricSpec::parse("gmean"));
  PerturbationConfig pcfg;
  pcfg.m = static_cast<int>(state.range(0));
  pcfg.sigma = 0.1;
  for (auto _ : state) {
    GradientEstimate g = fd_estimate(metric, specs, p, ds, pcfg);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_FdEstimate)->Arg(50)->Arg(200);

void BM_InterpEstimate(benchmark::State& state) {
  Dataset ds = generate_simulated(2000, 0.10, 7);
  auto specs = two_class_specs();
  ModelParams p = ModelParams::zeros(ds.dim());
  MetricFn metric = make_metric(MetricSpec::parse("gmean"));
  PerturbationConfig pcfg;
  pcfg.m = static_cast<int>(state.range(0));
  pcfg.sigma = 0.1;
  for (auto _ : state) {
    GradientEstimate g = interp_estimate(metric, specs, p, ds, ds, pcfg);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_InterpEstimate)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
