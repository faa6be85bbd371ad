// Serial against OpenMP for the three embarrassingly parallel kernels:
// NCC sampling, a batch of null geodesic shoots, and the multistart chain search.
// Arg(0) is serial, Arg(1) is the OpenMP path.

#include <benchmark/benchmark.h>

#include <vector>

#include "cpd/catalog.hpp"
#include "cpd/kobayashi.hpp"

namespace {

using namespace cpd;

Execution policy(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

SampleSpec eds_box(int points) {
  SampleSpec s;
  s.lower = Coordinates::Constant(4, -5.0);
  s.upper = Coordinates::Constant(4, 5.0);
  s.lower[3] = 0.1;
  s.upper[3] = 10.0;
  s.log_time = true;
  s.points = points;
  s.seed = 7;
  return s;
}

void BM_Ncc(benchmark::State& state) {
  const MetricModel eds = einstein_de_sitter(4);
  const SampleSpec spec = eds_box(2000);
  for (auto _ : state) {
    const ConditionReport r = state.range(0) ? check_ncc(eds, spec) : check_ncc_serial(eds, spec);
    benchmark::DoNotOptimize(r.min_value);
  }
  state.SetItemsProcessed(state.iterations() * spec.points);
}

void BM_BatchShoot(benchmark::State& state) {
  const MetricModel eds = einstein_de_sitter(4);
  const SampleSpec spec = eds_box(32);
  std::vector<NullSample> samples;
  for (int i = 0; i < spec.points; ++i)
    if (auto s = draw_null_sample(eds, spec, static_cast<std::size_t>(i))) samples.push_back(*s);
  IntegrationOptions opt;
  for (auto _ : state) {
    std::vector<double> ends(samples.size());
    for_each_index(samples.size(), policy(state), [&](std::size_t i) {
      const GeodesicTrajectory t = integrate_geodesic(eds, samples[i].x, samples[i].direction, 20.0, 20.0, opt);
      ends[i] = t.past().extent;
    });
    benchmark::DoNotOptimize(ends.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(samples.size()));
}

void BM_Multistart(benchmark::State& state) {
  const MetricModel eds = einstein_de_sitter(4);
  Coordinates x(4), y(4);
  x << 0.52, -0.21, 0.99, 0.85;
  y << 0.08, -0.39, 0.30, 1.14;
  SearchConfig cfg;
  cfg.starts = 4;
  cfg.iterations = 10;
  cfg.k_max = 2;
  cfg.execution = policy(state);
  for (auto _ : state) {
    const DistanceEstimate e = estimate_distance(eds, x, y, cfg);
    benchmark::DoNotOptimize(e.value);
  }
}

}  // namespace

BENCHMARK(BM_Ncc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchShoot)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Multistart)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
