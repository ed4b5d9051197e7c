// Microbenchmarks for the hot paths: the closed-form probability vs the
// inner-product evaluation, map simulation, the geometry fit, and the
// Bell-test predictions.
#include <benchmark/benchmark.h>

#include <cmath>

#include "lgscan/chsh.hpp"
#include "lgscan/estimator.hpp"
#include "lgscan/forward_model.hpp"

using namespace lgscan;

namespace {

ExperimentConfig reference_config() {
  ExperimentConfig c;
  c.axis_xy = {-50.0, 0.0};
  c.pose_b = HologramPose{200.0, -kPi / 2.0};
  c.source = SourceState{0.5, kPi};
  c.beam = BeamGeometry{400.0};
  c.profile = EfficiencyProfile(1.0, 2000.0, 2.0);
  c.peak_rate = 100.0;
  c.background_rate = 0.0;
  c.seed = 42;
  return c;
}

ScanGrid reference_grid() { return ScanGrid{-1025.0, -975.0, 150.0, 14, 14}; }

ScanMap noiseless_reference_map() {
  const ExperimentConfig c = reference_config();
  const ScanGrid grid = reference_grid();
  const RateMap rates = analytic_map(c, grid);
  ScanMap m;
  m.grid = grid;
  m.dwell = 1e6;
  m.counts.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    m.counts[i] = std::llround(rates.rates[i] * m.dwell);
  }
  return m;
}

void BM_CoincidenceProbability(benchmark::State& state) {
  const HologramPose a{123.0, 0.4};
  const HologramPose b{200.0, -1.1};
  const SourceState s{0.5, 0.7};
  const BeamGeometry w{400.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(coincidence_probability(a, b, s, w));
  }
}
BENCHMARK(BM_CoincidenceProbability);

void BM_CoincidenceProbabilityOracle(benchmark::State& state) {
  const HologramPose a{123.0, 0.4};
  const HologramPose b{200.0, -1.1};
  const SourceState s{0.5, 0.7};
  const BeamGeometry w{400.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(coincidence_probability_oracle(a, b, s, w));
  }
}
BENCHMARK(BM_CoincidenceProbabilityOracle);

void BM_ExpectedRate(benchmark::State& state) {
  const ExperimentConfig c = reference_config();
  for (auto _ : state) {
    benchmark::DoNotOptimize(expected_rate(c, Point{137.0, -212.0}));
  }
}
BENCHMARK(BM_ExpectedRate);

void BM_SimulateScan(benchmark::State& state) {
  const ExperimentConfig c = reference_config();
  const ScanGrid grid = reference_grid();
  const unsigned threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_scan(c, grid, 12.2, threads));
  }
}
BENCHMARK(BM_SimulateScan)->Arg(1)->Arg(4);

void BM_AnalyticMap(benchmark::State& state) {
  const ExperimentConfig c = reference_config();
  const ScanGrid grid = reference_grid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytic_map(c, grid));
  }
}
BENCHMARK(BM_AnalyticMap);

void BM_LocateExtrema(benchmark::State& state) {
  const ScanMap m = noiseless_reference_map();
  for (auto _ : state) {
    benchmark::DoNotOptimize(locate_extrema(m));
  }
}
BENCHMARK(BM_LocateExtrema);

void BM_FitGeometry(benchmark::State& state) {
  const ScanMap m = noiseless_reference_map();
  const ExtremaReport extrema = locate_extrema(m);
  const EfficiencyProfile profile(1.0, 2000.0, 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_geometry(m, extrema, profile));
  }
}
BENCHMARK(BM_FitGeometry);

void BM_PredictS(benchmark::State& state) {
  const ChshSettings settings = canonical_chsh_settings();
  const BeamGeometry w{400.0};
  const SourceState s{0.5, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_s(settings, 283.0, w, s));
  }
}
BENCHMARK(BM_PredictS);

void BM_SimulateChshCounts(benchmark::State& state) {
  const ChshSettings settings = canonical_chsh_settings();
  const BeamGeometry w{400.0};
  const SourceState s{0.5, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_chsh_counts(settings, 283.0, w, s, 100.0, 5.0, 42));
  }
}
BENCHMARK(BM_SimulateChshCounts);

}  // namespace

BENCHMARK_MAIN();
