// Serial reference kernels against the OpenMP ones on the same integrands.
#include <benchmark/benchmark.h>

#include <cmath>

#include "bkaudit/parallel.hpp"
#include "bkaudit/quad.hpp"

using namespace bkaudit;

namespace {

double bump(const Point& x) { return std::exp(-x.squaredNorm()) * (1.0 + 0.3 * std::sin(5.0 * x[0])); }

Box cube(int d) { return Box(Point::Constant(d, -1.0), Point::Constant(d, 1.0)); }

void BM_TensorParallel(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::tensor_gauss(bump, cube(d), 4, kernels::kTensorOrder));
}

void BM_TensorSerial(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(reference::tensor_gauss_serial(bump, cube(d), 4, kernels::kTensorOrder));
}

void BM_MonteCarloParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(kernels::monte_carlo(bump, cube(3), 42, 0, 16));
}

void BM_MonteCarloSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::monte_carlo_serial(bump, cube(3), 42, 0, 16));
}

}  // namespace

BENCHMARK(BM_TensorParallel)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TensorSerial)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloSerial)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  parallel::configure_from_env();
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}
