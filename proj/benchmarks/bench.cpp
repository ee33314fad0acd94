#include <benchmark/benchmark.h>

#include "nonnormal/init.hpp"
#include "nonnormal/linalg.hpp"
#include "nonnormal/memory.hpp"
#include "nonnormal/rnn.hpp"
#include "nonnormal/tasks.hpp"

using namespace nonnormal;

namespace {

Matrix stable_matrix(int n) {
  return 0.95 * random_orthogonal(n, 3) + 0.02 * chain_matrix(n, 1.0);
}

void BM_Eigenvalues(benchmark::State& state) {
  const Matrix w = stable_matrix(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eigenvalues(w));
}
BENCHMARK(BM_Eigenvalues)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_NoiseCovariance(benchmark::State& state) {
  const Matrix w = stable_matrix(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(noise_covariance(w));
}
BENCHMARK(BM_NoiseCovariance)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FisherCurve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix w = chain_matrix(n, 1.02);
  Vector v = Vector::Zero(n);
  v(0) = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(fisher_memory_curve(w, v, 2 * n));
}
BENCHMARK(BM_FisherCurve)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_BpttAddition(benchmark::State& state) {
  const int t_len = static_cast<int>(state.range(0));
  InitSpec spec;
  spec.kind = InitKind::kChain;
  spec.alpha = 1.02;
  const RnnParams params = initial_params(spec, 100, 2, 1);
  const TaskBatch batch = gen_addition(t_len, 16, std::uint64_t{1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bptt(params, Nonlinearity::kRelu, batch.inputs, batch.targets, batch.mask, batch.loss));
  }
}
BENCHMARK(BM_BpttAddition)->Arg(100)->Arg(750)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
