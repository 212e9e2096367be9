// Serial reference kernels against their OpenMP counterparts.
//   ./bench_kernels --benchmark_filter=KlGrad
// Thread count follows OMP_NUM_THREADS; the default is all hardware threads.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "sslab/kernels.hpp"
#include "sslab/rng.hpp"
#include "sslab/tsne.hpp"

namespace {

using namespace sslab;

Matrix random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  for (double& v : x.values()) v = rng.normal();
  return x;
}

template <bool Parallel>
void BM_PairwiseSqDists(benchmark::State& state) {
  const Matrix x = random_points(static_cast<std::size_t>(state.range(0)), 64, 1);
  kernels::set_threads(Parallel ? omp_get_max_threads() : 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::pairwise_sq_dists_omp(x) : kernels::pairwise_sq_dists_serial(x));
  }
}

template <bool Parallel>
void BM_Calibrate(benchmark::State& state) {
  const Matrix sq = kernels::pairwise_sq_dists_serial(random_points(static_cast<std::size_t>(state.range(0)), 16, 2));
  kernels::set_threads(Parallel ? omp_get_max_threads() : 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::calibrate_omp(sq, 10.0, 1e-3, 64)
                                      : kernels::calibrate_serial(sq, 10.0, 1e-3, 64));
  }
}

template <bool Parallel>
void BM_KlGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix p = tsne::symmetrize(
      kernels::calibrate_serial(kernels::pairwise_sq_dists_serial(random_points(n, 16, 3)), 10.0, 1e-3, 64)
          .conditional);
  const Matrix y = random_points(n, 2, 4);
  const double plogp = kernels::sum_p_log_p(p);
  kernels::set_threads(Parallel ? omp_get_max_threads() : 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::student_t_kl_grad_omp(p, y, 1.0, 1e-12, plogp)
                                      : kernels::student_t_kl_grad_serial(p, y, 1.0, 1e-12, plogp));
  }
}

template <bool Parallel>
void BM_FpsRelax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_points(n, 2, 5);
  std::vector<double> min_sq(n, 1e300);
  kernels::set_threads(Parallel ? omp_get_max_threads() : 1);
  std::size_t pick = 0;
  for (auto _ : state) {
    if (Parallel) {
      kernels::fps_relax_omp(x, pick, min_sq);
      pick = kernels::argmax_omp(min_sq);
    } else {
      kernels::fps_relax_serial(x, pick, min_sq);
      pick = kernels::argmax_serial(min_sq);
    }
    benchmark::DoNotOptimize(pick);
  }
}

}  // namespace

BENCHMARK(BM_PairwiseSqDists<false>)->Arg(600)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseSqDists<true>)->Arg(600)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Calibrate<false>)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Calibrate<true>)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KlGrad<false>)->Arg(600)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KlGrad<true>)->Arg(600)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FpsRelax<false>)->Arg(10000)->Arg(100000);
BENCHMARK(BM_FpsRelax<true>)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
