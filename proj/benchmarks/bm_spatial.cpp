#include <benchmark/benchmark.h>

#include "ido/random.hpp"
#include "ido/spatial_index.hpp"

namespace {

Eigen::Matrix3Xd cloud(Eigen::Index n, std::uint64_t seed) {
  ido::CounterRng rng(seed, 0);
  Eigen::Matrix3Xd p(3, n);
  for (Eigen::Index i = 0; i < n; ++i) p.col(i) = rng.uniform(0, 1) * rng.unit_vector();
  return p;
}

void BM_Nearest(benchmark::State& state) {
  const Eigen::Matrix3Xd points = cloud(state.range(0), 1);
  const Eigen::Matrix3Xd queries = cloud(1024, 2);
  const ido::SpatialIndex index(points);
  Eigen::Index i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(index.nearest(queries.col(i++ & 1023)));
}
BENCHMARK(BM_Nearest)->Arg(128)->Arg(4000)->Arg(35947);

void BM_Knn(benchmark::State& state) {
  const Eigen::Matrix3Xd points = cloud(4000, 1);
  const Eigen::Matrix3Xd queries = cloud(1024, 2);
  const ido::SpatialIndex index(points);
  Eigen::Index i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(index.knn(queries.col(i++ & 1023), static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_Knn)->Arg(7)->Arg(32);

}  // namespace
