#include <benchmark/benchmark.h>

#include "ido/perturb.hpp"
#include "ido/registrar.hpp"
#include "ido/shapes.hpp"

namespace {

void BM_Icp(benchmark::State& state) {
  const auto model = ido::synthetic_model("bunny", 128, 1);
  const auto pair = ido::generate_pair(model, ido::PerturbationSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(ido::register_icp(model, pair.scene, {}, {1000, 1e-10}));
}
BENCHMARK(BM_Icp)->Unit(benchmark::kMillisecond);

void BM_Procrustes(benchmark::State& state) {
  const auto model = ido::synthetic_model("bunny", 514, 1);
  const auto pair = ido::generate_pair(model, ido::PerturbationSpec{0.0, 514, 0, 0.0, 60.0, 0.3});
  const Eigen::Matrix3Xd target = ido::apply(pair.T_gt, pair.scene.points());
  for (auto _ : state) benchmark::DoNotOptimize(ido::procrustes_fit(pair.scene.points(), target));
}
BENCHMARK(BM_Procrustes)->Unit(benchmark::kMicrosecond);

}  // namespace
