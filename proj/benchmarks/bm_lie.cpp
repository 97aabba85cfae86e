#include <benchmark/benchmark.h>

#include "ido/lie.hpp"
#include "ido/random.hpp"

namespace {

std::vector<ido::Twist> twists(std::size_t n) {
  ido::CounterRng rng(1, 0);
  std::vector<ido::Twist> out;
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(rng.uniform(0, 1) * rng.unit_vector(), rng.uniform(0, 3) * rng.unit_vector());
  return out;
}

void BM_ExpSe3(benchmark::State& state) {
  const auto xs = twists(1024);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ido::exp_se3(xs[i++ & 1023]));
}
BENCHMARK(BM_ExpSe3);

void BM_LogSe3(benchmark::State& state) {
  std::vector<ido::RigidTransform> ts;
  for (const auto& x : twists(1024)) ts.push_back(ido::exp_se3(x));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ido::log_se3(ts[i++ & 1023]));
}
BENCHMARK(BM_LogSe3);

}  // namespace
