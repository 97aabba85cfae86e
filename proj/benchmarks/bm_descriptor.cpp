#include <benchmark/benchmark.h>

#include "ido/descriptor.hpp"
#include "ido/perturb.hpp"
#include "ido/shapes.hpp"

namespace {

// args: model points, gaussian evaluation (0 exact, 1 pruned), mode (0 original, 1 improved)
void BM_Histogram(benchmark::State& state) {
  const auto model = ido::synthetic_model("bunny", static_cast<std::size_t>(state.range(0)), 1);
  ido::ContextOptions opts;
  opts.gaussian = state.range(1) ? ido::GaussianEvaluation::pruned : ido::GaussianEvaluation::exact;
  const auto mode = state.range(2) ? ido::DescriptorMode::improved : ido::DescriptorMode::original;
  const auto ctx = ido::ModelContext::build(model, 0.03, mode, {}, opts);
  const auto pair = ido::generate_pair(model, ido::PerturbationSpec{});
  const ido::Twist x = pair.x_star;
  for (auto _ : state) benchmark::DoNotOptimize(ctx.evaluate(pair.scene, x));
  state.counters["scene"] = static_cast<double>(pair.scene.size());
}
BENCHMARK(BM_Histogram)
    ->ArgsProduct({{128, 514}, {0, 1}, {0, 1}})
    ->ArgNames({"model", "pruned", "improved"})
    ->Unit(benchmark::kMicrosecond);

void BM_BuildContext(benchmark::State& state) {
  const auto model = ido::synthetic_model("bunny", static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(ido::ModelContext::build(model, 0.03, ido::DescriptorMode::improved));
}
BENCHMARK(BM_BuildContext)->Arg(128)->Arg(514)->Unit(benchmark::kMicrosecond);

}  // namespace
