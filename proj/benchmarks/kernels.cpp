#include <benchmark/benchmark.h>

#include "rggfpp/augmented.hpp"
#include "rggfpp/estimators.hpp"
#include "rggfpp/runner.hpp"

using namespace rggfpp;

namespace {

ModelSpec model_of(double side) {
  ModelSpec m;
  m.side = side;
  return m;
}

VertexId giant_vertex(const ComponentLabeling& labels) {
  VertexId v = 0;
  while (!labels.in_giant(v)) ++v;
  return v;
}

}  // namespace

static void BM_SamplePpp(benchmark::State& state) {
  const BoxDomain box(2, static_cast<double>(state.range(0)));
  std::uint64_t k = 0;
  for (auto _ : state) {
    auto rng = make_stream(1, k++, Purpose::kPoints);
    benchmark::DoNotOptimize(sample_ppp(box, 1.0, rng, 2.0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_SamplePpp)->Arg(150)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_BuildRgg(benchmark::State& state) {
  auto rng = make_stream(1, 0, Purpose::kPoints);
  const auto cloud = sample_ppp(BoxDomain(2, static_cast<double>(state.range(0))), 1.0, rng, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(build_rgg(cloud, 2.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cloud.size()));
}
BENCHMARK(BM_BuildRgg)->Arg(150)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_Components(benchmark::State& state) {
  auto rng = make_stream(1, 0, Purpose::kPoints);
  const auto g = build_rgg(sample_ppp(BoxDomain(2, static_cast<double>(state.range(0))), 1.0, rng, 2.0), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(components(g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.num_vertices()));
}
BENCHMARK(BM_Components)->Arg(150)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_Dijkstra(benchmark::State& state) {
  const auto inst = make_instance(model_of(static_cast<double>(state.range(0))), 1, 0);
  const WeightedView view(inst.graph, inst.field);
  const VertexId src = giant_vertex(inst.labels);
  for (auto _ : state) benchmark::DoNotOptimize(dijkstra(view, src));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(inst.graph.num_vertices()));
}
BENCHMARK(BM_Dijkstra)->Arg(150)->Arg(300)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_TruncatedTime(benchmark::State& state) {
  const auto inst = make_instance(model_of(120.0), 1, 0);
  const auto aug = build_augmented(inst.graph, inst.field, 1.0, 1.5);
  const std::vector<double> x{static_cast<double>(state.range(0)), 0.0};
  TruncationOptions opt;
  opt.force_layered = true;
  const std::size_t budget = 3 * static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(truncated_time(aug, x, budget, opt));
}
BENCHMARK(BM_TruncatedTime)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Hausdorff(benchmark::State& state) {
  RandomStream rng(3);
  const auto corners = static_cast<std::size_t>(state.range(0));
  std::vector<double> path;
  for (std::size_t k = 0; k < corners; ++k) {
    path.push_back(static_cast<double>(k) * 160.0 / static_cast<double>(corners));
    path.push_back(4.0 * (rng.uniform01() - 0.5));
  }
  const std::vector<double> seg{0.0, 0.0, 160.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff(path, seg, 2, 0.5));
}
BENCHMARK(BM_Hausdorff)->Arg(20)->Arg(80)->Arg(320)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
