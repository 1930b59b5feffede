#include <benchmark/benchmark.h>

#include <numeric>

#include "mose/graph.hpp"
#include "mose/kernel.hpp"
#include "mose/rng.hpp"

using namespace mose;

namespace {

NodeSubgraph ring_subgraph(NodeId n, int f) {
  Graph g = shapes::cycle(n);
  Matrix x = Matrix::Zero(n, f);
  for (NodeId v = 0; v < n; ++v) x(v, v % f) = 1.0;
  g = g.with_features(x);
  std::vector<NodeId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  return induced_subgraph(g, all);
}

HiddenGraph random_hidden(int s, int f, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HiddenGraph hg{Matrix(s, s), Matrix(s, f)};
  for (Eigen::Index i = 0; i < hg.weights.size(); ++i) hg.weights.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < hg.features.size(); ++i) hg.features.data()[i] = u(rng);
  return hg;
}

// Args: subgraph nodes, walk length P.
void BM_HiddenKernelForward(benchmark::State& state) {
  const auto sub = ring_subgraph(static_cast<NodeId>(state.range(0)), 7);
  const auto hg = random_hidden(6, 7, 1);
  const int p = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(rwk_hidden(sub, hg, p));
}
BENCHMARK(BM_HiddenKernelForward)->ArgsProduct({{8, 16, 32, 64}, {1, 3, 5}});

void BM_HiddenKernelBackward(benchmark::State& state) {
  const auto sub = ring_subgraph(static_cast<NodeId>(state.range(0)), 7);
  const auto hg = random_hidden(6, 7, 2);
  const int p = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(rwk_hidden_grad(sub, hg, p));
}
BENCHMARK(BM_HiddenKernelBackward)->ArgsProduct({{8, 16, 32, 64}, {1, 3, 5}});

void BM_DiscreteKernel(benchmark::State& state) {
  const Graph g = shapes::cycle(static_cast<NodeId>(state.range(0)));
  const Graph h = shapes::complete(5);
  KernelConfig cfg;
  cfg.max_step = 4;
  cfg.step_mode = StepMode::sum_over_p;
  for (auto _ : state) benchmark::DoNotOptimize(rwk_discrete(g, h, cfg));
}
BENCHMARK(BM_DiscreteKernel)->Arg(8)->Arg(16)->Arg(32);

}  // namespace
