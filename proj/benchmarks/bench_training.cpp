#include <benchmark/benchmark.h>

#include <numeric>

#include "mose/data_io.hpp"
#include "mose/nn.hpp"
#include "mose/trainer.hpp"

using namespace mose;

namespace {

const PreparedDataset& cycle_data() {
  static const PreparedDataset data = [] {
    WalkConfig w;
    w.walk_length = 3;
    w.walks_per_node = 10;
    return prepare_dataset(gen_graph_cycle(32, 7), w);
  }();
  return data;
}

// Args: max step P, hidden graphs per expert N. One step = loss, gradient and
// Adam update over 32 graphs.
void BM_TrainingStep(benchmark::State& state) {
  const auto& data = cycle_data();
  ModelConfig cfg;
  cfg.feature_dim = data.feature_dim;
  cfg.class_count = data.class_count;
  cfg.kernel.max_step = static_cast<int>(state.range(0));
  cfg.hidden_graphs = static_cast<int>(state.range(1));
  MoseModel model(cfg, 11);
  Adam adam(model.params().size(), {});
  std::vector<int> batch(data.item_count());
  std::iota(batch.begin(), batch.end(), 0);
  std::uint64_t epoch = 0;
  for (auto _ : state) {
    const BatchResult b = batch_loss(model, data, batch, {true, 11, epoch++, 0}, 0.1, true, 1);
    adam.step(model.params().values(), b.grads);
  }
}
BENCHMARK(BM_TrainingStep)->ArgsProduct({{1, 3, 5}, {4, 8, 16}})->Unit(benchmark::kMillisecond);

}  // namespace
