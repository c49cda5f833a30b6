#include <benchmark/benchmark.h>

#include "nlsal/network.hpp"
#include "nlsal/nonlocal.hpp"
#include "nlsal/ops.hpp"
#include "nlsal/random.hpp"
#include "nlsal/synth.hpp"
#include "nlsal/training.hpp"

namespace {

using namespace nlsal;

// 3x3 same conv, size x size x 32 -> 32.
void BM_Conv2d(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Rng rng(1);
  const Tensor x = random_uniform({1, size, size, 32}, rng, -1.0, 1.0);
  const Tensor k = random_uniform({3, 3, 32, 32}, rng, -0.1, 0.1);
  for (auto _ : state) {
    Tape tape;
    const Var y = conv2d(tape.constant(x), tape.constant(k), 1, Padding::kSame);
    benchmark::DoNotOptimize(tape.value(y).data().data());
  }
  state.SetItemsProcessed(state.iterations() * size * size * 9 * 32 * 32);
}
BENCHMARK(BM_Conv2d)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Rng rng(2);
  const Tensor x = random_uniform({1, size, size, 32}, rng, -1.0, 1.0);
  Tensor k = random_uniform({3, 3, 32, 32}, rng, -0.1, 0.1);
  for (auto _ : state) {
    Tape tape;
    tape.backward(sum(conv2d(tape.constant(x), tape.parameter(k), 1, Padding::kSame)));
    benchmark::DoNotOptimize(k.grad().data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

// Quadratic in the number of positions.
void BM_NonLocalBlock(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Rng rng(3);
  const NonLocalParams p = NonLocalParams::random(64, 32, rng);
  const Tensor x = random_uniform({1, size, size, 64}, rng, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(nl_block(x, p).data().data());
  state.SetComplexityN(static_cast<benchmark::IterationCount>(size) * size);
}
BENCHMARK(BM_NonLocalBlock)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNSquared);

void BM_StaticForward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Network net = build_static_net(NetworkSpec::static_default(), 1);
  Rng rng(4);
  const Tensor x = random_uniform({1, size, size, 3}, rng, 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(x).data().data());
}
BENCHMARK(BM_StaticForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainIteration(benchmark::State& state) {
  SynthSpec spec;
  spec.frames = 1;
  const auto samples = static_samples(synth_dataset(spec));
  Network net = build_static_net(NetworkSpec::static_default(), 1);
  TrainConfig cfg;
  cfg.iterations = 1;
  for (auto _ : state) train_stage(net, samples, cfg);
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
