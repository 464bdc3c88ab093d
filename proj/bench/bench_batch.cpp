// Serial reference against the OpenMP path for the two per-batch kernels.
#include <benchmark/benchmark.h>

#include "decompnet/batch.hpp"
#include "decompnet/branch.hpp"
#include "decompnet/data_io.hpp"

using namespace decompnet;

namespace {

struct Fixture {
  DecomposerModel model;
  LowRankData data;
  Batch batch;
  std::vector<SigmaVector> sigmas;

  Fixture(BranchKind kind, std::size_t batch_size) : data(synth_lowrank(256, batch_size, 5, 0.05, 1)) {
    ModelConfig c;
    c.n_branches = 5;
    c.branch.kind = kind;
    c.branch.layer_widths = {64, 16};
    c.sweeps = 3;
    c.damping = 0.8;
    c.lambda_s = 0.001;
    c.lambda_perp = 0.001;
    model = init_model(c, 256);
    for (const auto& s : data.dataset.samples) batch.emplace_back(s.x);
    sigmas.assign(batch_size, SigmaVector(5, 1.0));
  }
};

BranchKind kind_of(std::int64_t k) { return k == 0 ? BranchKind::Rank1Tied : BranchKind::MlpAE; }

void BM_Gradient(benchmark::State& state, Execution exec) {
  Fixture f(kind_of(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss_gradient(f.model, f.batch, f.sigmas, exec));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_Sigma(benchmark::State& state, Execution exec) {
  Fixture f(kind_of(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_estimate_sigma(f.model, f.batch, f.sigmas, exec));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

// range(0): 0 rank-1 tied, 1 MLP; range(1): batch size
#define ARGS ->ArgsProduct({{0, 1}, {32, 128}})->Unit(benchmark::kMillisecond)->UseRealTime()
BENCHMARK_CAPTURE(BM_Gradient, serial, Execution::Serial) ARGS;
BENCHMARK_CAPTURE(BM_Gradient, parallel, Execution::Parallel) ARGS;
BENCHMARK_CAPTURE(BM_Sigma, serial, Execution::Serial) ARGS;
BENCHMARK_CAPTURE(BM_Sigma, parallel, Execution::Parallel) ARGS;

}  // namespace

BENCHMARK_MAIN();
