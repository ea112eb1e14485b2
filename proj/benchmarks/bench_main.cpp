#include <benchmark/benchmark.h>

#include <random>

#include "vortexscore/eval_harness.hpp"
#include "vortexscore/forward_sim.hpp"
#include "vortexscore/score_net.hpp"

using namespace vortexscore;

namespace {

const StrainConfig kAxi(FlowKind::Axisymmetric3D, 1.0, 1.0);

std::vector<TrainingPair> pairs_for(std::size_t n, int L) {
    return build_training_pairs(generate_batch(kAxi, TimeGrid(2.0, L), 1.0, n, 1));
}

void BM_StepForward(benchmark::State& state) {
    const TimeGrid g(2.0, 200);
    State x{54.6, 1.0};
    for (auto _ : state) {
        x = step_forward(kAxi, g, x, {0.1, -0.1});
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(BM_StepForward);

void BM_GenerateBatch(benchmark::State& state) {
    const TimeGrid g(2.0, 200);
    for (auto _ : state) benchmark::DoNotOptimize(generate_batch(kAxi, g, 1.0, state.range(0), 7));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 199);
}
BENCHMARK(BM_GenerateBatch)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_NetForward(benchmark::State& state) {
    const TimeGrid g(2.0, 100);
    const auto pairs = pairs_for(20, 100);
    const ScoreModel m = ScoreModel::initialize(Architecture{}, g, NormStats::from_pairs(pairs), 1);
    const auto batch = std::span<const TrainingPair>(pairs).first(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(predict(m, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NetForward)->Arg(1)->Arg(1024);

void BM_LossGradient(benchmark::State& state) {
    const TimeGrid g(2.0, 100);
    const auto pairs = pairs_for(20, 100);
    const ScoreModel m = ScoreModel::initialize(Architecture{}, g, NormStats::from_pairs(pairs), 1);
    const auto batch = std::span<const TrainingPair>(pairs).first(1024);
    for (auto _ : state) benchmark::DoNotOptimize(loss_gradient(m, batch));
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_LossGradient)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
    const TimeGrid g(2.0, 100);
    const auto tr = pairs_for(400, 100), va = pairs_for(100, 100);
    const ScoreModel init = ScoreModel::initialize(Architecture{}, g, NormStats::from_pairs(tr), 1);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train(tr, va, cfg, init));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tr.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
