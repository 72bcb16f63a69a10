#include <vector>

#include <benchmark/benchmark.h>

#include "motionmix/kernels.hpp"
#include "motionmix/rng.hpp"
#include "motionmix/sampling.hpp"

using namespace motionmix;

namespace {

// The default experiment model: 32 frames x 4 channels, width 128, 2 blocks.
DenoiserParams bench_model() {
  DenoiserConfig cfg;
  return init_denoiser(cfg, 1);
}

std::vector<BatchItem> bench_batch(const DenoiserConfig& cfg, int size) {
  Rng rng = make_rng(2);
  std::vector<BatchItem> batch(size);
  for (auto& item : batch) {
    item.x_t = MotionSequence(cfg.frames, cfg.dim);
    item.target = MotionSequence(cfg.frames, cfg.dim);
    fill_standard_normal(rng, item.x_t.values());
    fill_standard_normal(rng, item.target.values());
    item.t = uniform_int(rng, 1, cfg.diffusion_steps);
    const int k = uniform_int(rng, -1, cfg.num_classes - 1);
    item.condition = k < 0 ? Condition::null() : Condition::class_id(k);
  }
  return batch;
}

void BM_LossAndGrad_Reference(benchmark::State& state) {
  const auto params = bench_model();
  const auto batch = bench_batch(params.config, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::loss_and_grad(params, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LossAndGrad_Fused(benchmark::State& state) {
  const auto params = bench_model();
  const auto batch = bench_batch(params.config, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(params, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Forward_Reference(benchmark::State& state) {
  const auto params = bench_model();
  const auto batch = bench_batch(params.config, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::denoise_forward(params, batch[0].x_t, batch[0].t, batch[0].condition));
}

void BM_Forward_Fused(benchmark::State& state) {
  const auto params = bench_model();
  const auto batch = bench_batch(params.config, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(denoise_forward(params, batch[0].x_t, batch[0].t, batch[0].condition));
}

std::vector<Condition> bench_conditions(int n) {
  std::vector<Condition> out;
  for (int i = 0; i < n; ++i) out.push_back(Condition::class_id(i % 6));
  return out;
}

void BM_SampleMany_Serial(benchmark::State& state) {
  const auto params = bench_model();
  const auto sched = NoiseSchedule::scaled_linear(100);
  const auto conds = bench_conditions(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_many_serial(params, sched, conds, SamplerConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SampleMany_Parallel(benchmark::State& state) {
  const auto params = bench_model();
  const auto sched = NoiseSchedule::scaled_linear(100);
  const auto conds = bench_conditions(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_many(params, sched, conds, SamplerConfig{}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LossAndGrad_Reference)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossAndGrad_Fused)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward_Reference)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Forward_Fused)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SampleMany_Serial)->Arg(24)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleMany_Parallel)->Arg(24)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
