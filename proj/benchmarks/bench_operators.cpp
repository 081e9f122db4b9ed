#include <benchmark/benchmark.h>

#include "pat/fbp.hpp"
#include "pat/phantom.hpp"
#include "pat/pipeline.hpp"
#include "pat/tvmin.hpp"
#include "pat/wave.hpp"

namespace {

pat::PipelineConfig config_for(std::size_t size) {
    pat::PipelineConfig c = size >= 128 ? pat::PipelineConfig::full() : pat::PipelineConfig::desk();
    c.width = c.height = size;
    return c;
}

void BM_Forward(benchmark::State& state) {
    const auto cfg = config_for(static_cast<std::size_t>(state.range(0)));
    const pat::GridImage x = pat::sample_phantom(pat::Seed{1}, cfg.grid(), {}).image;
    const pat::WaveOperator op(x, cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config());
    for (auto _ : state) benchmark::DoNotOptimize(op.forward(x));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Adjoint(benchmark::State& state) {
    const auto cfg = config_for(static_cast<std::size_t>(state.range(0)));
    const pat::GridImage x = pat::sample_phantom(pat::Seed{1}, cfg.grid(), {}).image;
    const pat::WaveOperator op(x, cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config());
    const pat::Sinogram y = op.forward(x);
    for (auto _ : state) benchmark::DoNotOptimize(op.adjoint(y));
}
BENCHMARK(BM_Adjoint)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_OperatorSetup(benchmark::State& state) {
    const auto cfg = config_for(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pat::WaveOperator(cfg.grid(), cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config()));
    }
}
BENCHMARK(BM_OperatorSetup)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Fbp(benchmark::State& state) {
    const auto cfg = config_for(static_cast<std::size_t>(state.range(0)));
    pat::Sinogram y(cfg.geometry(), cfg.samples, cfg.dt());
    pat::Rng rng(pat::Seed{2});
    for (double& v : y.values()) v = rng.uniform(-1.0, 1.0);
    const pat::FbpOperator op(cfg.grid(), cfg.geometry(), cfg.samples, cfg.dt());
    for (auto _ : state) benchmark::DoNotOptimize(op.apply(y));
}
BENCHMARK(BM_Fbp)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TvIteration(benchmark::State& state) {
    const auto cfg = config_for(64);
    const pat::GridImage x = pat::sample_phantom(pat::Seed{1}, cfg.grid(), {}).image;
    const pat::WaveOperator op(x, cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config());
    const pat::Sinogram y = op.forward(x);
    pat::TvConfig tv = cfg.tv_config();
    tv.iterations = 5;
    tv.opnorm = pat::estimate_opnorm(pat::stack(pat::wave_map(op), pat::gradient_map(x)), 20);
    for (auto _ : state) benchmark::DoNotOptimize(pat::tv_reconstruct(op, y, tv, x.zeros_like()));
}
BENCHMARK(BM_TvIteration)->Unit(benchmark::kMillisecond);

}  // namespace
