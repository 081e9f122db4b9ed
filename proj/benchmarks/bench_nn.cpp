#include <benchmark/benchmark.h>

#include "pat/nn/network.hpp"
#include "pat/parallel.hpp"

namespace {

using pat::nn::Tensor;

Tensor<float> random_image(std::size_t size) {
    Tensor<float> x(1, 1, size, size);
    pat::Rng rng(pat::Seed{3});
    for (float& v : x.values()) v = static_cast<float>(rng.uniform(0.0, 1.0));
    return x;
}

void BM_Conv(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    pat::nn::ConvParams<float> p(c, c, k);
    pat::Rng rng(pat::Seed{4});
    for (float& v : p.kernel) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    Tensor<float> x(1, c, 64, 64);
    for (float& v : x.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(pat::nn::conv2d_forward(x, p));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * k * k * 64 * 64));
}
BENCHMARK(BM_Conv)->Args({32, 3})->Args({64, 3})->Args({32, 7})->Unit(benchmark::kMillisecond);

void BM_Inference(benchmark::State& state, pat::nn::Architecture arch) {
    const auto size = static_cast<std::size_t>(state.range(0));
    pat::set_thread_count(1);
    const auto net = pat::nn::init_network<float>(arch, pat::Seed{5});
    const Tensor<float> x = random_image(size);
    for (auto _ : state) benchmark::DoNotOptimize(pat::nn::forward(net, x));
}
BENCHMARK_CAPTURE(BM_Inference, snet, pat::nn::Architecture::snet())->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Inference, unet, pat::nn::Architecture::unet())->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state, pat::nn::Architecture arch) {
    const auto net = pat::nn::init_network<float>(arch, pat::Seed{6});
    const Tensor<float> x = random_image(64);
    auto grad = pat::nn::make_network<float>(arch);
    pat::nn::Tape<float> tape;
    Tensor<float> dy;
    for (auto _ : state) {
        const auto y = pat::nn::forward_train(net, x, tape);
        pat::nn::l1_loss(y, x, &dy);
        pat::nn::backward<float>(net, tape, dy, grad, nullptr);
    }
}
BENCHMARK_CAPTURE(BM_TrainStep, snet, pat::nn::Architecture::snet())->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainStep, unet, pat::nn::Architecture::unet())->Unit(benchmark::kMillisecond);

}  // namespace
