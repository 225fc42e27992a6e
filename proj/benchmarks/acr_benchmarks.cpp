#include <benchmark/benchmark.h>

#include <random>

#include "acr/kernel.hpp"
#include "acr/model.hpp"
#include "acr/optim.hpp"
#include "acr/pipeline.hpp"
#include "acr/rng.hpp"
#include "acr/ssl.hpp"
#include "acr/total_loss.hpp"

namespace {

acr::Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  acr::Tensor2 t(rows, cols);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

acr::Network default_network(std::size_t input_dim, std::size_t classes, std::uint64_t seed) {
  acr::Rng rng(seed);
  acr::Network net;
  const std::vector<std::size_t> dims = {input_dim, 64, 64, 32};
  net.extractor = acr::MlpExtractor::glorot(dims, rng);
  net.head = acr::LinearHead::glorot(32, classes, rng);
  return net;
}

void BM_Mmd2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const acr::Tensor2 v = random_tensor(n, 32, 1);
  const acr::Tensor2 u = random_tensor(n, 32, 2);
  const auto sigmas = acr::median_bandwidths(v, u);
  for (auto _ : state) benchmark::DoNotOptimize(acr::mmd2(v, u, sigmas));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Mmd2)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

void BM_Mmd2WithGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const acr::Tensor2 v = random_tensor(n, 32, 1);
  const acr::Tensor2 u = random_tensor(n, 32, 2);
  const auto sigmas = acr::median_bandwidths(v, u);
  for (auto _ : state) benchmark::DoNotOptimize(acr::mmd2_with_grad(v, u, sigmas));
}
BENCHMARK(BM_Mmd2WithGrad)->Arg(64)->Arg(128);

void BM_ForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const acr::Network net = default_network(16, 4, 3);
  const acr::Tensor2 x = random_tensor(batch, 16, 4);
  std::vector<int> y(batch);
  for (std::size_t i = 0; i < batch; ++i) y[i] = static_cast<int>(i % 4);
  for (auto _ : state) {
    const acr::ForwardTrace trace = acr::forward(net, x);
    const acr::LogitLoss ce = acr::cross_entropy_loss(trace.logits, y);
    acr::Network grads = net.zeros_like();
    acr::backward(net, trace, acr::Tensor2(), ce.grad_logits, grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

void BM_FineTuneEpoch(benchmark::State& state) {
  acr::ExperimentConfig cfg;
  cfg.method.akc = true;
  cfg.method.arc = true;
  cfg.optim.epochs = 1;
  cfg.pretrain.epochs = 1;
  const acr::TransferData data = acr::prepare_data(cfg);
  const acr::PretrainResult pre = acr::pretrain_source(data.source_train, data.source_test, cfg);
  acr::RunOptions options;
  options.pretrained = &pre;
  for (auto _ : state) benchmark::DoNotOptimize(acr::run_pipeline(cfg, data, options));
}
BENCHMARK(BM_FineTuneEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
