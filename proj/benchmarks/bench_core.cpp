#include <benchmark/benchmark.h>

#include <random>

#include "crof/adapter.hpp"
#include "crof/dataset.hpp"
#include "crof/label_weighting.hpp"
#include "crof/objective.hpp"
#include "crof/trainer.hpp"

namespace {

crof::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  crof::Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

void BM_ForwardSimilarities(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto p = crof::init_params(d, crof::AdapterConfig{});
  const auto x = random_matrix(32, d, 1);
  const auto text = crof::normalize_rows(random_matrix(100, d, 2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(crof::similarities(crof::forward(x, p), text, 0.01));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ForwardSimilarities)->Arg(64)->Arg(512);

void BM_Backward(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto p = crof::init_params(d, crof::AdapterConfig{});
  const auto x = random_matrix(32, d, 1);
  const auto text = crof::normalize_rows(random_matrix(100, d, 2));
  const auto g = random_matrix(32, 100, 3);
  for (auto _ : state) benchmark::DoNotOptimize(crof::backward(x, text, p, g, 0.01));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Backward)->Arg(64)->Arg(512);

void BM_WeighSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto z = random_matrix(1, n, 4);
  const crof::WeightingParams params;
  for (auto _ : state) {
    const auto wv = crof::weigh_sample(z.row(0), n / 2, 3, params);
    const auto so = crof::make_sample_objective(z.row(0), wv.candidates, wv.w_star);
    benchmark::DoNotOptimize(crof::logit_gradient(so));
  }
}
BENCHMARK(BM_WeighSample)->Arg(10)->Arg(100)->Arg(1000);

void BM_TrainEpoch(benchmark::State& state) {
  const auto synth = crof::generate_synthetic(20, 32, 10, 10, 0.4, 7);
  const auto noisy = crof::inject_noise(synth.dataset, {crof::NoiseKind::kSymmetric, 0.4, 1});
  crof::TrainConfig cfg;
  cfg.toggles = crof::Toggles::parse("ft+wt");
  cfg.adapter.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(crof::train(noisy, std::nullopt, synth.prototypes, cfg));
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
