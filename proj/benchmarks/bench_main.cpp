#include <random>

#include <benchmark/benchmark.h>

#include "gak/ctc_align.hpp"
#include "gak/grad_align.hpp"
#include "gak/saliency.hpp"
#include "gak/toy_aed.hpp"

namespace {

using namespace gak;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (double& v : m.row(r)) v = n(rng);
  return m;
}

LabelSequence labels_of(std::size_t n) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < n; ++i) tokens.push_back("t" + std::to_string(i % 7));
  return LabelSequence::from_tokens(tokens);
}

// S' = T/4 labels, so the trellis grows as T^2.
void BM_GradViterbi(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const Matrix scores = time_log_softmax(random_matrix(T / 4, T, 1));
  const LabelSequence labels = labels_of(T / 4);
  for (auto _ : state) benchmark::DoNotOptimize(viterbi_align(scores, labels, -4.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GradViterbi)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNSquared);

void BM_CtcViterbi(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  Matrix lp = random_matrix(T, 32, 2);
  for (std::size_t t = 0; t < T; ++t) {
    double z = 0.0;
    for (double v : lp.row(t)) z += std::exp(v);
    for (double& v : lp.row(t)) v -= std::log(z);
  }
  std::vector<std::string> tokens;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < T / 4; ++i) tokens.push_back("t"), ids.push_back(1 + i % 31);
  const LabelSequence labels(tokens, std::vector<bool>(tokens.size(), false), ids);
  for (auto _ : state) benchmark::DoNotOptimize(ctc_viterbi_align({lp, 60}, labels));
}
BENCHMARK(BM_CtcViterbi)->RangeMultiplier(4)->Range(64, 4096);

void BM_Saliency(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const std::size_t S = 20, D = 80;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Tensor3 grads(S, T, D);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t t = 0; t < T; ++t)
      for (double& v : grads.fiber(s, t)) v = n(rng);
  const GradientTensor g{std::move(grads), 10, "x"};
  for (auto _ : state) benchmark::DoNotOptimize(reduce_gradients(g));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * S * T * D * sizeof(double)));
}
BENCHMARK(BM_Saliency)->Arg(100)->Arg(1000);

void BM_ToyLossAndGradients(benchmark::State& state) {
  toy::ToyConfig cfg;
  cfg.frames = static_cast<std::size_t>(state.range(0));
  const toy::ToyParams params = toy::ToyParams::initial(cfg);
  const toy::ToyBatch batch = toy::gen_synthetic(cfg, 0);
  for (auto _ : state) benchmark::DoNotOptimize(toy::loss_and_gradients(params, batch, cfg));
}
BENCHMARK(BM_ToyLossAndGradients)->Arg(48)->Arg(200);

}  // namespace
BENCHMARK_MAIN();
