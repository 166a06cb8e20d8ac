#include "frh/backend.hpp"
#include "frh/concepts.hpp"
#include "frh/decode.hpp"
#include "frh/frame.hpp"
#include "frh/random.hpp"
#include "frh/token_space.hpp"

#include <benchmark/benchmark.h>

using namespace frh;

namespace {

Metric bench_metric(Rng& rng, Index d) {
  const Matrix g = rng.gaussian_matrix(d, d);
  return Metric(g * g.transpose() / static_cast<double>(d) + Matrix::Identity(d, d));
}

void BM_ClosestFrame(benchmark::State& state) {
  const auto d = static_cast<Index>(state.range(0));
  const auto k = static_cast<Index>(state.range(1));
  Rng rng(1);
  const Metric m = bench_metric(rng, d);
  const Matrix x = rng.gaussian_matrix(d, k);
  for (auto _ : state) benchmark::DoNotOptimize(closest_frame(x, m).objective);
}
BENCHMARK(BM_ClosestFrame)->Args({64, 4})->Args({256, 4})->Args({1024, 4})->Args({1024, 16});

void BM_FrameCorrelation(benchmark::State& state) {
  const auto d = static_cast<Index>(state.range(0));
  Rng rng(2);
  const Metric m = bench_metric(rng, d);
  const Frame a(rng.gaussian_matrix(d, 4));
  const Frame b(rng.gaussian_matrix(d, 3));
  for (auto _ : state) benchmark::DoNotOptimize(frame_correlation(m, a, b));
}
BENCHMARK(BM_FrameCorrelation)->Arg(64)->Arg(256)->Arg(1024);

void BM_Whitening(benchmark::State& state) {
  const auto d = static_cast<Index>(state.range(0));
  Rng rng(3);
  const Matrix wu = rng.gaussian_matrix(4 * d, d);
  for (auto _ : state) benchmark::DoNotOptimize(compute_whitening(wu).matrix().data());
}
BENCHMARK(BM_Whitening)->Arg(64)->Arg(256);

void BM_ConceptFrame(benchmark::State& state) {
  const auto n_words = static_cast<int>(state.range(0));
  Rng rng(4);
  const UnembeddingSpace space(rng.gaussian_matrix(500, 64));
  WordSet ws;
  ws.synset_id = "bench.n.01";
  for (int w = 0; w < n_words; ++w) {
    TokenIds ids;
    for (int t = 0; t < 1 + w % 4; ++t) ids.push_back(static_cast<TokenId>(rng.below(500)));
    ws.words.push_back(Word{"eng", "w" + std::to_string(w), ids, word_frame(space, ids)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(concept_frame(space, ws).objective);
}
BENCHMARK(BM_ConceptFrame)->Arg(4)->Arg(32);

void BM_GuidedStep(benchmark::State& state) {
  const auto k = static_cast<int>(state.range(0));
  ToyBackend toy(5, 64, 500);
  const UnembeddingSpace space(toy.unembedding());
  Rng rng(6);
  ConceptFrame target;
  target.frame = Frame(rng.orthonormal_frame(64, 3));
  target.effective_rank = 3;
  TokenIds prefix = {0};
  for (int i = 0; i < 15; ++i) prefix.push_back(static_cast<TokenId>(rng.below(500)));
  for (auto _ : state) benchmark::DoNotOptimize(guided_step(toy, target, prefix, k, space.metric()).chosen);
}
BENCHMARK(BM_GuidedStep)->Arg(1)->Arg(3)->Arg(8);

void BM_ToyFeatures(benchmark::State& state) {
  ToyBackend toy(7, 64, 500);
  TokenIds ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<TokenId>(i % 500);
  for (auto _ : state) benchmark::DoNotOptimize(toy.features(ids).data());
}
BENCHMARK(BM_ToyFeatures)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
