// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "drise/engine.hpp"
#include "drise/masking.hpp"
#include "drise/metrics.hpp"
#include "drise/similarity.hpp"
#include "drise/synthetic.hpp"

namespace {

using namespace drise;

void BM_MaskGeneration(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  MaskSpec spec;
  spec.count = 1u << 20;
  const MaskGenerator gen(spec, size, size);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gen[i++ % spec.count]);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MaskGeneration)->Arg(64)->Arg(224)->Arg(512);

void BM_ApplyMask(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Image image = make_background(1, size, size);
  const Mask mask = MaskGenerator(MaskSpec{}, size, size)[0];
  for (auto _ : state) benchmark::DoNotOptimize(apply_mask(image, mask));
}
BENCHMARK(BM_ApplyMask)->Arg(64)->Arg(512);

std::vector<DetectionVector> random_proposals(std::size_t n, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DetectionVector> out(n);
  for (DetectionVector& d : out) {
    const double x = u(rng) * 400, y = u(rng) * 400;
    d.bbox = {x, y, x + 1 + u(rng) * 100, y + 1 + u(rng) * 100};
    d.objectness = u(rng);
    d.scores.resize(classes);
    for (double& s : d.scores) s = u(rng);
  }
  return out;
}

void BM_MaxSimilarity(benchmark::State& state) {
  const auto proposals = random_proposals(static_cast<std::size_t>(state.range(0)), 80, 1);
  const DetectionVector target = random_proposals(1, 80, 2)[0];
  for (auto _ : state) benchmark::DoNotOptimize(max_similarity(target, proposals, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MaxSimilarity)->Arg(10)->Arg(100)->Arg(1000);

void BM_Accumulate(benchmark::State& state) {
  MaskSpec spec;
  spec.count = static_cast<std::size_t>(state.range(0));
  const MaskGenerator gen(spec, 64, 64);
  WeightMatrix weights(1, spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) weights.at(0, i) = static_cast<double>(i % 7) / 7.0;
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_saliency(gen, weights, Normalization::kExposure));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Accumulate)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ExplainSynthetic(benchmark::State& state) {
  const RectangleFixture fx = make_rectangle_fixture(5);
  ExplainRequest req;
  req.image = fx.image;
  req.targets = {TargetDetection{fx.box, fx.class_index, 3}};
  req.mask_spec.count = 1000;
  req.parallelism = static_cast<std::size_t>(state.range(0));
  const DetectorPool pool = DetectorPool::shared(std::make_shared<RectangleDetector>(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(explain(req, pool));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ExplainSynthetic)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
