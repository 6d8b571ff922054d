#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "facecamo/face_pipeline.hpp"
#include "facecamo/optimizer.hpp"
#include "facecamo/pattern.hpp"
#include "facecamo/toy_model.hpp"

namespace facecamo {
namespace {

PatternParams sample_params(Family f) {
  PatternParams p;
  p.family = f;
  p.width_frac = 0.2;
  p.angle = 0.7;
  p.colors = {{40, 60, 30}, {200, 190, 150}};
  return p;
}

void BM_Rasterize(benchmark::State& state) {
  const PatternParams p = sample_params(static_cast<Family>(state.range(1)));
  const int size = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(p, size, size));
}
BENCHMARK(BM_Rasterize)->ArgsProduct({{112, 256}, {0, 1}});

void BM_RasterizeBackward(benchmark::State& state) {
  const PatternParams p = sample_params(Family::kStripes);
  const Image upstream(kCanonicalCanvas, kCanonicalCanvas, 3, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize_backward(p, upstream));
}
BENCHMARK(BM_RasterizeBackward);

Image textured_image() {
  Image img(kCanonicalCanvas, kCanonicalCanvas, 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = 0.5 + 0.4 * std::sin(0.11 * x * (c + 1) + 0.07 * y);
  return img;
}

FaceSample synthetic_sample() {
  FaceSample s;
  s.image = textured_image();
  s.mask = Image(kCanonicalCanvas, kCanonicalCanvas, 1, 1.0);
  return s;
}

void BM_Blend(benchmark::State& state) {
  const FaceSample s = synthetic_sample();
  const PatternImage pat = rasterize(sample_params(Family::kStripes), kCanonicalCanvas, kCanonicalCanvas);
  const BlendConfig cfg{};
  for (auto _ : state) benchmark::DoNotOptimize(blend(s, pat, cfg));
}
BENCHMARK(BM_Blend);

void BM_ToyEmbed(benchmark::State& state) {
  const ToyEmbeddingNet net(ToyArchitecture{}, PreprocessingProfile{}, 1);
  const Image img = textured_image();
  for (auto _ : state) benchmark::DoNotOptimize(net.embed(img));
}
BENCHMARK(BM_ToyEmbed);

void BM_ToyEmbedWithGradient(benchmark::State& state) {
  const ToyEmbeddingNet net(ToyArchitecture{}, PreprocessingProfile{}, 1);
  const Image img = textured_image();
  const Embedding e = net.embed(img);
  for (auto _ : state) benchmark::DoNotOptimize(net.embed_backward(img, e));
}
BENCHMARK(BM_ToyEmbedWithGradient);

// One whitebox optimizer iteration on a synthetic batch of `range(0)` probes.
void BM_WhiteboxStep(benchmark::State& state) {
  ModelHandle m;
  m.name = "bench";
  m.model = std::make_shared<ToyEmbeddingNet>(ToyArchitecture{}, PreprocessingProfile{}, 1);
  m.threshold = 0.5;
  std::vector<VerificationPair> pairs;
  for (int i = 0; i < state.range(0); ++i) {
    auto s = std::make_shared<FaceSample>(synthetic_sample());
    s->identity = "id" + std::to_string(i);
    s->image.at(i % kCanonicalCanvas, 0, 0) = 0.9;
    pairs.push_back({s, s, true});
  }
  const MatedScorer scorer(m, pairs);
  const AttackObjective obj(scorer, AttackSettings{}, Backend::kWhitebox);
  std::vector<std::size_t> batch(pairs.size());
  std::iota(batch.begin(), batch.end(), 0);
  const PatternParams p = sample_params(Family::kChevrons);
  for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(p, batch, true));
}
BENCHMARK(BM_WhiteboxStep)->Arg(8)->Arg(32);

}  // namespace
}  // namespace facecamo

BENCHMARK_MAIN();
