#include <benchmark/benchmark.h>

#include <random>

#include "bindiar/association.hpp"
#include "bindiar/filter.hpp"
#include "bindiar/signal.hpp"
#include "bindiar/simulator.hpp"

using namespace bindiar;

namespace {

std::vector<Observation> random_observations(int persons, int frames) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Observation> obs(static_cast<std::size_t>(frames));
  for (auto& o : obs) {
    for (int n = 0; n < persons; ++n) {
      o.p_speak.push_back(u(rng));
      o.visible.push_back(u(rng) < 0.9);
    }
  }
  return obs;
}

void BM_Filter(benchmark::State& state) {
  const auto obs = random_observations(static_cast<int>(state.range(0)), 1000);
  for (auto _ : state) benchmark::DoNotOptimize(run_filter(obs));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Filter)->DenseRange(2, 8, 2)->Unit(benchmark::kMillisecond);

void BM_Stft(benchmark::State& state) {
  AudioClip clip;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < 16000 * 10; ++i) {
    clip.left.push_back(g(rng));
    clip.right.push_back(g(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(stft(clip));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

// One 25-frame slice with two visible persons.
void BM_SliceFit(benchmark::State& state) {
  Scene scene;
  scene.duration_s = 1.0;
  scene.noise_power = 1e-3;
  scene.persons.push_back({0, SourceKind::speech, {{0.0, {500.0, 600.0}}}, {{0.0, 1.0}}, {}, 1.0});
  scene.persons.push_back({1, SourceKind::speech, {{0.0, {1400.0, 600.0}}}, {{0.0, 1.0}}, {}, 1.0});
  const auto out = render_scene(scene);
  const auto ts = render_training_grid(GridRenderOptions{}).analytic_set();
  const auto [l, r] = stft(out.audio);
  const auto noise = render_noise_clip(scene, 2.0);
  const auto mask = activity_mask(l, r, estimate_noise_stats(std::span(&noise, 1)));
  auto bs = binaural_spectrogram(l, r, mask);
  bs.Y = bs.Y.leftCols(25).eval();
  bs.mask = bs.mask.leftCols(25).eval();
  for (auto _ : state) benchmark::DoNotOptimize(fit_freq_mixtures(bs, ts, out.truth.tracks[12]));
}
BENCHMARK(BM_SliceFit)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
