#include "bindiar/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace bindiar {

std::vector<std::vector<double>> PipelineResult::marginals() const {
  std::vector<std::vector<double>> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.marginals);
  return out;
}

Eigen::Index slice_start(int t, Eigen::Index total_frames, int sample_rate, const DiarizeConfig& config) {
  const double centre = (t + 0.5) / config.fps * sample_rate;
  const double first = (centre - config.stft.window_len / 2.0) / config.stft.hop - (config.slice_frames - 1) / 2.0;
  const auto k0 = static_cast<Eigen::Index>(std::llround(first));
  return std::clamp<Eigen::Index>(k0, 0, std::max<Eigen::Index>(0, total_frames - config.slice_frames));
}

namespace {

void write_noise_csv(const std::filesystem::path& path, const NoiseStats& stats) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "f,floor,threshold\n";
  out.precision(9);
  for (Eigen::Index f = 0; f < stats.bins(); ++f) {
    out << f << ',' << stats.per_freq_floor[f] << ',' << stats.threshold_a[f] << '\n';
  }
}

std::filesystem::path slice_path(const std::filesystem::path& dir, int t) {
  char name[32];
  std::snprintf(name, sizeof name, "slice_%05d.json", t);
  return dir / name;
}

}  // namespace

PipelineResult diarize(const AudioClip& audio, const TrackSequence& tracks, const TrainingSet& ts,
                       const DiarizeConfig& config, const std::optional<AudioClip>& noise) {
  audio.validate();
  config.filter.validate();
  if (config.slice_frames <= 0) throw Error("diarize: slice length must be positive");
  if (!(config.fps > 0.0)) throw Error("diarize: fps must be positive");

  PipelineResult result;
  result.timeline.frame_period_s = 1.0 / config.fps;
  if (audio.size() == 0 || tracks.empty()) return result;

  const int persons = tracks.front().persons();
  for (const auto& tr : tracks) {
    if (tr.persons() != persons) throw Error("diarize: every track frame must list the same persons");
  }
  result.persons = persons;

  const auto [left, right] = stft(audio, config.stft);
  if (noise) {
    result.noise = estimate_noise_stats(std::span<const AudioClip>(&*noise, 1), config.beta, config.stft);
  } else {
    const std::pair<Spectrogram, Spectrogram> own{left, right};
    result.noise = noise_stats_from_spectrograms(std::span(&own, 1), config.beta);
  }
  const Mask mask = activity_mask(left, right, result.noise);
  const BinauralSpectrogram full = binaural_spectrogram(left, right, mask);
  if (ts.bins() != full.bins()) {
    throw Error("diarize: training set has " + std::to_string(ts.bins()) + " bins, analysis produces " +
                std::to_string(full.bins()));
  }

  if (config.debug_dir) {
    std::filesystem::create_directories(*config.debug_dir);
    write_noise_csv(*config.debug_dir / "noise.csv", result.noise);
    write_mask_csv(*config.debug_dir / "mask.csv", full.mask);
    write_spectrogram_csv(*config.debug_dir / "binaural.csv", full.Y);
  }

  const auto frames = static_cast<int>(tracks.size());
  const Eigen::Index width = std::min<Eigen::Index>(config.slice_frames, full.frames());
  result.observations.resize(static_cast<std::size_t>(frames));

  // Slices are independent, so they are fitted in parallel; each writes only
  // its own observation, which keeps the output independent of scheduling.
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const int t = next.fetch_add(1);
      if (t >= frames) return;
      try {
        const auto& track = tracks[static_cast<std::size_t>(t)];
        const Eigen::Index k0 = slice_start(t, full.frames(), audio.sample_rate, config);
        BinauralSpectrogram slice;
        slice.Y = full.Y.middleCols(k0, width);
        slice.mask = full.mask.middleCols(k0, width);
        slice.time_index = t;
        const SliceFit fit = fit_freq_mixtures(slice, ts, track, config.em);
        const auto speak = speaking_probabilities(fit.resp, slice.mask);

        Observation& obs = result.observations[static_cast<std::size_t>(t)];
        obs.visible = track.visibility;
        obs.p_speak.assign(static_cast<std::size_t>(persons), 0.5);
        for (std::size_t i = 0; i < fit.person_ids.size(); ++i) {
          obs.p_speak[static_cast<std::size_t>(fit.person_ids[i])] = speak[i];
        }
        if (config.debug_dir) write_slice_debug_json(slice_path(*config.debug_dir, t), fit, speak);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(frames);
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(frames));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  result.steps = run_filter(result.observations, config.filter);
  std::vector<StateConfig> states;
  states.reserve(result.steps.size());
  for (const auto& s : result.steps) states.push_back(s.map);
  result.timeline = DiarTimeline::from_bitmasks(states, 1.0 / config.fps);
  return result;
}

}  // namespace bindiar
