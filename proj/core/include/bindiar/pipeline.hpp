#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "bindiar/alignment.hpp"
#include "bindiar/association.hpp"
#include "bindiar/der.hpp"
#include "bindiar/filter.hpp"
#include "bindiar/signal.hpp"

namespace bindiar {

struct DiarizeConfig {
  StftParams stft;
  int slice_frames = 25;  // STFT frames per video-rate slice
  double fps = 25.0;
  double beta = kDefaultBeta;
  FilterConfig filter;
  EmConfig em;
  /// Worker threads for the per-slice mixture fits; 0 picks the hardware count.
  /// The result does not depend on this value.
  unsigned threads = 0;
  /// When set, per-slice fits, the activity mask and the noise floor are dumped here.
  std::optional<std::filesystem::path> debug_dir;
};

struct PipelineResult {
  DiarTimeline timeline;
  std::vector<Observation> observations;
  std::vector<FilterStep> steps;
  NoiseStats noise;
  int persons = 0;

  /// Per-frame speaking marginals, frames x persons.
  std::vector<std::vector<double>> marginals() const;
};

/// First STFT frame of the slice centred on video frame t.
Eigen::Index slice_start(int t, Eigen::Index total_frames, int sample_rate, const DiarizeConfig& config);

/// Runs masking, per-slice mixture fits and the speaking-state filter over a
/// recording. Noise statistics come from `noise` when given, otherwise from
/// the recording itself. One output frame per entry of `tracks`.
PipelineResult diarize(const AudioClip& audio, const TrackSequence& tracks, const TrainingSet& ts,
                       const DiarizeConfig& config = {}, const std::optional<AudioClip>& noise = std::nullopt);

inline DiarTimeline diarize_pipeline(const AudioClip& audio, const TrackSequence& tracks, const TrainingSet& ts,
                                     const DiarizeConfig& config = {}) {
  return diarize(audio, tracks, ts, config).timeline;
}

}  // namespace bindiar
