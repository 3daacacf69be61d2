#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bindiar/filter.hpp"

namespace bindiar {

/// Speaking person ids per video frame.
struct DiarTimeline {
  std::vector<std::vector<int>> frames;
  double frame_period_s = 0.04;

  std::size_t size() const { return frames.size(); }
  double duration_s() const { return static_cast<double>(frames.size()) * frame_period_s; }
  void validate() const;

  static DiarTimeline from_bitmasks(std::span<const StateConfig> states, double frame_period_s);
  /// labels[t][n] != 0 marks person n as speaking at frame t.
  static DiarTimeline from_labels(const std::vector<std::vector<std::uint8_t>>& labels, double frame_period_s);
};

enum class SpeakerMapping { identity, optimal };

struct DerReport {
  double false_alarm_s = 0.0;
  double miss_s = 0.0;
  double speaker_error_s = 0.0;
  double scored_speech_s = 0.0;
  /// Errors over scored speech; 0 when nothing is scored and nothing is wrong,
  /// +inf when errors occur without any scored speech.
  double der = 0.0;
  long scored_frames = 0;

  double errors_s() const { return false_alarm_s + miss_s + speaker_error_s; }
};

/// Frame-level diarization error. Frames whose centre lies strictly within
/// collar_s of a change in the reference speaker set (file edges included,
/// with silence outside the file) are not scored. Each simultaneous speaker
/// counts separately. A shorter timeline is padded with silent frames.
DerReport score_der(const DiarTimeline& reference, const DiarTimeline& hypothesis, double collar_s = 0.04,
                    SpeakerMapping mapping = SpeakerMapping::identity);

/// Hypothesis-to-reference id map maximizing the number of co-speaking
/// frames over the scored frames; unmatched ids map to -1.
std::vector<std::pair<int, int>> optimal_speaker_map(const DiarTimeline& reference, const DiarTimeline& hypothesis,
                                                     std::span<const std::uint8_t> scored);

/// Maximum-weight assignment on a square weight matrix; returns the column
/// chosen for each row.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight);

}  // namespace bindiar
