#pragma once

#include <filesystem>

#include "bindiar/signal.hpp"

namespace bindiar {

enum class WavFormat { pcm16, float32 };

inline constexpr int kAnalysisSampleRate = 16000;

/// Reads a two-channel WAV file (16-bit PCM or 32-bit float). PCM samples are
/// scaled to [-1, 1).
AudioClip read_wav(const std::filesystem::path& path);

/// Reads a stereo WAV and brings it to `target_rate` by keeping every m-th
/// sample when the file rate is an integer multiple m of the target. Any
/// other rate is rejected.
AudioClip read_wav_resampled(const std::filesystem::path& path, int target_rate = kAnalysisSampleRate);

/// Nearest-neighbour decimation by an integer factor; throws otherwise.
AudioClip decimate_to(const AudioClip& clip, int target_rate);

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavFormat format = WavFormat::float32);

}  // namespace bindiar
