#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "bindiar/types.hpp"

namespace bindiar {

/// Two-channel time-domain recording.
struct AudioClip {
  std::vector<double> left;
  std::vector<double> right;
  int sample_rate = 16000;

  std::size_t size() const { return left.size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(left.size()) / sample_rate : 0.0;
  }

  /// Throws Error when the channels differ in length or the rate is not positive.
  void validate() const;
};

/// One-sided STFT of a single channel. Row f holds bin f+1 of the DFT; the DC
/// bin is dropped, so the last row is the Nyquist bin.
struct Spectrogram {
  ComplexMatrix coefficients;
  double freq_bin_hz = 0.0;
  double hop_s = 0.0;
  double frame_len_s = 0.0;

  Eigen::Index bins() const { return coefficients.rows(); }
  Eigen::Index frames() const { return coefficients.cols(); }

  /// Frames [first, first + count).
  Spectrogram frames_slice(Eigen::Index first, Eigen::Index count) const;
};

struct StftParams {
  int window_len = 512;  // 32 ms at 16 kHz
  int hop = 256;         // 16 ms at 16 kHz
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

/// Centre frequency in Hz of each one-sided bin kept by stft().
RealVector bin_frequencies(int sample_rate, int window_len);

Spectrogram stft_channel(std::span<const double> samples, int sample_rate, int window_len, int hop);

/// Left and right spectrograms of a clip with F = window_len/2 bins and
/// K = 1 + (len - window_len)/hop non-centred frames.
std::pair<Spectrogram, Spectrogram> stft(const AudioClip& clip, int window_len, int hop);
inline std::pair<Spectrogram, Spectrogram> stft(const AudioClip& clip, StftParams p = {}) {
  return stft(clip, p.window_len, p.hop);
}

inline constexpr double kDefaultBeta = 3.0;
/// Lower bound applied to the activity threshold so that silent calibration
/// input does not yield an all-pass mask.
inline constexpr double kMinThreshold = 1e-12;

/// Per-frequency noise floor and the activity threshold derived from it.
struct NoiseStats {
  RealVector per_freq_floor;
  double threshold_factor = kDefaultBeta;
  RealVector threshold_a;

  Eigen::Index bins() const { return per_freq_floor.size(); }
};

/// floor[f] = median over all frames of all clips of max(|L|^2, |R|^2);
/// threshold_a = beta * floor.
NoiseStats estimate_noise_stats(std::span<const AudioClip> noise_clips, double beta = kDefaultBeta,
                                StftParams params = {});

/// Same statistic computed on spectrogram pairs that are already available.
NoiseStats noise_stats_from_spectrograms(std::span<const std::pair<Spectrogram, Spectrogram>> noise,
                                         double beta = kDefaultBeta);

/// mask[f,k] = 0 iff max(|L|^2, |R|^2) < max(threshold_a[f], min_threshold).
Mask activity_mask(const Spectrogram& left, const Spectrogram& right, const NoiseStats& stats,
                   double min_threshold = kMinThreshold);

/// Frame-averaged binaural feature Phi_LR / Phi_RR. Bins whose auto-PSD is
/// degenerate are flagged invalid and hold zero.
struct StaticFeature {
  ComplexVector values;
  std::vector<std::uint8_t> valid;
  RealVector auto_psd_left;
  RealVector auto_psd_right;

  bool all_valid() const;
};

StaticFeature binaural_feature_static(const Spectrogram& left, const Spectrogram& right);

/// Per-bin binaural coefficients and the activity mask they were computed with.
struct BinauralSpectrogram {
  ComplexMatrix Y;
  Mask mask;
  int time_index = 0;

  Eigen::Index bins() const { return Y.rows(); }
  Eigen::Index frames() const { return Y.cols(); }
  long active_count() const;
};

/// Y[f,k] = L conj(R) / |R|^2 where mask = 1, zero elsewhere. A masked-in bin
/// with degenerate |R|^2 is forced to mask 0.
BinauralSpectrogram binaural_spectrogram(const Spectrogram& left, const Spectrogram& right,
                                         const Mask& mask, int time_index = 0);

/// Debug dumps: one row per frequency bin, complex values as "re+imi".
void write_spectrogram_csv(const std::filesystem::path& path, const ComplexMatrix& values);
void write_mask_csv(const std::filesystem::path& path, const Mask& mask);

}  // namespace bindiar
