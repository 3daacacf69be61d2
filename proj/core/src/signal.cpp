#include "bindiar/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "bindiar/fft.hpp"

namespace bindiar {

void AudioClip::validate() const {
  if (sample_rate <= 0) throw Error("audio clip: sample rate must be positive");
  if (left.size() != right.size()) {
    throw Error("audio clip: channel lengths differ (" + std::to_string(left.size()) + " vs " +
                std::to_string(right.size()) + ")");
  }
}

Spectrogram Spectrogram::frames_slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > frames()) {
    throw Error("spectrogram slice out of range");
  }
  Spectrogram out;
  out.coefficients = coefficients.middleCols(first, count);
  out.freq_bin_hz = freq_bin_hz;
  out.hop_s = hop_s;
  out.frame_len_s = frame_len_s;
  return out;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

RealVector bin_frequencies(int sample_rate, int window_len) {
  const int bins = window_len / 2;
  RealVector f(bins);
  for (int i = 0; i < bins; ++i) f[i] = static_cast<double>(i + 1) * sample_rate / window_len;
  return f;
}

Spectrogram stft_channel(std::span<const double> samples, int sample_rate, int window_len, int hop) {
  if (window_len < 2 || window_len % 2 != 0) throw Error("stft: window length must be even and >= 2");
  if (hop <= 0 || hop > window_len) throw Error("stft: hop must be in [1, window_len]");
  if (sample_rate <= 0) throw Error("stft: sample rate must be positive");
  if (samples.size() < static_cast<std::size_t>(window_len)) {
    throw Error("stft: clip of " + std::to_string(samples.size()) +
                " samples is shorter than one window of " + std::to_string(window_len));
  }

  const int bins = window_len / 2;
  const auto frames = static_cast<Eigen::Index>(1 + (samples.size() - window_len) / hop);
  const auto window = hann_window(window_len);

  Spectrogram out;
  out.coefficients.resize(bins, frames);
  out.freq_bin_hz = static_cast<double>(sample_rate) / window_len;
  out.hop_s = static_cast<double>(hop) / sample_rate;
  out.frame_len_s = static_cast<double>(window_len) / sample_rate;

  RealFft fft(window_len);
  std::vector<double> frame(static_cast<std::size_t>(window_len));
  for (Eigen::Index k = 0; k < frames; ++k) {
    const auto start = static_cast<std::size_t>(k) * static_cast<std::size_t>(hop);
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = samples[start + i] * window[i];
    const auto spec = fft.forward(frame);
    for (int f = 0; f < bins; ++f) out.coefficients(f, k) = spec[static_cast<std::size_t>(f + 1)];
  }
  return out;
}

std::pair<Spectrogram, Spectrogram> stft(const AudioClip& clip, int window_len, int hop) {
  clip.validate();
  return {stft_channel(clip.left, clip.sample_rate, window_len, hop),
          stft_channel(clip.right, clip.sample_rate, window_len, hop)};
}

namespace {

double median_of(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

NoiseStats noise_stats_from_spectrograms(std::span<const std::pair<Spectrogram, Spectrogram>> noise,
                                         double beta) {
  if (noise.empty()) throw Error("noise statistics: at least one noise clip is required");
  if (!(beta > 0.0)) throw Error("noise statistics: beta must be positive");
  const Eigen::Index bins = noise.front().first.bins();
  std::vector<std::vector<double>> powers(static_cast<std::size_t>(bins));
  for (const auto& [l, r] : noise) {
    if (l.bins() != bins || r.bins() != bins || l.frames() != r.frames()) {
      throw Error("noise statistics: spectrogram shapes disagree");
    }
    for (Eigen::Index f = 0; f < bins; ++f) {
      for (Eigen::Index k = 0; k < l.frames(); ++k) {
        powers[static_cast<std::size_t>(f)].push_back(
            std::max(std::norm(l.coefficients(f, k)), std::norm(r.coefficients(f, k))));
      }
    }
  }
  NoiseStats stats;
  stats.threshold_factor = beta;
  stats.per_freq_floor.resize(bins);
  for (Eigen::Index f = 0; f < bins; ++f) {
    stats.per_freq_floor[f] = median_of(powers[static_cast<std::size_t>(f)]);
  }
  stats.threshold_a = beta * stats.per_freq_floor;
  return stats;
}

NoiseStats estimate_noise_stats(std::span<const AudioClip> noise_clips, double beta, StftParams params) {
  if (noise_clips.empty()) throw Error("noise statistics: at least one noise clip is required");
  std::vector<std::pair<Spectrogram, Spectrogram>> specs;
  specs.reserve(noise_clips.size());
  for (const auto& clip : noise_clips) specs.push_back(stft(clip, params));
  return noise_stats_from_spectrograms(specs, beta);
}

Mask activity_mask(const Spectrogram& left, const Spectrogram& right, const NoiseStats& stats,
                   double min_threshold) {
  if (left.bins() != right.bins() || left.frames() != right.frames()) {
    throw Error("activity mask: left/right spectrogram shapes differ");
  }
  if (stats.threshold_a.size() != left.bins()) {
    throw Error("activity mask: noise statistics have " + std::to_string(stats.threshold_a.size()) +
                " bins, spectrogram has " + std::to_string(left.bins()));
  }
  Mask mask(left.bins(), left.frames());
  for (Eigen::Index k = 0; k < left.frames(); ++k) {
    for (Eigen::Index f = 0; f < left.bins(); ++f) {
      const double a = std::max(stats.threshold_a[f], min_threshold);
      const double power = std::max(std::norm(left.coefficients(f, k)), std::norm(right.coefficients(f, k)));
      mask(f, k) = power < a ? 0 : 1;
    }
  }
  return mask;
}

bool StaticFeature::all_valid() const {
  return std::all_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; });
}

StaticFeature binaural_feature_static(const Spectrogram& left, const Spectrogram& right) {
  if (left.bins() != right.bins() || left.frames() != right.frames()) {
    throw Error("binaural feature: left/right spectrogram shapes differ");
  }
  if (left.frames() < 1) throw Error("binaural feature: at least one frame is required");
  const Eigen::Index bins = left.bins();
  const double inv_k = 1.0 / static_cast<double>(left.frames());

  StaticFeature out;
  out.values = ComplexVector::Zero(bins);
  out.valid.assign(static_cast<std::size_t>(bins), 0);
  out.auto_psd_left.resize(bins);
  out.auto_psd_right.resize(bins);
  for (Eigen::Index f = 0; f < bins; ++f) {
    Complex cross{0.0, 0.0};
    double ll = 0.0;
    double rr = 0.0;
    for (Eigen::Index k = 0; k < left.frames(); ++k) {
      const Complex l = left.coefficients(f, k);
      const Complex r = right.coefficients(f, k);
      cross += l * std::conj(r);
      ll += std::norm(l);
      rr += std::norm(r);
    }
    cross *= inv_k;
    ll *= inv_k;
    rr *= inv_k;
    out.auto_psd_left[f] = ll;
    out.auto_psd_right[f] = rr;
    if (rr > kTinyPower) {
      const Complex y = cross / rr;
      if (std::isfinite(y.real()) && std::isfinite(y.imag())) {
        out.values[f] = y;
        out.valid[static_cast<std::size_t>(f)] = 1;
      }
    }
  }
  return out;
}

long BinauralSpectrogram::active_count() const {
  return static_cast<long>(mask.cast<long>().sum());
}

BinauralSpectrogram binaural_spectrogram(const Spectrogram& left, const Spectrogram& right,
                                         const Mask& mask, int time_index) {
  if (left.bins() != right.bins() || left.frames() != right.frames() || mask.rows() != left.bins() ||
      mask.cols() != left.frames()) {
    throw Error("binaural spectrogram: spectrogram and mask shapes differ");
  }
  BinauralSpectrogram out;
  out.time_index = time_index;
  out.Y = ComplexMatrix::Zero(left.bins(), left.frames());
  out.mask = mask;
  for (Eigen::Index k = 0; k < left.frames(); ++k) {
    for (Eigen::Index f = 0; f < left.bins(); ++f) {
      if (mask(f, k) == 0) continue;
      const Complex l = left.coefficients(f, k);
      const Complex r = right.coefficients(f, k);
      const double rr = std::norm(r);
      const Complex y = rr > kTinyPower ? l * std::conj(r) / rr : Complex{};
      if (rr > kTinyPower && std::isfinite(y.real()) && std::isfinite(y.imag())) {
        out.Y(f, k) = y;
      } else {
        out.mask(f, k) = 0;
      }
    }
  }
  return out;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_spectrogram_csv(const std::filesystem::path& path, const ComplexMatrix& values) {
  auto out = open_for_write(path);
  char buf[96];
  for (Eigen::Index f = 0; f < values.rows(); ++f) {
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.9g%+.9gi", values(f, k).real(), values(f, k).imag());
      if (k) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_mask_csv(const std::filesystem::path& path, const Mask& mask) {
  auto out = open_for_write(path);
  for (Eigen::Index f = 0; f < mask.rows(); ++f) {
    for (Eigen::Index k = 0; k < mask.cols(); ++k) {
      if (k) out << ',';
      out << static_cast<int>(mask(f, k));
    }
    out << '\n';
  }
}

}  // namespace bindiar
