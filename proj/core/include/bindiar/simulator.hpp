#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bindiar/alignment.hpp"
#include "bindiar/signal.hpp"

namespace bindiar {

/// Analytic two-microphone head model. Pixel position maps linearly to
/// azimuth and elevation through the camera field of view; the interaural
/// cues are a time difference (mostly horizontal, with a small vertical
/// component so that rows of the image stay distinguishable) and a level
/// difference that grows with azimuth.
struct RtfModel {
  ImageSize image;
  double hfov_deg = 97.0;
  double vfov_deg = 80.0;
  double mic_distance_m = 0.17;
  double vertical_offset_m = 0.03;
  double speed_of_sound = 343.0;
  double ild_db = 6.0;

  double azimuth(PixelLocation p) const;
  double elevation(PixelLocation p) const;
  /// Interaural delay in seconds, left relative to right.
  double delay_s(PixelLocation p) const;
  double level_db(PixelLocation p) const;
  /// Left and right responses at one frequency.
  std::pair<Complex, Complex> response(PixelLocation p, double freq_hz) const;
};

struct TransferFunctionPair {
  ComplexVector left;
  ComplexVector right;

  ComplexVector ratio() const { return left.cwiseQuotient(right); }
};

/// Responses at `freqs_hz`. Throws if the position lies outside the image.
TransferFunctionPair synth_rtf(PixelLocation position, std::span<const double> freqs_hz, const RtfModel& model = {});
inline TransferFunctionPair synth_rtf(PixelLocation position, const RealVector& freqs_hz, const RtfModel& model = {}) {
  return synth_rtf(position, std::span<const double>(freqs_hz.data(), static_cast<std::size_t>(freqs_hz.size())),
                   model);
}

/// Cell centres of a rows x cols grid covering the image, row-major.
std::vector<PixelLocation> grid_positions(int rows, int cols, ImageSize image = {});

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;

  bool contains(double t) const { return t >= start_s && t < end_s; }
};

struct Waypoint {
  double t_s = 0.0;
  PixelLocation position;
};

enum class SourceKind {
  speech,       // syllabic harmonic bursts
  white_noise,  // gated Gaussian noise
  comb,         // periodic comb on the even STFT bins (bin-exact in the analysis)
};

struct PersonSpec {
  /// Identifies the person's random stream; -1 uses the list index.
  int id = -1;
  SourceKind source = SourceKind::speech;
  /// One waypoint is a static person; otherwise linear interpolation,
  /// held constant before the first and after the last waypoint.
  std::vector<Waypoint> path;
  std::vector<Interval> speech;
  /// Intervals in which the tracker does not report the person.
  std::vector<Interval> hidden;
  double gain = 1.0;

  PixelLocation position_at(double t_s) const;
  bool speaking_at(double t_s) const;
  bool visible_at(double t_s) const;
};

struct Scene {
  std::vector<PersonSpec> persons;
  double duration_s = 10.0;
  /// Variance of the white sensor noise added to each channel.
  double noise_power = 0.01;
  std::uint64_t seed = 1;
  int sample_rate = 16000;
  double fps = 25.0;
  RtfModel rtf;

  int frames() const;
  std::size_t samples() const;
  void validate() const;
};

struct GroundTruth {
  TrackSequence tracks;
  /// labels[t][n] is 1 when person n's script is active at the centre of frame t.
  std::vector<std::vector<std::uint8_t>> labels;
  /// Noiseless image of each person's source at the two microphones.
  std::vector<AudioClip> source_images;
  double frame_period_s = 0.04;
};

/// max(|L|^2, |R|^2) of each person's noiseless image, bins x frames.
std::vector<Eigen::MatrixXd> source_tf_energy(const GroundTruth& truth, StftParams params = {});

struct RenderedScene {
  AudioClip audio;
  GroundTruth truth;
};

RenderedScene render_scene(const Scene& scene);

/// Dry source signal of person `index`, before gating by position.
std::vector<double> render_source(const Scene& scene, std::size_t index);

/// Sensor noise alone, from a stream independent of the scene's own noise.
AudioClip render_noise_clip(const Scene& scene, double duration_s);

struct GridRenderOptions {
  int rows = 20;
  int cols = 40;
  double duration_s = 1.0;
  double snr_db = 30.0;
  std::uint64_t seed = 1;
  int sample_rate = 16000;
  StftParams stft;
  RtfModel rtf;
};

struct RenderedGrid {
  std::vector<GridRecording> recordings;
  /// Analytic H_L/H_R at the analysis bin frequencies, bins x points.
  ComplexMatrix analytic;
  GridMeta grid;

  TrainingSet analytic_set() const;
};

/// One white-noise recording per position plus the analytic ratios.
RenderedGrid render_training_grid(std::span<const PixelLocation> positions, const GridRenderOptions& options = {});
RenderedGrid render_training_grid(const GridRenderOptions& options = {});

struct NoiseCalibration {
  double duration_s = 5.0;
};

/// A scene plus the optional extras its config file may ask for.
struct SceneConfig {
  Scene scene;
  std::optional<GridRenderOptions> training_grid;
  std::optional<NoiseCalibration> noise_calibration;
};

/// Reads a scene from TOML (.toml) or JSON (any other extension).
SceneConfig load_scene_config(const std::filesystem::path& path);
SceneConfig parse_scene_json(const std::string& text);

void write_labels_csv(const std::filesystem::path& path, const GroundTruth& truth);

}  // namespace bindiar
