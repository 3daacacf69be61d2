#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bindiar/signal.hpp"

namespace bindiar {

/// Descriptive shape of the loudspeaker grid a training set was recorded on.
struct GridMeta {
  int rows = 0;
  int cols = 0;
  int planes = 0;
};

/// Reference binaural features paired with the image location they were
/// recorded from. Immutable after construction.
class TrainingSet {
 public:
  TrainingSet() = default;
  TrainingSet(ComplexMatrix features, Eigen::Matrix2Xd locations, GridMeta grid = {});

  Eigen::Index size() const { return features_.cols(); }
  Eigen::Index bins() const { return features_.rows(); }

  const ComplexMatrix& features() const { return features_; }
  const Eigen::Matrix2Xd& locations() const { return locations_; }
  const GridMeta& grid() const { return grid_; }

  auto feature(Eigen::Index m) const { return features_.col(m); }
  PixelLocation location(Eigen::Index m) const { return {locations_(0, m), locations_(1, m)}; }

 private:
  ComplexMatrix features_;
  Eigen::Matrix2Xd locations_;
  GridMeta grid_;
};

struct GridRecording {
  AudioClip clip;
  PixelLocation location;
};

struct TrainingOptions {
  StftParams stft;
  ImageSize image;
  GridMeta grid;
  double min_duration_s = 1.0;
  /// When present, each bin's auto-PSD on both channels must reach
  /// threshold_a[f]; otherwise it only has to be non-degenerate.
  std::optional<NoiseStats> noise;
};

/// One static binaural feature per recording, computed over the whole clip.
/// Throws Error naming the grid point and bins that fail the per-frequency
/// significance check.
TrainingSet build_training_set(std::span<const GridRecording> recordings, const TrainingOptions& options = {});

/// argmin_m ||x - X_m||^2, ties resolved towards the lowest index.
Eigen::Index nearest_training(const TrainingSet& ts, PixelLocation x);

void save_training_set(const TrainingSet& ts, const std::filesystem::path& path);
TrainingSet load_training_set(const std::filesystem::path& path);

/// Positions (pixels) and visibility of the N tracked persons at one video frame.
struct PersonTrack {
  Eigen::Matrix2Xd positions;
  std::vector<std::uint8_t> visibility;

  int persons() const { return static_cast<int>(visibility.size()); }
  bool visible(int n) const { return visibility[static_cast<std::size_t>(n)] != 0; }
  PixelLocation position(int n) const { return {positions(0, n), positions(1, n)}; }
  int visible_count() const;
};

using TrackSequence = std::vector<PersonTrack>;

/// CSV rows "t,n,x,y,visible". Every frame must list the same persons.
TrackSequence read_tracks_csv(const std::filesystem::path& path);
void write_tracks_csv(const std::filesystem::path& path, const TrackSequence& tracks);

}  // namespace bindiar
