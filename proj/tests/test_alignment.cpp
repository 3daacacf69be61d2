#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "bindiar/alignment.hpp"
#include "bindiar/simulator.hpp"

using namespace bindiar;

namespace {

TrainingSet small_set(const std::vector<PixelLocation>& pts) {
  ComplexMatrix f(3, static_cast<Eigen::Index>(pts.size()));
  Eigen::Matrix2Xd loc(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t m = 0; m < pts.size(); ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    f.col(i) << Complex(1.0 + i, 0.5), Complex(0.1, -1.0 * i), Complex(2.0, 2.0);
    loc.col(i) << pts[m].x, pts[m].y;
  }
  return TrainingSet(f, loc, {1, static_cast<int>(pts.size()), 1});
}

Eigen::Index brute_nearest(const TrainingSet& ts, PixelLocation x) {
  Eigen::Index best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < ts.size(); ++m) {
    const double d = std::pow(x.x - ts.location(m).x, 2) + std::pow(x.y - ts.location(m).y, 2);
    if (best < 0 || d < best_d) {
      best = m;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

TEST(Nearest, ExactHitAndTieBreak) {
  std::vector<PixelLocation> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({100.0 * i, 50.0});
  const auto ts = small_set(pts);
  EXPECT_EQ(nearest_training(ts, {700.0, 50.0}), 7);
  // Equidistant between points 2 and 3.
  EXPECT_EQ(nearest_training(ts, {250.0, 80.0}), 2);

  std::vector<PixelLocation> tie{{0, 0}, {10, 0}, {5, 5}, {20, 20}, {0, 10}, {5, -5}};
  const auto ts2 = small_set(tie);
  EXPECT_EQ(nearest_training(ts2, {5.0, 0.0}), 0);
}

TEST(Nearest, MatchesLinearScanOracleAndIsTranslationEquivariant) {
  const auto pts = grid_positions(20, 40);
  const auto ts = small_set(pts);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(0.0, 1920.0), uy(0.0, 1200.0);
  Eigen::Matrix2Xd shifted = ts.locations();
  shifted.row(0).array() += 313.0;
  shifted.row(1).array() -= 71.0;
  const TrainingSet moved(ts.features(), shifted);
  for (int i = 0; i < 1000; ++i) {
    const PixelLocation q{ux(rng), uy(rng)};
    const auto m = nearest_training(ts, q);
    EXPECT_EQ(m, brute_nearest(ts, q));
    EXPECT_EQ(nearest_training(moved, {q.x + 313.0, q.y - 71.0}), m);
  }
  for (Eigen::Index m = 0; m < ts.size(); ++m) EXPECT_EQ(nearest_training(ts, ts.location(m)), m);
}

TEST(TrainingSet, RejectsInconsistentInput) {
  ComplexMatrix f(2, 3);
  f.setOnes();
  Eigen::Matrix2Xd loc(2, 2);
  loc.setZero();
  EXPECT_THROW(TrainingSet(f, loc), Error);
  EXPECT_THROW(nearest_training(TrainingSet{}, {0, 0}), Error);
}

TEST(TrainingSet, SinglePointEqualsStaticFeature) {
  GridRenderOptions opt;
  const std::vector<PixelLocation> one{{640.0, 300.0}};
  const auto grid = render_training_grid(one, opt);
  const auto ts = build_training_set(grid.recordings);
  ASSERT_EQ(ts.size(), 1);
  const auto [l, r] = stft(grid.recordings[0].clip);
  const auto feat = binaural_feature_static(l, r);
  EXPECT_EQ(ts.feature(0), feat.values);
  EXPECT_DOUBLE_EQ(ts.location(0).x, 640.0);
}

TEST(TrainingSet, PermutationConsistent) {
  const std::vector<PixelLocation> pts{{100, 100}, {900, 600}, {1800, 1100}};
  const auto grid = render_training_grid(pts, GridRenderOptions{});
  std::vector<GridRecording> rev(grid.recordings.rbegin(), grid.recordings.rend());
  const auto a = build_training_set(grid.recordings);
  const auto b = build_training_set(rev);
  for (Eigen::Index m = 0; m < 3; ++m) {
    EXPECT_EQ(a.feature(m), b.feature(2 - m));
    EXPECT_EQ(a.location(m).x, b.location(2 - m).x);
  }
}

TEST(TrainingSet, RejectsShortOutOfImageAndInsignificantRecordings) {
  const std::vector<PixelLocation> pts{{960, 600}};
  auto grid = render_training_grid(pts, GridRenderOptions{});

  auto shortened = grid.recordings;
  shortened[0].clip.left.resize(8000);
  shortened[0].clip.right.resize(8000);
  EXPECT_THROW(build_training_set(shortened), Error);

  auto outside = grid.recordings;
  outside[0].location = {2500.0, 10.0};
  EXPECT_THROW(build_training_set(outside), Error);

  // A recording whose power is far below the noise threshold names the failing bins.
  TrainingOptions opt;
  NoiseStats loud;
  loud.per_freq_floor = RealVector::Constant(256, 1e12);
  loud.threshold_a = RealVector::Constant(256, 3e12);
  opt.noise = loud;
  try {
    build_training_set(grid.recordings, opt);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("grid point 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("256 bin"), std::string::npos) << msg;
  }
  EXPECT_THROW(build_training_set({}), Error);
}

TEST(TrainingSet, JsonRoundTrip) {
  const auto pts = grid_positions(2, 3);
  const auto grid = render_training_grid(pts, GridRenderOptions{});
  const auto ts = build_training_set(grid.recordings, TrainingOptions{{}, {}, {2, 3, 1}});
  const auto path = std::filesystem::temp_directory_path() / "bindiar_ts.json";
  save_training_set(ts, path);
  const auto back = load_training_set(path);
  EXPECT_EQ(back.size(), ts.size());
  EXPECT_EQ(back.grid().cols, 3);
  EXPECT_EQ(back.locations(), ts.locations());
  EXPECT_LT((back.features() - ts.features()).cwiseAbs().maxCoeff(), 1e-12 * ts.features().cwiseAbs().maxCoeff());

  std::ofstream(path) << "{\"F\": 2, \"M\": 3, \"points\": []}";
  EXPECT_THROW(load_training_set(path), Error);
  std::filesystem::remove(path);
}

TEST(Tracks, CsvRoundTripAndValidation) {
  TrackSequence seq(3);
  for (std::size_t t = 0; t < 3; ++t) {
    seq[t].positions.resize(2, 2);
    seq[t].positions << 10.0 * t, 500.5, 20.0, 600.25;
    seq[t].visibility = {1, static_cast<std::uint8_t>(t != 1)};
  }
  const auto dir = std::filesystem::temp_directory_path();
  write_tracks_csv(dir / "bindiar_tracks.csv", seq);
  const auto back = read_tracks_csv(dir / "bindiar_tracks.csv");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].visible_count(), 1);
  EXPECT_EQ(back[2].positions, seq[2].positions);

  std::ofstream(dir / "bindiar_tracks_bad.csv") << "t,n,x,y,visible\n0,0,1,1,1\n0,1,2,2,1\n1,0,3,3,1\n";
  EXPECT_THROW(read_tracks_csv(dir / "bindiar_tracks_bad.csv"), Error);
  std::ofstream(dir / "bindiar_tracks_bad.csv") << "t,n,x,y\n0,0,1,1\n";
  EXPECT_THROW(read_tracks_csv(dir / "bindiar_tracks_bad.csv"), Error);
  std::filesystem::remove(dir / "bindiar_tracks.csv");
  std::filesystem::remove(dir / "bindiar_tracks_bad.csv");
}
