#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "bindiar/simulator.hpp"

using namespace bindiar;

namespace {

Scene two_person_scene(double noise) {
  Scene s;
  s.duration_s = 3.0;
  s.noise_power = noise;
  s.seed = 17;
  s.persons.push_back({0, SourceKind::speech, {{0.0, {400.0, 500.0}}}, {{0.0, 3.0}}, {}, 1.0});
  s.persons.push_back({1, SourceKind::speech, {{0.0, {300.0, 700.0}}, {3.0, {1600.0, 650.0}}}, {{0.5, 2.5}}, {}, 0.7});
  return s;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST(Rtf, CentreHasUnitMagnitudeRatio) {
  const RealVector f = bin_frequencies(16000, 512);
  const auto tf = synth_rtf({960.0, 600.0}, f);
  const ComplexVector ratio = tf.ratio();
  for (Eigen::Index i = 0; i < ratio.size(); ++i) EXPECT_NEAR(std::abs(ratio(i)), 1.0, 1e-12);
  for (Eigen::Index i = 0; i < ratio.size(); ++i) {
    EXPECT_GT(std::abs(tf.left(i)), 0.0);
    EXPECT_GT(std::abs(tf.right(i)), 0.0);
  }
  EXPECT_THROW(synth_rtf({-1.0, 10.0}, f), Error);
  EXPECT_THROW(synth_rtf({10.0, 1300.0}, f), Error);
}

TEST(Rtf, GridRatiosAreDistinct) {
  const RealVector f = bin_frequencies(16000, 512);
  const auto pts = grid_positions(20, 40);
  ASSERT_EQ(pts.size(), 800u);
  std::vector<ComplexVector> ratios;
  for (const auto& p : pts) ratios.push_back(synth_rtf(p, f).ratio());
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    for (std::size_t j = i + 1; j < ratios.size(); ++j) closest = std::min(closest, (ratios[i] - ratios[j]).norm());
  }
  EXPECT_GT(closest, 1e-3);
}

TEST(Rtf, PhaseMonotoneInAzimuth) {
  // At a low frequency the phase stays inside (-pi, pi) across the image.
  const std::vector<double> f{500.0};
  double last = std::numeric_limits<double>::infinity();
  for (double x = 0.0; x <= 1920.0; x += 20.0) {
    const double phase = std::arg(synth_rtf({x, 600.0}, f).ratio()(0));
    EXPECT_LT(phase, last) << "x=" << x;
    last = phase;
  }
}

TEST(Rtf, GridPositionsAreRowMajorCellCentres) {
  const auto pts = grid_positions(2, 4, ImageSize{800, 400});
  ASSERT_EQ(pts.size(), 8u);
  EXPECT_DOUBLE_EQ(pts[0].x, 100.0);
  EXPECT_DOUBLE_EQ(pts[0].y, 100.0);
  EXPECT_DOUBLE_EQ(pts[1].x, 300.0);
  EXPECT_DOUBLE_EQ(pts[4].y, 300.0);
}

TEST(Scene, SuperpositionOfNoiselessSources) {
  const auto joint = render_scene(two_person_scene(0.0));
  std::vector<double> l(joint.audio.size(), 0.0), r(joint.audio.size(), 0.0);
  for (std::size_t n = 0; n < 2; ++n) {
    Scene alone = two_person_scene(0.0);
    alone.persons = {alone.persons[n]};
    const auto part = render_scene(alone);
    for (std::size_t i = 0; i < l.size(); ++i) {
      l[i] += part.audio.left[i];
      r[i] += part.audio.right[i];
    }
  }
  EXPECT_LE(max_abs_diff(l, joint.audio.left), 1e-9);
  EXPECT_LE(max_abs_diff(r, joint.audio.right), 1e-9);
}

TEST(Scene, DeterministicPerSeed) {
  const auto a = render_scene(two_person_scene(0.01));
  const auto b = render_scene(two_person_scene(0.01));
  EXPECT_EQ(a.audio.left, b.audio.left);
  EXPECT_EQ(a.audio.right, b.audio.right);
  EXPECT_EQ(a.truth.labels, b.truth.labels);
  auto other = two_person_scene(0.01);
  other.seed = 18;
  EXPECT_NE(render_scene(other).audio.left, a.audio.left);
}

TEST(Scene, SilenceIsSensorNoiseAtConfiguredPower) {
  Scene s;
  s.duration_s = 4.0;
  s.noise_power = 0.02;
  s.persons.push_back({0, SourceKind::speech, {{0.0, {900.0, 600.0}}}, {}, {}, 1.0});
  const auto out = render_scene(s);
  for (const auto* ch : {&out.audio.left, &out.audio.right}) {
    double p = 0.0;
    for (double v : *ch) p += v * v;
    p /= static_cast<double>(ch->size());
    EXPECT_NEAR(p, 0.02, 0.02 * 0.03);
  }
  for (const auto& row : out.truth.labels) EXPECT_EQ(row[0], 0);
}

TEST(Scene, LabelsAndTracksFollowTheScript) {
  const auto scene = two_person_scene(0.0);
  const auto out = render_scene(scene);
  ASSERT_EQ(out.truth.labels.size(), static_cast<std::size_t>(scene.frames()));
  ASSERT_EQ(out.truth.tracks.size(), out.truth.labels.size());
  for (std::size_t t = 0; t < out.truth.labels.size(); ++t) {
    const double centre = (static_cast<double>(t) + 0.5) / scene.fps;
    for (std::size_t n = 0; n < 2; ++n) {
      EXPECT_EQ(out.truth.labels[t][n], scene.persons[n].speaking_at(centre) ? 1 : 0);
      const auto p = scene.persons[n].position_at(centre);
      EXPECT_DOUBLE_EQ(out.truth.tracks[t].position(static_cast<int>(n)).x, p.x);
    }
  }
  EXPECT_EQ(out.truth.labels[10][1], 0);
  EXPECT_EQ(out.truth.labels[20][1], 1);
}

TEST(Scene, HiddenIntervalsClearVisibility) {
  Scene s;
  s.duration_s = 2.0;
  s.persons.push_back({0, SourceKind::speech, {{0.0, {900.0, 600.0}}}, {{0.0, 2.0}}, {{0.4, 0.8}}, 1.0});
  const auto out = render_scene(s);
  EXPECT_TRUE(out.truth.tracks[5].visible(0));
  EXPECT_FALSE(out.truth.tracks[15].visible(0));
}

TEST(Scene, SourcesRarelyShareBins) {
  // Both talkers active throughout; count bins where both images exceed the
  // per-frequency noise floor, as a share of all time-frequency bins.
  Scene s = two_person_scene(0.01);
  s.persons[1].path = {{0.0, {1500.0, 600.0}}};
  s.persons[1].speech = {{0.0, 3.0}};
  const auto out = render_scene(s);
  const auto noise = render_noise_clip(s, 3.0);
  const auto floor = estimate_noise_stats(std::span(&noise, 1), 1.0).per_freq_floor;
  const auto energy = source_tf_energy(out.truth);
  long both = 0;
  for (Eigen::Index f = 0; f < energy[0].rows(); ++f) {
    for (Eigen::Index k = 0; k < energy[0].cols(); ++k) both += energy[0](f, k) > floor(f) && energy[1](f, k) > floor(f);
  }
  EXPECT_LT(static_cast<double>(both) / static_cast<double>(energy[0].size()), 0.2);
}

TEST(Scene, RejectsInvalidScenes) {
  Scene s;
  s.persons.push_back({0, SourceKind::speech, {{0.0, {2500.0, 600.0}}}, {}, {}, 1.0});
  EXPECT_THROW(render_scene(s), Error);
  s.persons[0].path = {{0.0, {100.0, 100.0}}};
  s.persons[0].speech = {{5.0, 11.0}};
  EXPECT_THROW(render_scene(s), Error);
}

TEST(Grid, MatchesAnalyticRatiosAndRepeatsAcrossSeeds) {
  const auto pts = grid_positions(3, 5);
  GridRenderOptions opt;
  const auto a = render_training_grid(pts, opt);
  opt.seed = 99;
  const auto b = render_training_grid(pts, opt);
  ASSERT_EQ(a.recordings.size(), pts.size());
  ASSERT_EQ(a.analytic.cols(), static_cast<Eigen::Index>(pts.size()));
  const auto ta = build_training_set(a.recordings);
  const auto tb = build_training_set(b.recordings);
  long good = 0, total = 0;
  for (Eigen::Index m = 0; m < ta.size(); ++m) {
    for (Eigen::Index f = 0; f < ta.bins(); ++f) {
      ++total;
      good += std::abs(ta.features()(f, m) - a.analytic(f, m)) <= 0.02 * std::abs(a.analytic(f, m));
    }
    // Correlation between the two seeds' feature vectors.
    const ComplexVector x = ta.feature(m), y = tb.feature(m);
    const double rho = std::abs(x.dot(y)) / (x.norm() * y.norm());
    EXPECT_GT(rho, 0.99);
  }
  EXPECT_GE(static_cast<double>(good) / static_cast<double>(total), 0.99);
}

TEST(Config, TomlAndJsonDescribeTheSameScene) {
  const auto dir = std::filesystem::temp_directory_path();
  std::ofstream(dir / "bindiar_scene.toml") << R"(duration_s = 4.0
seed = 9
snr_db = 20.0

[[persons]]
id = 3
position = [400.0, 500.0]
speech = [[0.5, 2.0]]

[[persons]]
path = [[0.0, 100.0, 100.0], [4.0, 1800.0, 100.0]]
hidden = [[1.0, 1.5]]

[training_grid]
rows = 2
cols = 3
)";
  const auto toml = load_scene_config(dir / "bindiar_scene.toml");
  const auto json = parse_scene_json(R"({"duration_s": 4.0, "seed": 9, "snr_db": 20.0,
    "persons": [{"id": 3, "position": [400.0, 500.0], "speech": [[0.5, 2.0]]},
                {"path": [[0.0, 100.0, 100.0], [4.0, 1800.0, 100.0]], "hidden": [[1.0, 1.5]]}],
    "training_grid": {"rows": 2, "cols": 3}})");
  for (const auto* c : {&toml, &json}) {
    EXPECT_EQ(c->scene.seed, 9u);
    EXPECT_NEAR(c->scene.noise_power, 0.01, 1e-15);
    ASSERT_EQ(c->scene.persons.size(), 2u);
    EXPECT_EQ(c->scene.persons[0].id, 3);
    EXPECT_DOUBLE_EQ(c->scene.persons[1].position_at(2.0).x, 950.0);
    EXPECT_FALSE(c->scene.persons[1].visible_at(1.2));
    ASSERT_TRUE(c->training_grid.has_value());
    EXPECT_EQ(c->training_grid->cols, 3);
    EXPECT_FALSE(c->noise_calibration.has_value());
  }
  EXPECT_THROW(parse_scene_json(R"({"noise_power": 0.1, "snr_db": 10})"), Error);
  EXPECT_THROW(parse_scene_json("{not json"), Error);
  std::filesystem::remove(dir / "bindiar_scene.toml");
}
