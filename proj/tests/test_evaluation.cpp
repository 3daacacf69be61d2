#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "bindiar/der.hpp"
#include "bindiar/pipeline.hpp"
#include "bindiar/report.hpp"
#include "bindiar/simulator.hpp"

using namespace bindiar;

namespace {

// Person ids 0 = A, 1 = B. Frames are 0-based here.
DiarTimeline timeline(std::initializer_list<std::vector<int>> frames) {
  return DiarTimeline{std::vector<std::vector<int>>(frames), 0.04};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count(const std::string& s, const std::string& needle) {
  long n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

DiarTimeline random_timeline(std::mt19937_64& rng, std::size_t frames, int persons) {
  std::bernoulli_distribution speak(0.3);
  DiarTimeline tl;
  tl.frames.resize(frames);
  for (auto& f : tl.frames) {
    for (int n = 0; n < persons; ++n) {
      if (speak(rng)) f.push_back(n);
    }
  }
  return tl;
}

}  // namespace

TEST(Der, IdenticalTimelinesScoreZero) {
  const auto ref = timeline({{0}, {0}, {0, 1}, {}, {1}});
  const auto rep = score_der(ref, ref, 0.0);
  EXPECT_EQ(rep.der, 0.0);
  EXPECT_EQ(rep.errors_s(), 0.0);
}

TEST(Der, SilentHypothesisMissesEverything) {
  DiarTimeline ref{std::vector<std::vector<int>>(50, {0}), 0.04};
  DiarTimeline hyp{std::vector<std::vector<int>>(50), 0.04};
  const auto rep = score_der(ref, hyp);
  EXPECT_EQ(rep.der, 1.0);
  EXPECT_EQ(rep.miss_s, rep.scored_speech_s);
}

TEST(Der, HandCountedTenFrameCase) {
  const auto ref = timeline({{0}, {0}, {0}, {0}, {0}, {0}, {0}, {0}, {}, {}});
  const auto hyp = timeline({{0}, {0}, {0}, {0}, {0}, {1}, {}, {}, {0}, {0}});
  const auto rep = score_der(ref, hyp, 0.0);
  EXPECT_NEAR(rep.miss_s, 2 * 0.04, 1e-12);
  EXPECT_NEAR(rep.speaker_error_s, 1 * 0.04, 1e-12);
  EXPECT_NEAR(rep.false_alarm_s, 2 * 0.04, 1e-12);
  EXPECT_NEAR(rep.scored_speech_s, 8 * 0.04, 1e-12);
  EXPECT_EQ(rep.der, 5.0 / 8.0);
}

TEST(Der, CollarExcludesFramesNearReferenceChanges) {
  const auto ref = timeline({{0}, {0}, {0}, {0}, {}, {}, {}, {}});
  const auto hyp = timeline({{0}, {0}, {0}, {}, {}, {0}, {}, {}});
  // Reference changes at 0 s and 0.16 s; frame centres sit at 0.02, 0.06, ...
  const auto none = score_der(ref, hyp, 0.0);
  EXPECT_EQ(none.scored_frames, 8);
  const auto one = score_der(ref, hyp, 0.04);
  EXPECT_EQ(one.scored_frames, 5);  // frames 0, 3 and 4 lie 0.02 s from a change
  EXPECT_EQ(one.miss_s, 0.0);
  EXPECT_NEAR(one.false_alarm_s, 0.04, 1e-12);
}

TEST(Der, ErrorsNeverGrowWithCollar) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const auto ref = random_timeline(rng, 200, 3);
    const auto hyp = random_timeline(rng, 200, 3);
    double last = std::numeric_limits<double>::infinity();
    for (double collar : {0.0, 0.04, 0.08, 0.2, 0.5}) {
      const double e = score_der(ref, hyp, collar).errors_s();
      EXPECT_LE(e, last + 1e-12);
      last = e;
    }
  }
}

TEST(Der, OptimalMappingUndoesIdPermutation) {
  std::mt19937_64 rng(4);
  const auto ref = random_timeline(rng, 300, 3);
  auto hyp = ref;
  const int perm[3] = {2, 0, 1};
  for (auto& f : hyp.frames) {
    for (int& id : f) id = perm[id] + 5;
  }
  EXPECT_GT(score_der(ref, hyp, 0.0).der, 0.0);
  EXPECT_EQ(score_der(ref, hyp, 0.0, SpeakerMapping::optimal).der, 0.0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto other = random_timeline(rng, 300, 3);
    EXPECT_LE(score_der(ref, other, 0.0, SpeakerMapping::optimal).der,
              score_der(ref, other, 0.0, SpeakerMapping::identity).der + 1e-12);
  }
}

TEST(Der, AssignmentMatchesBruteForce) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rep % 5);
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (auto& row : w) {
      for (double& v : row) v = std::floor(u(rng));
    }
    const auto pick = max_weight_assignment(w);
    double got = 0.0;
    for (std::size_t i = 0; i < n; ++i) got += w[i][static_cast<std::size_t>(pick[i])];
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    double best = -1.0;
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += w[i][static_cast<std::size_t>(p[i])];
      best = std::max(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    EXPECT_EQ(got, best);
  }
}

TEST(Der, PaddingAndErrors) {
  const auto ref = timeline({{0}, {0}});
  const auto hyp = timeline({{0}});
  EXPECT_EQ(score_der(ref, hyp, 0.0).der, 0.5);
  const auto silent = timeline({{}, {}});
  EXPECT_TRUE(std::isinf(score_der(silent, ref, 0.0).der));
  EXPECT_EQ(score_der(silent, silent, 0.0).der, 0.0);
  DiarTimeline other{{{0}}, 0.02};
  EXPECT_THROW(score_der(ref, other), Error);
  EXPECT_THROW(score_der(ref, ref, -1.0), Error);
}

TEST(Report, CsvRoundTrip) {
  TimelineTable table{timeline({{0}, {}, {0, 1}, {1}}), 2, {{0.9, 0.1}, {0.2, 0.3}, {0.7, 0.6}, {1.0 / 3.0, 0.8}}};
  const auto path = std::filesystem::temp_directory_path() / "bindiar_tl.csv";
  write_timeline_csv(path, table);
  const auto back = read_timeline_csv(path);
  EXPECT_EQ(back.timeline.frames, table.timeline.frames);
  EXPECT_EQ(back.marginals, table.marginals);
  EXPECT_DOUBLE_EQ(back.timeline.frame_period_s, 0.04);
  EXPECT_EQ(read_any_timeline(path).frames, table.timeline.frames);
  std::filesystem::remove(path);
}

TEST(Report, SvgMergesRunsIntoSegments) {
  // Person 0: speak, speak, silent, speak → three runs; person 1 silent throughout → one.
  TimelineTable table{timeline({{0}, {0}, {}, {0}}), 2, {}};
  const auto path = std::filesystem::temp_directory_path() / "bindiar_tl.svg";
  write_timeline_svg(path, table);
  const auto svg = slurp(path);
  EXPECT_EQ(count(svg, "class=\"lane\""), 2);
  EXPECT_EQ(count(svg, "class=\"segment\""), 4);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_THROW(write_timeline_svg(path, TimelineTable{}), Error);
  EXPECT_THROW(report_timeline(table, "/nonexistent-dir/x.csv", ReportFormat::csv), Error);
  EXPECT_EQ(parse_report_format("json"), ReportFormat::json);
  EXPECT_THROW(parse_report_format("xml"), Error);
  std::filesystem::remove(path);
}

TEST(Report, LabelsCsvFromSimulator) {
  GroundTruth truth;
  truth.labels = {{1, 0}, {0, 0}, {1, 1}};
  const auto path = std::filesystem::temp_directory_path() / "bindiar_labels.csv";
  write_labels_csv(path, truth);
  const auto tl = read_any_timeline(path);
  EXPECT_EQ(tl.frames, (std::vector<std::vector<int>>{{0}, {}, {0, 1}}));
  std::filesystem::remove(path);
}

TEST(Pipeline, EmptyInputsGiveEmptyTimeline) {
  const TrainingSet ts = render_training_grid(GridRenderOptions{2, 2}).analytic_set();
  EXPECT_EQ(diarize_pipeline(AudioClip{}, TrackSequence(10), ts).size(), 0u);
  AudioClip audio;
  audio.left.assign(16000, 0.0);
  audio.right.assign(16000, 0.0);
  EXPECT_EQ(diarize_pipeline(audio, {}, ts).size(), 0u);
}

TEST(Pipeline, SliceStartIsCentredAndClamped) {
  const DiarizeConfig cfg;
  EXPECT_EQ(slice_start(0, 1000, 16000, cfg), 0);
  // Frame 50 has its centre at 2.02 s = sample 32320; STFT frame k is centred at 256k + 256.
  EXPECT_EQ(slice_start(50, 1000, 16000, cfg), 113);
  EXPECT_EQ(slice_start(100000, 1000, 16000, cfg), 1000 - 25);
}

TEST(Pipeline, DeterministicAcrossThreadCounts) {
  Scene scene;
  scene.duration_s = 3.0;
  scene.noise_power = 1e-3;
  scene.seed = 31;
  scene.persons.push_back({0, SourceKind::speech, {{0.0, {500.0, 600.0}}}, {{0.3, 1.6}}, {}, 1.0});
  scene.persons.push_back({1, SourceKind::speech, {{0.0, {1400.0, 600.0}}}, {{1.5, 2.8}}, {}, 1.0});
  const auto r = render_scene(scene);
  GridRenderOptions g;
  g.rows = 5;
  g.cols = 10;
  const auto ts = render_training_grid(g).analytic_set();
  const auto noise = render_noise_clip(scene, 2.0);
  DiarizeConfig one;
  one.threads = 1;
  DiarizeConfig many;
  many.threads = 4;
  const auto a = diarize(r.audio, r.truth.tracks, ts, one, noise);
  const auto b = diarize(r.audio, r.truth.tracks, ts, many, noise);
  ASSERT_EQ(a.timeline.size(), r.truth.tracks.size());
  EXPECT_EQ(a.timeline.frames, b.timeline.frames);
  EXPECT_EQ(a.marginals(), b.marginals());

  const auto dir = std::filesystem::temp_directory_path();
  write_timeline_csv(dir / "bindiar_a.csv", {a.timeline, a.persons, a.marginals()});
  write_timeline_csv(dir / "bindiar_b.csv", {b.timeline, b.persons, b.marginals()});
  EXPECT_EQ(slurp(dir / "bindiar_a.csv"), slurp(dir / "bindiar_b.csv"));

  const auto ref = DiarTimeline::from_labels(r.truth.labels, r.truth.frame_period_s);
  EXPECT_LE(score_der(ref, a.timeline).der, 0.5);
  std::filesystem::remove(dir / "bindiar_a.csv");
  std::filesystem::remove(dir / "bindiar_b.csv");
}
