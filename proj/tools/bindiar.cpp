// Command-line front end: simulate, train, diarize, score, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bindiar/alignment.hpp"
#include "bindiar/der.hpp"
#include "bindiar/pipeline.hpp"
#include "bindiar/report.hpp"
#include "bindiar/simulator.hpp"
#include "bindiar/wav.hpp"

namespace fs = std::filesystem;
using namespace bindiar;

namespace {

struct SimulateArgs {
  std::string scene;
  std::string out;
};

struct TrainArgs {
  std::string grid;
  std::string out;
  std::string noise;
  double beta = kDefaultBeta;
};

struct DiarizeArgs {
  std::string audio;
  std::string tracks;
  std::string train;
  std::string out;
  std::string noise;
  std::string debug_dir;
  std::string format = "csv";
  double q = 0.8;
  double beta = kDefaultBeta;
  unsigned threads = 0;
};

struct ScoreArgs {
  std::string ref;
  std::string hyp;
  double collar = 0.04;
  std::string mapping = "identity";
  bool json = false;
};

struct ReportArgs {
  std::string in;
  std::string svg;
  std::string json;
};

void run_simulate(const SimulateArgs& a) {
  const auto cfg = load_scene_config(a.scene);
  const fs::path out = a.out;
  fs::create_directories(out);

  const auto rendered = render_scene(cfg.scene);
  write_wav(out / "mix.wav", rendered.audio);
  write_tracks_csv(out / "tracks.csv", rendered.truth.tracks);
  write_labels_csv(out / "labels.csv", rendered.truth);
  const double noise_s = cfg.noise_calibration ? cfg.noise_calibration->duration_s : 5.0;
  if (cfg.scene.noise_power > 0.0) write_wav(out / "noise.wav", render_noise_clip(cfg.scene, noise_s));

  if (cfg.training_grid) {
    const auto grid = render_training_grid(*cfg.training_grid);
    const fs::path dir = out / "grid";
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.csv");
    manifest << "# rows=" << grid.grid.rows << "\n# cols=" << grid.grid.cols << "\n# planes=" << grid.grid.planes
             << "\nfile,x,y\n";
    manifest.precision(10);
    for (std::size_t m = 0; m < grid.recordings.size(); ++m) {
      char name[32];
      std::snprintf(name, sizeof name, "point_%04zu.wav", m);
      write_wav(dir / name, grid.recordings[m].clip);
      manifest << name << ',' << grid.recordings[m].location.x << ',' << grid.recordings[m].location.y << '\n';
    }
  }
  std::cout << "rendered " << cfg.scene.frames() << " frames, " << cfg.scene.persons.size() << " person(s) to "
            << out.string() << '\n';
}

// The manifest is parsed here rather than in the library: it is a CLI
// convention, not part of the training-set format.
void run_train(const TrainArgs& a) {
  const fs::path dir = a.grid;
  std::ifstream in(dir / "manifest.csv");
  if (!in) throw Error("cannot open '" + (dir / "manifest.csv").string() + "'");
  TrainingOptions opt;
  std::vector<GridRecording> recs;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = line.substr(1, eq - 1);
      const int value = std::stoi(line.substr(eq + 1));
      if (key == "rows") opt.grid.rows = value;
      if (key == "cols") opt.grid.cols = value;
      if (key == "planes") opt.grid.planes = value;
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw Error("manifest: bad row '" + line + "'");
    recs.push_back({read_wav_resampled(dir / line.substr(0, c1)),
                    {std::stod(line.substr(c1 + 1, c2 - c1 - 1)), std::stod(line.substr(c2 + 1))}});
  }
  if (!a.noise.empty()) {
    const auto noise = read_wav_resampled(a.noise);
    opt.noise = estimate_noise_stats(std::span(&noise, 1), a.beta, opt.stft);
  }
  const auto ts = build_training_set(recs, opt);
  save_training_set(ts, a.out);
  std::cout << "training set: " << ts.size() << " points, " << ts.bins() << " bins -> " << a.out << '\n';
}

void run_diarize(const DiarizeArgs& a) {
  const auto audio = read_wav_resampled(a.audio);
  const auto tracks = read_tracks_csv(a.tracks);
  const auto ts = load_training_set(a.train);
  DiarizeConfig cfg;
  cfg.filter.q = a.q;
  cfg.beta = a.beta;
  cfg.threads = a.threads;
  if (!a.debug_dir.empty()) cfg.debug_dir = fs::path(a.debug_dir);
  std::optional<AudioClip> noise;
  if (!a.noise.empty()) noise = read_wav_resampled(a.noise);

  const auto result = diarize(audio, tracks, ts, cfg, noise);
  const TimelineTable table{result.timeline, result.persons, result.marginals()};
  const auto format = parse_report_format(a.format);
  if (format == ReportFormat::json) {
    write_timeline_json(a.out, table, &result.steps);
  } else {
    report_timeline(table, a.out, format);
  }
}

void run_score(const ScoreArgs& a) {
  SpeakerMapping mapping;
  if (a.mapping == "identity") {
    mapping = SpeakerMapping::identity;
  } else if (a.mapping == "optimal") {
    mapping = SpeakerMapping::optimal;
  } else {
    throw Error("unknown mapping '" + a.mapping + "' (identity, optimal)");
  }
  const auto rep = score_der(read_any_timeline(a.ref), read_any_timeline(a.hyp), a.collar, mapping);
  if (a.json) {
    std::printf("{\"der\": %.6f, \"false_alarm_s\": %.3f, \"miss_s\": %.3f, \"speaker_error_s\": %.3f, "
                "\"scored_speech_s\": %.3f, \"scored_frames\": %ld}\n",
                rep.der, rep.false_alarm_s, rep.miss_s, rep.speaker_error_s, rep.scored_speech_s, rep.scored_frames);
  } else {
    std::printf("DER %.2f%%  (false alarm %.2f s, miss %.2f s, speaker error %.2f s, scored speech %.2f s)\n",
                100.0 * rep.der, rep.false_alarm_s, rep.miss_s, rep.speaker_error_s, rep.scored_speech_s);
  }
}

void run_report(const ReportArgs& a) {
  if (a.svg.empty() && a.json.empty()) throw Error("report: give --svg and/or --json");
  const auto table = read_timeline_csv(a.in);
  if (!a.svg.empty()) write_timeline_svg(a.svg, table);
  if (!a.json.empty()) write_timeline_json(a.json, table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual speaker diarization from binaural recordings and person tracks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Render a synthetic scene, its tracks and labels");
  c_sim->add_option("scene", sim.scene, "Scene file (.toml or .json)")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Build a training set from grid recordings");
  c_train->add_option("--grid", train.grid, "Directory with manifest.csv and WAV files")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_train->add_option("--out", train.out, "Training set JSON")->required();
  c_train->add_option("--noise", train.noise, "Noise-only WAV for the significance check")->check(CLI::ExistingFile);
  c_train->add_option("--beta", train.beta, "Threshold factor over the noise floor");

  DiarizeArgs dia;
  auto* c_dia = app.add_subcommand("diarize", "Diarize a recording");
  c_dia->add_option("--audio", dia.audio, "Stereo WAV")->required()->check(CLI::ExistingFile);
  c_dia->add_option("--tracks", dia.tracks, "Tracks CSV (t,n,x,y,visible)")->required()->check(CLI::ExistingFile);
  c_dia->add_option("--train", dia.train, "Training set JSON")->required()->check(CLI::ExistingFile);
  c_dia->add_option("--out", dia.out, "Output timeline")->required();
  c_dia->add_option("--q", dia.q, "Self-transition probability")->check(CLI::Range(0.0, 1.0));
  c_dia->add_option("--beta", dia.beta, "Threshold factor over the noise floor")->check(CLI::PositiveNumber);
  c_dia->add_option("--noise", dia.noise, "Noise-only WAV for the noise floor")->check(CLI::ExistingFile);
  c_dia->add_option("--debug-dir", dia.debug_dir, "Dump masks and per-slice fits here");
  c_dia->add_option("--format", dia.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  c_dia->add_option("--threads", dia.threads, "Worker threads (0 = all cores)");

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Diarization error rate of a hypothesis");
  c_score->add_option("--ref", score.ref, "Reference labels or timeline CSV")->required()->check(CLI::ExistingFile);
  c_score->add_option("--hyp", score.hyp, "Hypothesis timeline CSV")->required()->check(CLI::ExistingFile);
  c_score->add_option("--collar", score.collar, "Forgiveness collar in seconds")->check(CLI::NonNegativeNumber);
  c_score->add_option("--mapping", score.mapping, "identity or optimal")
      ->check(CLI::IsMember({"identity", "optimal"}));
  c_score->add_flag("--json", score.json, "Print the report as JSON");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Render a timeline");
  c_rep->add_option("--in", rep.in, "Timeline CSV")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--svg", rep.svg, "SVG output");
  c_rep->add_option("--json", rep.json, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_sim) run_simulate(sim);
    if (*c_train) run_train(train);
    if (*c_dia) run_diarize(dia);
    if (*c_score) run_score(score);
    if (*c_rep) run_report(rep);
  } catch (const std::exception& e) {
    std::cerr << "bindiar: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
