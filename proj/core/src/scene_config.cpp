#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "bindiar/simulator.hpp"

namespace bindiar {

namespace {

using nlohmann::json;

Interval to_interval(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error("scene: intervals are written as [start_s, end_s]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Interval> intervals(const json& person, const char* key) {
  std::vector<Interval> out;
  if (!person.contains(key)) return out;
  for (const auto& iv : person.at(key)) out.push_back(to_interval(iv));
  return out;
}

SourceKind to_source(const std::string& s) {
  if (s == "speech") return SourceKind::speech;
  if (s == "white_noise") return SourceKind::white_noise;
  if (s == "comb") return SourceKind::comb;
  throw Error("scene: unknown source kind '" + s + "' (speech, white_noise, comb)");
}

PersonSpec to_person(const json& j) {
  PersonSpec p;
  p.id = j.value("id", -1);
  p.source = to_source(j.value("source", std::string("speech")));
  p.gain = j.value("gain", 1.0);
  if (j.contains("position")) {
    const auto& pos = j.at("position");
    if (!pos.is_array() || pos.size() != 2) throw Error("scene: position is written as [x, y]");
    p.path.push_back({0.0, {pos[0].get<double>(), pos[1].get<double>()}});
  }
  if (j.contains("path")) {
    if (!p.path.empty()) throw Error("scene: give either position or path, not both");
    for (const auto& w : j.at("path")) {
      if (!w.is_array() || w.size() != 3) throw Error("scene: path waypoints are written as [t_s, x, y]");
      p.path.push_back({w[0].get<double>(), {w[1].get<double>(), w[2].get<double>()}});
    }
  }
  p.speech = intervals(j, "speech");
  p.hidden = intervals(j, "hidden");
  return p;
}

}  // namespace

SceneConfig parse_scene_json(const std::string& text) {
  SceneConfig cfg;
  try {
    const json doc = json::parse(text);
    auto& s = cfg.scene;
    s.duration_s = doc.value("duration_s", s.duration_s);
    s.seed = doc.value("seed", s.seed);
    s.sample_rate = doc.value("sample_rate", s.sample_rate);
    s.fps = doc.value("fps", s.fps);
    if (doc.contains("noise_power") && doc.contains("snr_db")) throw Error("scene: give noise_power or snr_db, not both");
    s.noise_power = doc.value("noise_power", s.noise_power);
    // Sources are normalized to unit RMS, so the SNR fixes the noise variance.
    if (doc.contains("snr_db")) s.noise_power = std::pow(10.0, -doc.at("snr_db").get<double>() / 10.0);
    if (doc.contains("image")) {
      s.rtf.image.width = doc["image"].value("width", s.rtf.image.width);
      s.rtf.image.height = doc["image"].value("height", s.rtf.image.height);
    }
    if (doc.contains("persons")) {
      for (const auto& p : doc.at("persons")) s.persons.push_back(to_person(p));
    }
    if (doc.contains("training_grid")) {
      const auto& g = doc["training_grid"];
      GridRenderOptions opt;
      opt.rows = g.value("rows", opt.rows);
      opt.cols = g.value("cols", opt.cols);
      opt.duration_s = g.value("duration_s", opt.duration_s);
      opt.snr_db = g.value("snr_db", opt.snr_db);
      opt.seed = g.value("seed", s.seed);
      opt.sample_rate = s.sample_rate;
      opt.rtf = s.rtf;
      cfg.training_grid = opt;
    }
    if (doc.contains("noise_calibration")) {
      cfg.noise_calibration = NoiseCalibration{doc["noise_calibration"].value("duration_s", 5.0)};
    }
  } catch (const json::exception& e) {
    throw Error(std::string("scene: ") + e.what());
  }
  cfg.scene.validate();
  return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene file '" + path.string() + "'");
  std::stringstream text;
  if (path.extension() == ".toml") {
    try {
      const auto table = toml::parse(in, path.string());
      text << toml::json_formatter{table};
    } catch (const toml::parse_error& e) {
      throw Error("scene: " + std::string(e.description()) + " at line " +
                  std::to_string(e.source().begin.line));
    }
  } else {
    text << in.rdbuf();
  }
  return parse_scene_json(text.str());
}

}  // namespace bindiar
