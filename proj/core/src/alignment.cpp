#include "bindiar/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"

namespace bindiar {

using nlohmann::json;

TrainingSet::TrainingSet(ComplexMatrix features, Eigen::Matrix2Xd locations, GridMeta grid)
    : features_(std::move(features)), locations_(std::move(locations)), grid_(grid) {
  if (features_.cols() != locations_.cols()) {
    throw Error("training set: " + std::to_string(features_.cols()) + " features but " +
                std::to_string(locations_.cols()) + " locations");
  }
  if (!locations_.allFinite()) throw Error("training set: non-finite location");
  if (!features_.allFinite()) throw Error("training set: non-finite feature value");
}

TrainingSet build_training_set(std::span<const GridRecording> recordings, const TrainingOptions& options) {
  if (recordings.empty()) throw Error("training set: no grid recordings");
  const Eigen::Index bins = options.stft.window_len / 2;
  ComplexMatrix features(bins, static_cast<Eigen::Index>(recordings.size()));
  Eigen::Matrix2Xd locations(2, static_cast<Eigen::Index>(recordings.size()));

  for (std::size_t m = 0; m < recordings.size(); ++m) {
    const auto& rec = recordings[m];
    std::ostringstream id;
    id << "grid point " << m << " at (" << rec.location.x << ", " << rec.location.y << ")";
    rec.clip.validate();
    const auto min_samples = static_cast<std::size_t>(std::ceil(options.min_duration_s * rec.clip.sample_rate - 1e-9));
    if (rec.clip.size() < min_samples) {
      throw Error(id.str() + ": recording is " + std::to_string(rec.clip.duration_s()) + " s, need at least " +
                  std::to_string(options.min_duration_s) + " s");
    }
    if (!options.image.contains(rec.location)) throw Error(id.str() + ": location outside the image");

    const auto [left, right] = stft(rec.clip, options.stft);
    const auto feat = binaural_feature_static(left, right);

    std::vector<Eigen::Index> failing;
    for (Eigen::Index f = 0; f < bins; ++f) {
      bool ok = feat.valid[static_cast<std::size_t>(f)] != 0 && std::norm(feat.values[f]) > 0.0;
      if (ok && options.noise) {
        const double a = options.noise->threshold_a[f];
        ok = feat.auto_psd_left[f] >= a && feat.auto_psd_right[f] >= a;
      }
      if (!ok) failing.push_back(f);
    }
    if (!failing.empty()) {
      std::ostringstream msg;
      msg << id.str() << ": source power is not significant at " << failing.size() << " bin(s):";
      for (std::size_t i = 0; i < std::min<std::size_t>(failing.size(), 16); ++i) msg << ' ' << failing[i];
      if (failing.size() > 16) msg << " ...";
      throw Error(msg.str());
    }
    features.col(static_cast<Eigen::Index>(m)) = feat.values;
    locations.col(static_cast<Eigen::Index>(m)) << rec.location.x, rec.location.y;
  }
  return TrainingSet(std::move(features), std::move(locations), options.grid);
}

Eigen::Index nearest_training(const TrainingSet& ts, PixelLocation x) {
  if (ts.size() == 0) throw Error("nearest_training: empty training set");
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const auto& loc = ts.locations();
  for (Eigen::Index m = 0; m < ts.size(); ++m) {
    const double dx = x.x - loc(0, m);
    const double dy = x.y - loc(1, m);
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

void save_training_set(const TrainingSet& ts, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "bindiar-training-set";
  doc["version"] = 1;
  doc["F"] = ts.bins();
  doc["M"] = ts.size();
  doc["grid_meta"] = {{"rows", ts.grid().rows}, {"cols", ts.grid().cols}, {"planes", ts.grid().planes}};
  json points = json::array();
  for (Eigen::Index m = 0; m < ts.size(); ++m) {
    std::vector<double> re(static_cast<std::size_t>(ts.bins()));
    std::vector<double> im(re.size());
    for (Eigen::Index f = 0; f < ts.bins(); ++f) {
      re[static_cast<std::size_t>(f)] = ts.features()(f, m).real();
      im[static_cast<std::size_t>(f)] = ts.features()(f, m).imag();
    }
    points.push_back({{"x", ts.locations()(0, m)}, {"y", ts.locations()(1, m)}, {"re", re}, {"im", im}});
  }
  doc["points"] = std::move(points);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << doc.dump() << '\n';
}

TrainingSet load_training_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open training set '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
    const auto bins = doc.at("F").get<Eigen::Index>();
    const auto count = doc.at("M").get<Eigen::Index>();
    const auto& points = doc.at("points");
    if (static_cast<Eigen::Index>(points.size()) != count) {
      throw Error("training set: header says M=" + std::to_string(count) + " but " +
                  std::to_string(points.size()) + " points are stored");
    }
    GridMeta grid;
    if (doc.contains("grid_meta")) {
      const auto& g = doc["grid_meta"];
      grid = {g.value("rows", 0), g.value("cols", 0), g.value("planes", 0)};
    }
    ComplexMatrix features(bins, count);
    Eigen::Matrix2Xd locations(2, count);
    for (Eigen::Index m = 0; m < count; ++m) {
      const auto& p = points[static_cast<std::size_t>(m)];
      const auto re = p.at("re").get<std::vector<double>>();
      const auto im = p.at("im").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(re.size()) != bins || static_cast<Eigen::Index>(im.size()) != bins) {
        throw Error("training set: point " + std::to_string(m) + " does not have F values");
      }
      for (Eigen::Index f = 0; f < bins; ++f) {
        features(f, m) = Complex(re[static_cast<std::size_t>(f)], im[static_cast<std::size_t>(f)]);
      }
      locations.col(m) << p.at("x").get<double>(), p.at("y").get<double>();
    }
    return TrainingSet(std::move(features), std::move(locations), grid);
  } catch (const json::exception& e) {
    throw Error("malformed training set '" + path.string() + "': " + e.what());
  }
}

int PersonTrack::visible_count() const {
  return static_cast<int>(std::count_if(visibility.begin(), visibility.end(), [](std::uint8_t v) { return v != 0; }));
}

TrackSequence read_tracks_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const int ct = table.column("t");
  const int cn = table.column("n");
  const int cx = table.column("x");
  const int cy = table.column("y");
  const int cv = table.column("visible");
  if (ct < 0 || cn < 0 || cx < 0 || cy < 0 || cv < 0) {
    throw Error("tracks file '" + path.string() + "' must have columns t,n,x,y,visible");
  }
  long long max_t = -1;
  long long max_n = -1;
  for (const auto& row : table.rows) {
    const auto t = csv::to_int(row[static_cast<std::size_t>(ct)]);
    const auto n = csv::to_int(row[static_cast<std::size_t>(cn)]);
    if (t < 0 || n < 0) throw Error("tracks: negative frame or person index");
    max_t = std::max(max_t, t);
    max_n = std::max(max_n, n);
  }
  const auto frames = static_cast<std::size_t>(max_t + 1);
  const auto persons = static_cast<int>(max_n + 1);
  TrackSequence tracks(frames);
  std::vector<std::vector<std::uint8_t>> seen(frames, std::vector<std::uint8_t>(static_cast<std::size_t>(persons), 0));
  for (auto& tr : tracks) {
    tr.positions = Eigen::Matrix2Xd::Zero(2, persons);
    tr.visibility.assign(static_cast<std::size_t>(persons), 0);
  }
  for (const auto& row : table.rows) {
    const auto t = static_cast<std::size_t>(csv::to_int(row[static_cast<std::size_t>(ct)]));
    const auto n = static_cast<int>(csv::to_int(row[static_cast<std::size_t>(cn)]));
    const auto v = csv::to_int(row[static_cast<std::size_t>(cv)]);
    if (v != 0 && v != 1) throw Error("tracks: visible must be 0 or 1");
    tracks[t].positions.col(n) << csv::to_double(row[static_cast<std::size_t>(cx)]),
        csv::to_double(row[static_cast<std::size_t>(cy)]);
    tracks[t].visibility[static_cast<std::size_t>(n)] = static_cast<std::uint8_t>(v);
    seen[t][static_cast<std::size_t>(n)] = 1;
  }
  for (std::size_t t = 0; t < frames; ++t) {
    for (int n = 0; n < persons; ++n) {
      if (!seen[t][static_cast<std::size_t>(n)]) {
        throw Error("tracks: missing row for t=" + std::to_string(t) + ", n=" + std::to_string(n));
      }
    }
  }
  return tracks;
}

void write_tracks_csv(const std::filesystem::path& path, const TrackSequence& tracks) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "t,n,x,y,visible\n";
  out.precision(10);
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& tr = tracks[t];
    for (int n = 0; n < tr.persons(); ++n) {
      out << t << ',' << n << ',' << tr.positions(0, n) << ',' << tr.positions(1, n) << ','
          << static_cast<int>(tr.visibility[static_cast<std::size_t>(n)]) << '\n';
    }
  }
}

}  // namespace bindiar
