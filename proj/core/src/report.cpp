#include "bindiar/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"

namespace bindiar {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

StateConfig bitmask(const std::vector<int>& ids) {
  StateConfig s = 0;
  for (int id : ids) s |= StateConfig{1} << id;
  return s;
}

int persons_in(const TimelineTable& table) {
  int n = table.persons;
  for (const auto& f : table.timeline.frames) {
    for (int id : f) n = std::max(n, id + 1);
  }
  return n;
}

double frame_period(const csv::Table& t, const std::filesystem::path& path) {
  const auto it = t.meta.find("frame_period_s");
  if (it == t.meta.end()) throw Error("'" + path.string() + "' lacks a '# frame_period_s=' line");
  return csv::to_double(it->second);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "svg") return ReportFormat::svg;
  throw Error("unknown report format '" + name + "' (csv, json, svg)");
}

void write_timeline_csv(const std::filesystem::path& path, const TimelineTable& table) {
  const int persons = persons_in(table);
  if (persons > 32) throw Error("timeline: more than 32 persons cannot be encoded as a bitmask");
  auto out = open_out(path);
  out << "# frame_period_s=" << fmt(table.timeline.frame_period_s) << '\n';
  out << "t,map_bitmask";
  for (int n = 0; n < persons; ++n) out << ",p_" << n;
  out << '\n';
  for (std::size_t t = 0; t < table.timeline.size(); ++t) {
    out << t << ',' << bitmask(table.timeline.frames[t]);
    for (int n = 0; n < persons; ++n) {
      const bool have = t < table.marginals.size() && static_cast<std::size_t>(n) < table.marginals[t].size();
      const double p = have ? table.marginals[t][static_cast<std::size_t>(n)]
                            : (std::count(table.timeline.frames[t].begin(), table.timeline.frames[t].end(), n) ? 1.0 : 0.0);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

TimelineTable read_timeline_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const int ct = t.column("t");
  const int cb = t.column("map_bitmask");
  if (ct < 0 || cb < 0) throw Error("'" + path.string() + "' is not a timeline (needs t,map_bitmask)");
  TimelineTable table;
  table.timeline.frame_period_s = frame_period(t, path);
  std::vector<int> pcols;
  for (int n = 0;; ++n) {
    const int c = t.column("p_" + std::to_string(n));
    if (c < 0) break;
    pcols.push_back(c);
  }
  table.persons = static_cast<int>(pcols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (csv::to_int(row[static_cast<std::size_t>(ct)]) != static_cast<long long>(r)) {
      throw Error("'" + path.string() + "': frames must be listed in order starting at 0");
    }
    const auto mask = csv::to_int(row[static_cast<std::size_t>(cb)]);
    if (mask < 0) throw Error("'" + path.string() + "': negative bitmask");
    std::vector<int> ids;
    for (int n = 0; n < 32; ++n) {
      if ((mask >> n) & 1) ids.push_back(n);
    }
    table.timeline.frames.push_back(std::move(ids));
    std::vector<double> m;
    for (int c : pcols) m.push_back(csv::to_double(row[static_cast<std::size_t>(c)]));
    table.marginals.push_back(std::move(m));
  }
  return table;
}

void write_timeline_json(const std::filesystem::path& path, const TimelineTable& table,
                         const std::vector<FilterStep>* steps) {
  nlohmann::json doc;
  doc["frame_period_s"] = table.timeline.frame_period_s;
  doc["persons"] = persons_in(table);
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t t = 0; t < table.timeline.size(); ++t) {
    nlohmann::json f;
    f["t"] = t;
    f["speakers"] = table.timeline.frames[t];
    f["map_bitmask"] = bitmask(table.timeline.frames[t]);
    if (t < table.marginals.size()) f["marginals"] = table.marginals[t];
    if (steps && t < steps->size()) f["posterior"] = (*steps)[t].posterior.probs;
    frames.push_back(std::move(f));
  }
  doc["frames"] = std::move(frames);
  auto out = open_out(path);
  out << doc.dump(1) << '\n';
}

void write_timeline_svg(const std::filesystem::path& path, const TimelineTable& table) {
  const auto& tl = table.timeline;
  if (tl.size() == 0) throw Error("svg report needs a non-empty timeline");
  const int persons = std::max(1, persons_in(table));
  static constexpr std::array<const char*, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                     "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  const double px_per_frame = std::clamp(1200.0 / static_cast<double>(tl.size()), 0.25, 8.0);
  const double lane_h = 24.0;
  const double left = 80.0;
  const double top = 20.0;
  const double width = left + px_per_frame * static_cast<double>(tl.size()) + 20.0;
  const double height = top + lane_h * persons + 40.0;

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int n = 0; n < persons; ++n) {
    const double y = top + lane_h * n;
    out << "<g class=\"lane\" data-person=\"" << n << "\">\n";
    out << "<text x=\"8\" y=\"" << fmt(y + lane_h * 0.65) << "\">person " << n << "</text>\n";
    std::size_t start = 0;
    auto speaking = [&](std::size_t t) {
      const auto& f = tl.frames[t];
      return std::find(f.begin(), f.end(), n) != f.end();
    };
    for (std::size_t t = 1; t <= tl.size(); ++t) {
      if (t < tl.size() && speaking(t) == speaking(start)) continue;
      const bool on = speaking(start);
      out << "<rect class=\"segment\" x=\"" << fmt(left + px_per_frame * static_cast<double>(start)) << "\" y=\""
          << fmt(y + 2) << "\" width=\"" << fmt(px_per_frame * static_cast<double>(t - start)) << "\" height=\""
          << fmt(lane_h - 4) << "\" fill=\"" << (on ? palette[static_cast<std::size_t>(n) % palette.size()] : "#e6e6e6")
          << "\"><title>" << (on ? "speaking" : "silent") << ' ' << fmt(static_cast<double>(start) * tl.frame_period_s)
          << "-" << fmt(static_cast<double>(t) * tl.frame_period_s) << " s</title></rect>\n";
      start = t;
    }
    out << "</g>\n";
  }
  const double axis_y = top + lane_h * persons + 16.0;
  out << "<text x=\"" << fmt(left) << "\" y=\"" << fmt(axis_y) << "\">0 s</text>\n";
  out << "<text x=\"" << fmt(width - 20.0) << "\" y=\"" << fmt(axis_y) << "\" text-anchor=\"end\">"
      << fmt(tl.duration_s()) << " s</text>\n";
  out << "</svg>\n";
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void report_timeline(const TimelineTable& table, const std::filesystem::path& path, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv:
      write_timeline_csv(path, table);
      break;
    case ReportFormat::json:
      write_timeline_json(path, table);
      break;
    case ReportFormat::svg:
      write_timeline_svg(path, table);
      break;
  }
}

DiarTimeline read_labels_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const int ct = t.column("t");
  const int cn = t.column("n");
  const int cs = t.column("speaking");
  if (ct < 0 || cn < 0 || cs < 0) throw Error("'" + path.string() + "' is not a labels file (needs t,n,speaking)");
  DiarTimeline tl;
  tl.frame_period_s = frame_period(t, path);
  for (const auto& row : t.rows) {
    const auto frame = csv::to_int(row[static_cast<std::size_t>(ct)]);
    const auto person = csv::to_int(row[static_cast<std::size_t>(cn)]);
    if (frame < 0 || person < 0) throw Error("'" + path.string() + "': negative index");
    if (static_cast<std::size_t>(frame) >= tl.frames.size()) tl.frames.resize(static_cast<std::size_t>(frame) + 1);
    if (csv::to_int(row[static_cast<std::size_t>(cs)]) != 0) {
      tl.frames[static_cast<std::size_t>(frame)].push_back(static_cast<int>(person));
    }
  }
  for (auto& f : tl.frames) std::sort(f.begin(), f.end());
  return tl;
}

DiarTimeline read_any_timeline(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  if (t.column("map_bitmask") >= 0) return read_timeline_csv(path).timeline;
  return read_labels_csv(path);
}

}  // namespace bindiar
