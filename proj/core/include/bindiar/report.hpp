#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bindiar/der.hpp"
#include "bindiar/filter.hpp"

namespace bindiar {

/// A timeline together with the per-frame speaking marginals behind it.
struct TimelineTable {
  DiarTimeline timeline;
  int persons = 0;
  /// marginals[t][n]; may be empty when only the decisions are known.
  std::vector<std::vector<double>> marginals;
};

enum class ReportFormat { csv, json, svg };

ReportFormat parse_report_format(const std::string& name);

/// Columns t,map_bitmask,p_0..p_{N-1}, preceded by a "# frame_period_s=" line.
void write_timeline_csv(const std::filesystem::path& path, const TimelineTable& table);
TimelineTable read_timeline_csv(const std::filesystem::path& path);

/// Per-frame records; full posteriors are included when `steps` is given.
void write_timeline_json(const std::filesystem::path& path, const TimelineTable& table,
                         const std::vector<FilterStep>* steps = nullptr);

/// One lane per person, one rectangle per run of identical state.
void write_timeline_svg(const std::filesystem::path& path, const TimelineTable& table);

void report_timeline(const TimelineTable& table, const std::filesystem::path& path, ReportFormat format);

/// Ground-truth labels as written by the simulator (t,n,speaking).
DiarTimeline read_labels_csv(const std::filesystem::path& path);

/// Accepts either a timeline CSV or a labels CSV.
DiarTimeline read_any_timeline(const std::filesystem::path& path);

}  // namespace bindiar
