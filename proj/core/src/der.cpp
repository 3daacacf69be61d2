#include "bindiar/der.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace bindiar {

void DiarTimeline::validate() const {
  if (!(frame_period_s > 0.0)) throw Error("timeline: frame period must be positive");
  for (const auto& f : frames) {
    for (int id : f) {
      if (id < 0) throw Error("timeline: negative person id");
    }
  }
}

DiarTimeline DiarTimeline::from_bitmasks(std::span<const StateConfig> states, double frame_period_s) {
  DiarTimeline tl;
  tl.frame_period_s = frame_period_s;
  tl.frames.reserve(states.size());
  for (const auto s : states) {
    std::vector<int> ids;
    for (int n = 0; n < 32; ++n) {
      if ((s >> n) & 1U) ids.push_back(n);
    }
    tl.frames.push_back(std::move(ids));
  }
  return tl;
}

DiarTimeline DiarTimeline::from_labels(const std::vector<std::vector<std::uint8_t>>& labels, double frame_period_s) {
  DiarTimeline tl;
  tl.frame_period_s = frame_period_s;
  for (const auto& row : labels) {
    std::vector<int> ids;
    for (std::size_t n = 0; n < row.size(); ++n) {
      if (row[n]) ids.push_back(static_cast<int>(n));
    }
    tl.frames.push_back(std::move(ids));
  }
  return tl;
}

namespace {

std::set<int> as_set(const DiarTimeline& tl, std::size_t t) {
  if (t >= tl.frames.size()) return {};
  return {tl.frames[t].begin(), tl.frames[t].end()};
}

std::vector<std::uint8_t> scored_frames(const DiarTimeline& ref, std::size_t frames, double collar_s) {
  const double p = ref.frame_period_s;
  std::vector<double> boundaries;
  for (std::size_t t = 0; t <= frames; ++t) {
    const auto before = t == 0 ? std::set<int>{} : as_set(ref, t - 1);
    const auto after = t == frames ? std::set<int>{} : as_set(ref, t);
    if (before != after) boundaries.push_back(static_cast<double>(t) * p);
  }
  std::vector<std::uint8_t> scored(frames, 1);
  if (collar_s <= 0.0) return scored;
  for (std::size_t t = 0; t < frames; ++t) {
    const double centre = (static_cast<double>(t) + 0.5) * p;
    const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), centre);
    double d = std::numeric_limits<double>::infinity();
    if (it != boundaries.end()) d = std::min(d, *it - centre);
    if (it != boundaries.begin()) d = std::min(d, centre - *(it - 1));
    if (d < collar_s) scored[t] = 0;
  }
  return scored;
}

}  // namespace

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
  // Hungarian algorithm (potentials form) on cost = -weight.
  const std::size_t n = weight.size();
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    if (weight[i - 1].size() != n) throw Error("assignment: weight matrix must be square");
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  return row_to_col;
}

std::vector<std::pair<int, int>> optimal_speaker_map(const DiarTimeline& reference, const DiarTimeline& hypothesis,
                                                     std::span<const std::uint8_t> scored) {
  std::set<int> ref_ids, hyp_ids;
  for (const auto& f : reference.frames) ref_ids.insert(f.begin(), f.end());
  for (const auto& f : hypothesis.frames) hyp_ids.insert(f.begin(), f.end());
  const std::vector<int> refs(ref_ids.begin(), ref_ids.end());
  const std::vector<int> hyps(hyp_ids.begin(), hyp_ids.end());
  const std::size_t n = std::max(refs.size(), hyps.size());
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  std::map<int, std::size_t> ref_index, hyp_index;
  for (std::size_t i = 0; i < refs.size(); ++i) ref_index[refs[i]] = i;
  for (std::size_t i = 0; i < hyps.size(); ++i) hyp_index[hyps[i]] = i;
  for (std::size_t t = 0; t < scored.size(); ++t) {
    if (!scored[t] || t >= reference.frames.size() || t >= hypothesis.frames.size()) continue;
    for (int h : hypothesis.frames[t]) {
      for (int r : reference.frames[t]) w[hyp_index[h]][ref_index[r]] += 1.0;
    }
  }
  const auto assign = max_weight_assignment(w);
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto j = static_cast<std::size_t>(assign[i]);
    out.emplace_back(hyps[i], j < refs.size() ? refs[j] : -1);
  }
  return out;
}

DerReport score_der(const DiarTimeline& reference, const DiarTimeline& hypothesis, double collar_s,
                    SpeakerMapping mapping) {
  reference.validate();
  hypothesis.validate();
  if (std::abs(reference.frame_period_s - hypothesis.frame_period_s) > 1e-12) {
    throw Error("score_der: frame periods differ (" + std::to_string(reference.frame_period_s) + " vs " +
                std::to_string(hypothesis.frame_period_s) + ")");
  }
  if (collar_s < 0.0) throw Error("score_der: collar must be non-negative");

  const std::size_t frames = std::max(reference.size(), hypothesis.size());
  const auto scored = scored_frames(reference, frames, collar_s);

  std::map<int, int> remap;
  if (mapping == SpeakerMapping::optimal) {
    for (const auto& [h, r] : optimal_speaker_map(reference, hypothesis, scored)) remap[h] = r;
  }

  long fa = 0, miss = 0, spk = 0, speech = 0;
  DerReport rep;
  for (std::size_t t = 0; t < frames; ++t) {
    if (!scored[t]) continue;
    ++rep.scored_frames;
    const auto ref = as_set(reference, t);
    auto hyp = as_set(hypothesis, t);
    if (mapping == SpeakerMapping::optimal) {
      std::set<int> mapped;
      for (int h : hyp) mapped.insert(remap.count(h) && remap[h] >= 0 ? remap[h] : -1 - h);
      hyp = std::move(mapped);
    }
    const long nref = static_cast<long>(ref.size());
    const long nhyp = static_cast<long>(hyp.size());
    long correct = 0;
    for (int r : ref) correct += static_cast<long>(hyp.count(r));
    speech += nref;
    miss += std::max(0L, nref - nhyp);
    fa += std::max(0L, nhyp - nref);
    spk += std::min(nref, nhyp) - correct;
  }
  const double p = reference.frame_period_s;
  rep.false_alarm_s = static_cast<double>(fa) * p;
  rep.miss_s = static_cast<double>(miss) * p;
  rep.speaker_error_s = static_cast<double>(spk) * p;
  rep.scored_speech_s = static_cast<double>(speech) * p;
  const long errors = fa + miss + spk;
  if (speech > 0) {
    rep.der = static_cast<double>(errors) / static_cast<double>(speech);
  } else {
    rep.der = errors == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return rep;
}

}  // namespace bindiar
