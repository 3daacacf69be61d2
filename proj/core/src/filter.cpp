#include "bindiar/filter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

namespace bindiar {

void FilterConfig::validate() const {
  if (!(q >= 0.0 && q <= 1.0)) throw Error("filter: q must lie in [0, 1]");
  if (max_persons < 0 || max_persons > 30) throw Error("filter: max_persons must lie in [0, 30]");
}

double transition_prob(int s_prev, int s_cur, int v_prev, int v_cur, double q) {
  if (!v_cur) return s_cur == 0 ? 1.0 : 0.0;
  if (!v_prev) return 0.5;
  return s_prev == s_cur ? q : 1.0 - q;
}

int FilterPosterior::persons() const {
  if (probs.empty()) return 0;
  return std::countr_zero(probs.size());
}

namespace {

std::size_t state_count(std::size_t persons, const FilterConfig* cfg = nullptr) {
  const int limit = cfg ? cfg->max_persons : 30;
  if (persons > static_cast<std::size_t>(limit)) {
    throw Error("filter: " + std::to_string(persons) + " persons exceeds the limit of " + std::to_string(limit) +
                " (the state space has 2^N configurations)");
  }
  return std::size_t{1} << persons;
}

StateConfig invisible_bits(std::span<const std::uint8_t> visible) {
  StateConfig bits = 0;
  for (std::size_t n = 0; n < visible.size(); ++n) {
    if (!visible[n]) bits |= StateConfig{1} << n;
  }
  return bits;
}

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(std::string("filter: ") + what + " has " + std::to_string(got) + " entries, expected " +
                std::to_string(want));
  }
}

}  // namespace

FilterPosterior initial_posterior(std::span<const std::uint8_t> visible, int t) {
  const std::size_t states = state_count(visible.size());
  const StateConfig forbidden = invisible_bits(visible);
  FilterPosterior post;
  post.t = t;
  post.probs.assign(states, 0.0);
  const double p = 1.0 / static_cast<double>(std::size_t{1} << (visible.size() - std::popcount(forbidden)));
  for (std::size_t s = 0; s < states; ++s) {
    if ((s & forbidden) == 0) post.probs[s] = p;
  }
  return post;
}

std::vector<double> predict(const FilterPosterior& prev, std::span<const std::uint8_t> v_prev,
                            std::span<const std::uint8_t> v_cur, const FilterConfig& cfg) {
  cfg.validate();
  const std::size_t persons = v_cur.size();
  const std::size_t states = state_count(persons, &cfg);
  check_size(v_prev.size(), persons, "previous visibility");
  check_size(prev.probs.size(), states, "posterior");

  // The kernel is a product over persons, so it is applied one bit at a time.
  std::vector<double> cur = prev.probs;
  for (std::size_t n = 0; n < persons; ++n) {
    const std::size_t bit = std::size_t{1} << n;
    double k[2][2];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) k[a][b] = transition_prob(a, b, v_prev[n], v_cur[n], cfg.q);
    }
    for (std::size_t s = 0; s < states; ++s) {
      if (s & bit) continue;
      const double p0 = cur[s];
      const double p1 = cur[s | bit];
      cur[s] = k[0][0] * p0 + k[1][0] * p1;
      cur[s | bit] = k[0][1] * p0 + k[1][1] * p1;
    }
  }
  return cur;
}

double config_likelihood(StateConfig s, std::span<const double> p_speak, std::span<const std::uint8_t> visible) {
  check_size(p_speak.size(), visible.size(), "speaking probabilities");
  double l = 1.0;
  for (std::size_t n = 0; n < visible.size(); ++n) {
    const bool on = (s >> n) & 1U;
    if (!visible[n]) {
      if (on) return 0.0;
      continue;
    }
    const double p = std::clamp(p_speak[n], 0.0, 1.0);
    l *= on ? p : 1.0 - p;
  }
  return l;
}

std::vector<double> config_likelihoods(std::span<const double> p_speak, std::span<const std::uint8_t> visible) {
  const std::size_t states = state_count(visible.size());
  std::vector<double> out(states);
  for (std::size_t s = 0; s < states; ++s) out[s] = config_likelihood(static_cast<StateConfig>(s), p_speak, visible);
  return out;
}

FilterPosterior update(std::span<const double> predictive, std::span<const double> likelihoods, int t) {
  check_size(likelihoods.size(), predictive.size(), "likelihood table");
  FilterPosterior post;
  post.t = t;
  post.probs.resize(predictive.size());
  double z = 0.0;
  for (std::size_t s = 0; s < predictive.size(); ++s) {
    post.probs[s] = predictive[s] * likelihoods[s];
    z += post.probs[s];
  }
  if (!(z > 0.0) || !std::isfinite(z)) {
    spdlog::warn("filter: observation has zero likelihood under the prediction at t={}, keeping the prediction", t);
    post.probs.assign(predictive.begin(), predictive.end());
    z = std::accumulate(post.probs.begin(), post.probs.end(), 0.0);
  }
  for (double& p : post.probs) p /= z;
  return post;
}

StateConfig map_state(const FilterPosterior& post) {
  if (post.probs.empty()) throw Error("map_state: empty posterior");
  const auto it = std::max_element(post.probs.begin(), post.probs.end());
  return static_cast<StateConfig>(it - post.probs.begin());
}

std::vector<double> speaking_marginals(const FilterPosterior& post) {
  const int persons = post.persons();
  std::vector<double> m(static_cast<std::size_t>(persons), 0.0);
  for (std::size_t s = 0; s < post.probs.size(); ++s) {
    for (int n = 0; n < persons; ++n) {
      if ((s >> n) & 1U) m[static_cast<std::size_t>(n)] += post.probs[s];
    }
  }
  return m;
}

DiarizationFilter::DiarizationFilter(int persons, FilterConfig cfg) : persons_(persons), cfg_(cfg) {
  cfg_.validate();
  if (persons < 0) throw Error("filter: negative person count");
  state_count(static_cast<std::size_t>(persons), &cfg_);
}

const FilterStep& DiarizationFilter::step(const Observation& obs) {
  check_size(obs.visible.size(), static_cast<std::size_t>(persons_), "visibility");
  const auto lik = config_likelihoods(obs.p_speak, obs.visible);
  if (t_ == 0) {
    last_.posterior = update(initial_posterior(obs.visible, t_).probs, lik, t_);
  } else {
    last_.posterior = update(predict(last_.posterior, prev_visible_, obs.visible, cfg_), lik, t_);
  }
  last_.map = map_state(last_.posterior);
  last_.marginals = speaking_marginals(last_.posterior);
  prev_visible_ = obs.visible;
  ++t_;
  return last_;
}

std::vector<FilterStep> run_filter(std::span<const Observation> observations, const FilterConfig& cfg) {
  std::vector<FilterStep> out;
  if (observations.empty()) return out;
  DiarizationFilter filter(static_cast<int>(observations.front().visible.size()), cfg);
  out.reserve(observations.size());
  for (const auto& obs : observations) out.push_back(filter.step(obs));
  return out;
}

}  // namespace bindiar
