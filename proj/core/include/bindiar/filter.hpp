#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bindiar/types.hpp"

namespace bindiar {

/// Bit n set means person n speaks.
using StateConfig = std::uint32_t;

struct FilterConfig {
  double q = 0.8;  // probability that a visible person keeps its state
  int max_persons = 16;

  void validate() const;
};

/// P(s_cur | s_prev, v_prev, v_cur) for a single person.
double transition_prob(int s_prev, int s_cur, int v_prev, int v_cur, double q);

/// Filtering distribution over the 2^N speaking configurations.
struct FilterPosterior {
  std::vector<double> probs;
  int t = 0;

  int persons() const;
};

/// Uniform over the configurations allowed by `visible`.
FilterPosterior initial_posterior(std::span<const std::uint8_t> visible, int t = 0);

/// One step of the transition model, applied person by person.
std::vector<double> predict(const FilterPosterior& prev, std::span<const std::uint8_t> v_prev,
                            std::span<const std::uint8_t> v_cur, const FilterConfig& cfg = {});

/// Product over visible persons of p^s (1-p)^(1-s); zero if s sets an
/// invisible person's bit. p_speak has one entry per person (all N).
double config_likelihood(StateConfig s, std::span<const double> p_speak, std::span<const std::uint8_t> visible);
std::vector<double> config_likelihoods(std::span<const double> p_speak, std::span<const std::uint8_t> visible);

/// Normalized product of predictive and likelihood. If the product vanishes
/// everywhere the predictive distribution is returned and a warning logged.
FilterPosterior update(std::span<const double> predictive, std::span<const double> likelihoods, int t = 0);

/// Most probable configuration; ties go to the smallest bitmask.
StateConfig map_state(const FilterPosterior& post);

/// P(S_n = 1) for every person.
std::vector<double> speaking_marginals(const FilterPosterior& post);

struct Observation {
  std::vector<double> p_speak;
  std::vector<std::uint8_t> visible;
};

struct FilterStep {
  FilterPosterior posterior;
  StateConfig map = 0;
  std::vector<double> marginals;
};

/// Online form of run_filter.
class DiarizationFilter {
 public:
  explicit DiarizationFilter(int persons, FilterConfig cfg = {});

  const FilterStep& step(const Observation& obs);
  int persons() const { return persons_; }
  int steps() const { return t_; }

 private:
  int persons_;
  FilterConfig cfg_;
  int t_ = 0;
  std::vector<std::uint8_t> prev_visible_;
  FilterStep last_;
};

std::vector<FilterStep> run_filter(std::span<const Observation> observations, const FilterConfig& cfg = {});

}  // namespace bindiar
