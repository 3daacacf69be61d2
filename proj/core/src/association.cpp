#include "bindiar/association.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

namespace bindiar {

double complex_gauss_density(Complex x, Complex mu, double sigma) {
  if (!(sigma > 0.0)) throw Error("complex_gauss_density: sigma must be positive");
  return std::exp(-std::norm(x - mu) / sigma) / (std::numbers::pi * sigma);
}

void FreqMixtureParams::validate() const {
  const auto c = static_cast<std::size_t>(components());
  if (priors.size() != c || variances.size() != c) throw Error("mixture params: component count mismatch");
  const double total = std::accumulate(priors.begin(), priors.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw Error("mixture params: priors do not sum to 1");
  for (std::size_t i = 0; i < c; ++i) {
    if (!(variances[i] > 0.0)) throw Error("mixture params: variances must be positive");
    if (priors[i] < 0.0) throw Error("mixture params: negative prior");
  }
  const double outlier = variances.back();
  for (std::size_t i = 0; i + 1 < c; ++i) {
    if (variances[i] > outlier) throw Error("mixture params: outlier variance below a person variance");
  }
}

FreqMixtureParams initial_params(std::span<const Complex> means, std::span<const int> person_ids,
                                 std::span<const double> person_variances, double outlier_variance) {
  if (person_variances.size() != means.size()) throw Error("initial_params: one variance per person expected");
  if (person_ids.size() != means.size()) throw Error("initial_params: one id per person expected");
  FreqMixtureParams p;
  p.means.assign(means.begin(), means.end());
  p.person_ids.assign(person_ids.begin(), person_ids.end());
  const auto c = static_cast<std::size_t>(p.components());
  p.priors.assign(c, 1.0 / static_cast<double>(c));
  p.variances.assign(person_variances.begin(), person_variances.end());
  p.variances.push_back(outlier_variance);
  p.validate();
  return p;
}

FreqMixtureParams initial_params(std::span<const Complex> means, std::span<const int> person_ids,
                                 double person_variance, double outlier_ratio) {
  if (!(person_variance > 0.0)) throw Error("initial_params: variance must be positive");
  if (outlier_ratio < 1.0) throw Error("initial_params: outlier ratio must be >= 1");
  const std::vector<double> v(means.size(), person_variance);
  return initial_params(means, person_ids, v, outlier_ratio * person_variance);
}

double person_variance_cap(Complex mean, const EmConfig& config) {
  return std::max(config.max_relative_variance * std::norm(mean), config.variance_floor);
}

namespace {

void check_sizes(std::span<const Complex> obs, std::span<const std::uint8_t> active) {
  if (obs.size() != active.size()) throw Error("EM: observation and mask lengths differ");
}

}  // namespace

FreqResponsibilities e_step(std::span<const Complex> obs, std::span<const std::uint8_t> active,
                            const FreqMixtureParams& params) {
  check_sizes(obs, active);
  const int comps = params.components();
  FreqResponsibilities out;
  out.r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(obs.size()), comps);

  std::vector<double> dens(static_cast<std::size_t>(comps));
  std::vector<double> logd(static_cast<std::size_t>(comps));
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (!active[k]) continue;
    double total = 0.0;
    double max_log = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < comps; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const double sigma = params.variances[ci];
      const double d2 = std::norm(obs[k] - params.mean(c));
      dens[ci] = params.priors[ci] * complex_gauss_density(obs[k], params.mean(c), sigma);
      logd[ci] = params.priors[ci] > 0.0
                     ? std::log(params.priors[ci]) - std::log(std::numbers::pi * sigma) - d2 / sigma
                     : -std::numeric_limits<double>::infinity();
      total += dens[ci];
      max_log = std::max(max_log, logd[ci]);
    }
    const auto row = static_cast<Eigen::Index>(k);
    if (total > 0.0 && std::isfinite(total)) {
      for (int c = 0; c < comps; ++c) out.r(row, c) = dens[static_cast<std::size_t>(c)] / total;
    } else {
      // Every density underflowed: treat the bin as an outlier.
      out.r(row, comps - 1) = 1.0;
    }
    double s = 0.0;
    for (int c = 0; c < comps; ++c) s += std::exp(logd[static_cast<std::size_t>(c)] - max_log);
    out.log_likelihood += max_log + std::log(s);
  }
  return out;
}

FreqMixtureParams m_step(std::span<const Complex> obs, std::span<const std::uint8_t> active,
                         const FreqResponsibilities& resp, const FreqMixtureParams& params, const EmConfig& config) {
  check_sizes(obs, active);
  const int comps = params.components();
  const double n_active = static_cast<double>(std::count_if(active.begin(), active.end(), [](auto a) { return a != 0; }));
  if (n_active == 0.0) return params;

  FreqMixtureParams next = params;
  const double outlier_var = params.variances.back();
  for (int c = 0; c < comps; ++c) {
    double weight = 0.0;
    double spread = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
      if (!active[k]) continue;
      const double r = resp.r(static_cast<Eigen::Index>(k), c);
      weight += r;
      spread += r * std::norm(obs[k] - params.mean(c));
    }
    const auto ci = static_cast<std::size_t>(c);
    next.priors[ci] = weight / n_active;
    if (c < params.persons() && weight > 0.0) {
      const double cap = std::min(person_variance_cap(params.mean(c), config), outlier_var);
      next.variances[ci] = std::clamp(spread / weight, config.variance_floor, std::max(cap, config.variance_floor));
    }
  }
  return next;
}

double expected_complete_loglik(std::span<const Complex> obs, std::span<const std::uint8_t> active,
                                const FreqResponsibilities& resp, const FreqMixtureParams& params) {
  check_sizes(obs, active);
  double q = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (!active[k]) continue;
    for (int c = 0; c < params.components(); ++c) {
      const double r = resp.r(static_cast<Eigen::Index>(k), c);
      if (r == 0.0) continue;
      const auto ci = static_cast<std::size_t>(c);
      const double sigma = params.variances[ci];
      q += r * (std::log(params.priors[ci]) - std::log(std::numbers::pi * sigma) -
                std::norm(obs[k] - params.mean(c)) / sigma);
    }
  }
  return q;
}

namespace {

// theta + eta (target - theta) with priors moved in log space and
// renormalized, variances in log space and clamped to the M-step box.
// Returns false when a prior has collapsed to zero and no step is possible.
bool extrapolate(const FreqMixtureParams& from, const FreqMixtureParams& to, double eta, const EmConfig& config,
                 FreqMixtureParams& out) {
  out = to;
  double total = 0.0;
  for (std::size_t c = 0; c < to.priors.size(); ++c) {
    if (!(from.priors[c] > 0.0) || !(to.priors[c] > 0.0)) return false;
    out.priors[c] = std::exp(std::log(from.priors[c]) + eta * (std::log(to.priors[c]) - std::log(from.priors[c])));
    total += out.priors[c];
  }
  for (double& p : out.priors) p /= total;
  const double outlier_var = to.variances.back();
  for (int n = 0; n < to.persons(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double cap = std::min(person_variance_cap(to.means[i], config), outlier_var);
    const double v = std::exp(std::log(from.variances[i]) + eta * (std::log(to.variances[i]) - std::log(from.variances[i])));
    out.variances[i] = std::clamp(v, config.variance_floor, std::max(cap, config.variance_floor));
  }
  return true;
}

}  // namespace

FreqFit fit_frequency(std::span<const Complex> obs, std::span<const std::uint8_t> active, FreqMixtureParams init,
                      const EmConfig& config) {
  FreqFit fit;
  fit.params = std::move(init);
  // Start inside the box the M-step maximizes over, otherwise the first
  // clamp can lower the likelihood.
  const double outlier_var = fit.params.variances.back();
  for (int n = 0; n < fit.params.persons(); ++n) {
    const double cap = std::min(person_variance_cap(fit.params.means[static_cast<std::size_t>(n)], config), outlier_var);
    auto& v = fit.params.variances[static_cast<std::size_t>(n)];
    v = std::clamp(v, config.variance_floor, std::max(cap, config.variance_floor));
  }
  fit.resp = e_step(obs, active, fit.params);
  fit.loglik_trace.push_back(fit.resp.log_likelihood);
  double eta = 1.0;
  FreqMixtureParams jump;
  for (int it = 0; it < config.max_iters; ++it) {
    const double prev = fit.loglik_trace.back();
    auto next = m_step(obs, active, fit.resp, fit.params, config);
    // Over-relaxed step, kept only if it does not lower the likelihood;
    // otherwise fall back to the plain EM update.
    bool accepted = false;
    if (config.overrelax && eta > 1.0 && extrapolate(fit.params, next, eta, config, jump)) {
      auto resp = e_step(obs, active, jump);
      if (resp.log_likelihood >= prev) {
        fit.params = std::move(jump);
        fit.resp = std::move(resp);
        eta *= config.overrelax_growth;
        accepted = true;
      }
    }
    if (!accepted) {
      eta = config.overrelax ? config.overrelax_growth : 1.0;
      fit.params = std::move(next);
      fit.resp = e_step(obs, active, fit.params);
    }
    ++fit.iterations;
    const double cur = fit.resp.log_likelihood;
    fit.loglik_trace.push_back(cur);
    if (config.check_monotone && cur < prev - config.monotone_slack) {
      throw Error("EM: observed log-likelihood decreased from " + std::to_string(prev) + " to " +
                  std::to_string(cur));
    }
    if (std::abs(cur - prev) < config.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

SliceFit fit_freq_mixtures(const BinauralSpectrogram& Y, const TrainingSet& ts, const PersonTrack& track,
                           const EmConfig& config) {
  SliceFit out;
  for (int n = 0; n < track.persons(); ++n) {
    if (!track.visible(n)) continue;
    out.person_ids.push_back(n);
    out.training_index.push_back(nearest_training(ts, track.position(n)));
  }
  const auto persons = static_cast<int>(out.person_ids.size());
  if (persons == 0) {
    out.uninformative = true;
    return out;
  }
  if (ts.bins() != Y.bins()) {
    throw Error("association: training features have " + std::to_string(ts.bins()) + " bins, slice has " +
                std::to_string(Y.bins()));
  }

  const Eigen::Index bins = Y.bins();
  const Eigen::Index frames = Y.frames();
  out.resp = Responsibilities(bins, frames, persons + 1);
  out.params.reserve(static_cast<std::size_t>(bins));
  out.diagnostics.reserve(static_cast<std::size_t>(bins));
  out.uninformative = Y.active_count() == 0;

  std::vector<Complex> means(static_cast<std::size_t>(persons));
  std::vector<Complex> obs(static_cast<std::size_t>(frames));
  std::vector<std::uint8_t> active(static_cast<std::size_t>(frames));
  std::vector<double> nearest;
  for (Eigen::Index f = 0; f < bins; ++f) {
    for (int n = 0; n < persons; ++n) {
      means[static_cast<std::size_t>(n)] = ts.features()(f, out.training_index[static_cast<std::size_t>(n)]);
    }
    nearest.clear();
    for (Eigen::Index k = 0; k < frames; ++k) {
      obs[static_cast<std::size_t>(k)] = Y.Y(f, k);
      active[static_cast<std::size_t>(k)] = Y.mask(f, k);
      if (!Y.mask(f, k)) continue;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& m : means) d = std::min(d, std::norm(Y.Y(f, k) - m));
      nearest.push_back(d);
    }

    // Shared median spread, limited per person by its cap; the outlier is
    // scaled from the widest person component.
    std::vector<double> sigma0(means.size());
    double median = std::numeric_limits<double>::infinity();
    if (!nearest.empty()) {
      const auto mid = nearest.begin() + static_cast<std::ptrdiff_t>(nearest.size() / 2);
      std::nth_element(nearest.begin(), mid, nearest.end());
      median = std::max(*mid, config.variance_floor);
    }
    for (std::size_t n = 0; n < means.size(); ++n) sigma0[n] = std::min(median, person_variance_cap(means[n], config));
    const double outlier = config.outlier_ratio * *std::max_element(sigma0.begin(), sigma0.end());
    auto init = initial_params(means, out.person_ids, sigma0, outlier);
    FreqFit fit = nearest.empty() ? FreqFit{init, e_step(obs, active, init), {}, 0, true}
                                  : fit_frequency(obs, active, std::move(init), config);
    for (Eigen::Index k = 0; k < frames; ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      for (int c = 0; c <= persons; ++c) out.resp(f, k, c) = fit.resp.r(k, c);
    }
    out.params.push_back(fit.params);
    out.diagnostics.push_back(std::move(fit));
  }
  return out;
}

std::vector<double> speaking_probabilities(const Responsibilities& resp, const Mask& mask) {
  const int persons = resp.components() - 1;
  if (persons <= 0) return {};
  if (mask.rows() != resp.bins() || mask.cols() != resp.frames()) {
    throw Error("speaking_probabilities: mask and responsibilities shapes differ");
  }
  std::vector<double> num(static_cast<std::size_t>(persons), 0.0);
  double den = 0.0;
  for (Eigen::Index f = 0; f < resp.bins(); ++f) {
    for (Eigen::Index k = 0; k < resp.frames(); ++k) {
      if (!mask(f, k)) continue;
      den += 1.0;
      for (int n = 0; n < persons; ++n) num[static_cast<std::size_t>(n)] += resp(f, k, n);
    }
  }
  if (den == 0.0) return std::vector<double>(static_cast<std::size_t>(persons), 0.5);
  for (double& v : num) v = std::clamp(v / den, 0.0, 1.0);
  return num;
}

void write_slice_debug_json(const std::filesystem::path& path, const SliceFit& fit, std::span<const double> speaking) {
  nlohmann::json doc;
  doc["person_ids"] = fit.person_ids;
  doc["training_index"] = fit.training_index;
  doc["uninformative"] = fit.uninformative;
  doc["speaking_probabilities"] = std::vector<double>(speaking.begin(), speaking.end());
  nlohmann::json freqs = nlohmann::json::array();
  for (std::size_t f = 0; f < fit.params.size(); ++f) {
    const auto& d = fit.diagnostics[f];
    freqs.push_back({{"priors", fit.params[f].priors},
                     {"variances", fit.params[f].variances},
                     {"iterations", d.iterations},
                     {"converged", d.converged}});
  }
  doc["frequencies"] = std::move(freqs);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << doc.dump(1) << '\n';
}

}  // namespace bindiar
