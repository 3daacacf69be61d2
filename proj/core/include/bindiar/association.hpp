#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bindiar/alignment.hpp"
#include "bindiar/signal.hpp"

namespace bindiar {

/// Circular complex-normal density (pi sigma)^-1 exp(-|x - mu|^2 / sigma).
double complex_gauss_density(Complex x, Complex mu, double sigma);

struct EmConfig {
  double tol = 1e-6;  // absolute change of the observed log-likelihood
  int max_iters = 50;
  /// Outlier variance as a multiple of the initial person variance.
  double outlier_ratio = 100.0;
  double variance_floor = 1e-8;
  /// Person n's variance never exceeds this multiple of |W_n|^2, so a person
  /// component cannot widen until it swallows noise-only bins. Relative, since
  /// errors in the ratio feature scale with its magnitude.
  double max_relative_variance = 0.1;
  /// Throw if the observed log-likelihood ever decreases by more than
  /// monotone_slack between iterations.
  bool check_monotone = false;
  double monotone_slack = 1e-9;
  /// Adaptive over-relaxation: each accepted extrapolated step grows the
  /// step length by overrelax_growth; a step that would lower the
  /// likelihood is replaced by the plain EM update and the length reset.
  bool overrelax = true;
  double overrelax_growth = 1.5;
};

/// Mixture parameters at one frequency: components 0..N-1 are the visible
/// persons (means pinned to training features), component N is the
/// zero-mean outlier.
struct FreqMixtureParams {
  std::vector<double> priors;
  std::vector<double> variances;
  std::vector<Complex> means;
  std::vector<int> person_ids;

  int persons() const { return static_cast<int>(means.size()); }
  int components() const { return persons() + 1; }
  Complex mean(int c) const { return c < persons() ? means[static_cast<std::size_t>(c)] : Complex{}; }

  /// Throws unless priors sum to one, variances are positive and the outlier
  /// variance dominates every person variance.
  void validate() const;
};

/// Equal priors, every person variance = person_variance, outlier variance
/// = ratio * person_variance.
FreqMixtureParams initial_params(std::span<const Complex> means, std::span<const int> person_ids,
                                 double person_variance, double outlier_ratio);
/// Equal priors with explicit per-person and outlier variances.
FreqMixtureParams initial_params(std::span<const Complex> means, std::span<const int> person_ids,
                                 std::span<const double> person_variances, double outlier_variance);

/// Upper bound on the variance of a person component anchored at `mean`.
double person_variance_cap(Complex mean, const EmConfig& config);

/// Posterior assignment probabilities r[k, c] at a single frequency.
struct FreqResponsibilities {
  Eigen::MatrixXd r;          // frames x components; inactive rows are zero
  double log_likelihood = 0;  // sum over active frames of log sum_c pi_c N_c
};

FreqResponsibilities e_step(std::span<const Complex> obs, std::span<const std::uint8_t> active,
                            const FreqMixtureParams& params);

/// Person variances and all priors re-estimated from the responsibilities;
/// the outlier variance is held fixed. Parameters are returned unchanged
/// when no frame is active.
FreqMixtureParams m_step(std::span<const Complex> obs, std::span<const std::uint8_t> active,
                         const FreqResponsibilities& resp, const FreqMixtureParams& params,
                         const EmConfig& config = {});

/// Expected complete-data log-likelihood of `params` under fixed responsibilities.
double expected_complete_loglik(std::span<const Complex> obs, std::span<const std::uint8_t> active,
                                const FreqResponsibilities& resp, const FreqMixtureParams& params);

struct FreqFit {
  FreqMixtureParams params;
  FreqResponsibilities resp;
  std::vector<double> loglik_trace;  // observed log-likelihood after each E-step
  int iterations = 0;
  bool converged = false;
};

/// Alternates e_step / m_step from `init` until the log-likelihood changes by
/// less than config.tol or config.max_iters is reached.
FreqFit fit_frequency(std::span<const Complex> obs, std::span<const std::uint8_t> active, FreqMixtureParams init,
                      const EmConfig& config = {});

/// Responsibilities over a whole binaural spectrogram, F x K x C.
class Responsibilities {
 public:
  Responsibilities() = default;
  Responsibilities(Eigen::Index bins, Eigen::Index frames, int components)
      : bins_(bins), frames_(frames), components_(components),
        data_(static_cast<std::size_t>(bins * frames * components), 0.0) {}

  Eigen::Index bins() const { return bins_; }
  Eigen::Index frames() const { return frames_; }
  int components() const { return components_; }

  double& operator()(Eigen::Index f, Eigen::Index k, int c) { return data_[index(f, k, c)]; }
  double operator()(Eigen::Index f, Eigen::Index k, int c) const { return data_[index(f, k, c)]; }

 private:
  std::size_t index(Eigen::Index f, Eigen::Index k, int c) const {
    return static_cast<std::size_t>((f * frames_ + k) * components_ + c);
  }
  Eigen::Index bins_ = 0;
  Eigen::Index frames_ = 0;
  int components_ = 0;
  std::vector<double> data_;
};

/// Result of fitting every frequency of one time slice.
struct SliceFit {
  std::vector<FreqMixtureParams> params;  // one per frequency
  Responsibilities resp;
  std::vector<int> person_ids;  // visible persons, in component order
  std::vector<Eigen::Index> training_index;
  std::vector<FreqFit> diagnostics;  // per frequency; loglik traces
  bool uninformative = false;        // no active bin anywhere in the slice
};

/// Anchors one component per visible person at the training feature nearest
/// to its image position and fits every frequency independently.
SliceFit fit_freq_mixtures(const BinauralSpectrogram& Y, const TrainingSet& ts, const PersonTrack& track,
                           const EmConfig& config = {});

/// P_n = sum_{f,k} A r_n / sum_{f,k} A for each visible person in component
/// order; 0.5 for every person when the mask is empty.
std::vector<double> speaking_probabilities(const Responsibilities& resp, const Mask& mask);

/// Per-frequency priors/variances and the aggregated speaking probabilities.
void write_slice_debug_json(const std::filesystem::path& path, const SliceFit& fit,
                            std::span<const double> speaking);

}  // namespace bindiar
