#include "bindiar/fft.hpp"

#include <algorithm>
#include <mutex>

#include <fftw3.h>

namespace bindiar {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  explicit Plans(int n) {
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(static_cast<std::size_t>(n));
    spec = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    r2c = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
  }

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(spec);
  }
};

RealFft::RealFft(int size) : size_(size) {
  if (size < 2) throw Error("RealFft: size must be at least 2");
  plans_ = std::make_unique<Plans>(size);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

std::vector<Complex> RealFft::forward(std::span<const double> input) {
  if (static_cast<int>(input.size()) != size_) {
    throw Error("RealFft::forward: input length does not match plan size");
  }
  std::copy(input.begin(), input.end(), plans_->real);
  fftw_execute(plans_->r2c);
  std::vector<Complex> out(static_cast<std::size_t>(size_ / 2 + 1));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Complex(plans_->spec[i][0], plans_->spec[i][1]);
  }
  return out;
}

std::vector<double> RealFft::inverse(std::span<const Complex> spectrum) {
  if (static_cast<int>(spectrum.size()) != size_ / 2 + 1) {
    throw Error("RealFft::inverse: spectrum length does not match plan size");
  }
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    plans_->spec[i][0] = spectrum[i].real();
    plans_->spec[i][1] = spectrum[i].imag();
  }
  fftw_execute(plans_->c2r);
  std::vector<double> out(plans_->real, plans_->real + size_);
  const double scale = 1.0 / size_;
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace bindiar
