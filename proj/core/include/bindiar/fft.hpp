#pragma once

#include <memory>
#include <span>
#include <vector>

#include "bindiar/types.hpp"

namespace bindiar {

/// Real-to-complex / complex-to-real FFT of a fixed length, backed by FFTW.
///
/// Plans are created with FFTW_ESTIMATE so results are reproducible from run
/// to run. An instance is not safe to share between threads; create one per
/// thread instead.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return size_; }

  /// Returns size/2 + 1 unnormalized coefficients.
  std::vector<Complex> forward(std::span<const double> input);

  /// Inverse of forward(), normalized so inverse(forward(x)) == x.
  std::vector<double> inverse(std::span<const Complex> spectrum);

 private:
  struct Plans;
  int size_ = 0;
  std::unique_ptr<Plans> plans_;
};

}  // namespace bindiar
