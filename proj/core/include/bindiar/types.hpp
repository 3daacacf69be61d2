#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bindiar {

/// Thrown for every contract violation and I/O failure in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Complex = std::complex<double>;

/// Frequency bins along rows, frames along columns.
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Pixel coordinates on the image plane.
struct PixelLocation {
  double x = 0.0;
  double y = 0.0;
};

struct ImageSize {
  int width = 1920;
  int height = 1200;

  bool contains(PixelLocation p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height;
  }
};

/// Power below which a channel is treated as carrying no signal.
inline constexpr double kTinyPower = 1e-200;

}  // namespace bindiar
