#include "recavg/test_systems.hpp"

#include <cmath>

namespace recavg::avgcore {

TwoScaleSystem linear_sincos_system(const Matrix& b1, const Matrix& b2, double omega) {
  const int n = static_cast<int>(b1.rows());
  TwoScaleField f1;
  f1.dim = n;
  f1.T1 = 1.0;
  f1.T2 = 2.0 * std::numbers::pi;
  f1.eval = [b1, b2](const Vector& x, double, double, double tau) -> Vector {
    return std::sin(tau) * (b1 * x) + std::cos(tau) * (b2 * x);
  };
  f1.jacobian = [b1, b2](const Vector&, double, double, double tau) -> Matrix {
    return std::sin(tau) * b1 + std::cos(tau) * b2;
  };
  TwoScaleField f2 = TwoScaleField::zero(n);
  f2.T1 = 1.0;
  return TwoScaleSystem(std::move(f1), std::move(f2), omega);
}

TwoScaleSystem sincos_system(double omega) {
  Matrix b1(2, 2), b2(2, 2);
  b1 << 0.0, 1.0, 0.0, 0.0;
  b2 << 0.0, 0.0, 1.0, 0.0;
  return linear_sincos_system(b1, b2, omega);
}

Matrix linear_sincos_average(const Matrix& b1, const Matrix& b2) {
  return -0.5 * (b2 * b1 - b1 * b2);
}

Matrix sincos_average() {
  Matrix b1(2, 2), b2(2, 2);
  b1 << 0.0, 1.0, 0.0, 0.0;
  b2 << 0.0, 0.0, 1.0, 0.0;
  return linear_sincos_average(b1, b2);
}

}  // namespace recavg::avgcore
