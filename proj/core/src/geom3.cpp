#include "recavg/geom3.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace recavg::geom3 {

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 rot_exp(const Vec3& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;  // sin(theta) / theta
  double b;  // (1 - cos(theta)) / theta^2
  if (theta < 1e-6) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = hat(v);
  return Mat3::Identity() + a * k + b * (k * k);
}

Mat3 project_so3(const Mat3& m) {
  if (!m.allFinite()) {
    throw std::domain_error("project_so3: non-finite matrix");
  }
  const Mat3 gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw std::domain_error("project_so3: eigen decomposition failed");
  }
  const Vec3 lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 1e-12 * lambda.maxCoeff()) || lambda.maxCoeff() <= 0.0) {
    throw std::domain_error("project_so3: rank-deficient matrix");
  }
  if (m.determinant() <= 0.0) {
    throw std::domain_error("project_so3: polar factor is a reflection");
  }
  const Vec3 inv_sqrt = lambda.cwiseSqrt().cwiseInverse();
  const Mat3& v = eig.eigenvectors();
  return m * (v * inv_sqrt.asDiagonal() * v.transpose());
}

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

int levi_civita(int i, int j, int k) {
  for (int idx : {i, j, k}) {
    if (idx < 1 || idx > 3) {
      throw std::out_of_range("levi_civita: index " + std::to_string(idx) +
                              " outside {1,2,3}");
    }
  }
  // (i-j)(j-k)(k-i)/2 is the sign of the permutation on {1,2,3}, 0 on repeats.
  return (i - j) * (j - k) * (k - i) / 2;
}

}  // namespace recavg::geom3
