#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

namespace recavg::geom3 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Vec3 e1() { return Vec3::UnitX(); }
inline Vec3 e2() { return Vec3::UnitY(); }
inline Vec3 e3() { return Vec3::UnitZ(); }

/// Skew-symmetric matrix with hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

/// Inverse of hat for a skew-symmetric matrix (antisymmetric part is used).
Vec3 vee(const Mat3& m);

/// exp(hat(v)) by the Rodrigues formula. Below an angle of 1e-6 the
/// trigonometric coefficients are replaced by their Taylor series.
Mat3 rot_exp(const Vec3& v);

/// Nearest rotation to `m` in the Frobenius norm: m (m^T m)^{-1/2}.
///
/// Throws std::domain_error if `m` is (numerically) rank deficient or if its
/// orthogonal polar factor is a reflection.
Mat3 project_so3(const Mat3& m);

/// max |R^T R - I|, entrywise.
double orthonormality_error(const Mat3& r);

/// Levi-Civita symbol on 1-based indices. Throws std::out_of_range for an
/// index outside {1, 2, 3}.
int levi_civita(int i, int j, int k);

}  // namespace recavg::geom3
