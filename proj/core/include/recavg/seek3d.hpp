#pragma once

// 3D source seeking for a rigid body with a collocated sensor.
//
// Kinematics p' = R v, R' = R hat(W) with v = sqrt(2 w) e1 and
// W = roll e1 + yaw e3, driven by the filter mu z' = c(p, t) - z:
//   yaw  = w - z'
//   roll = 2 alpha sqrt(2 w) sin(w t - z + pi/4)
//
// Four representations are provided: the original state (p, R, z), the
// intermediate frame Q = R R1^T R2^T, the R^12 embedding x = (p, q1, q2, q3)
// used for averaging, and the closed-form reduced averaged flow
// p' = Q A Q^T grad c(p).

#include "recavg/avgcore.hpp"
#include "recavg/geom3.hpp"
#include "recavg/odeint.hpp"

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace recavg::seek3d {

using geom3::Mat3;
using geom3::Vec3;
using Vector = Eigen::VectorXd;

struct SeekParams {
  double alpha = 0.125;  // roll amplitude coefficient
  double omega = 4.0 * std::numbers::pi;
  double mu = 16.0 * std::numbers::pi * std::numbers::pi;  // filter time constant

  void validate() const;
};

enum class FieldKind { static_source, orbit };

/// Parses "static" or "orbit"; throws std::invalid_argument otherwise.
FieldKind parse_field_kind(std::string_view name);
std::string_view field_kind_name(FieldKind kind);

/// Source path p*(t) = (r sin(a t), r cos(a t), r cos(b t)) for orbit fields.
struct OrbitPath {
  double radius = 2.0;
  double planar_rate = 0.05;
  double vertical_rate = 0.1;
};

struct FieldSpec {
  FieldKind kind = FieldKind::static_source;
  Vec3 source = Vec3::Zero();  // static source location
  OrbitPath orbit;
  std::optional<double> kappa;  // only used by gradient_bound_violation
};

/// c(p, t) = -log(1 + |p - p*(t)|^2 / 2) with analytic gradient.
struct SignalField {
  std::function<double(const Vec3& p, double t)> strength;
  std::function<Vec3(const Vec3& p, double t)> gradient;
  std::function<Vec3(double t)> source;
  std::optional<double> kappa;

  double c(const Vec3& p, double t) const { return strength(p, t); }
  Vec3 grad(const Vec3& p, double t) const { return gradient(p, t); }
};

SignalField signal_field(const FieldSpec& spec);
SignalField signal_field(std::string_view kind, const FieldSpec& spec = {});

/// Largest violation of c(p) - c(p*) >= -kappa |grad c(p)|^2 over a cubic grid
/// of half-width `radius` around the source at time t. Zero when satisfied.
double gradient_bound_violation(const SignalField& field, double kappa, double t,
                                double radius, int points_per_axis);

struct RigidState {
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();
  double z = 0.0;

  /// (p, R column-major, z), 13 entries.
  Vector pack() const;
  static RigidState unpack(const Vector& s);
};

/// Offset of the rotation block in packed full and transformed states.
inline constexpr std::size_t kRotationOffset = 3;
inline constexpr std::size_t kFilterIndex = 12;

struct ControlInputs {
  double roll = 0.0;   // Omega_parallel
  double yaw = 0.0;    // Omega_perp
  double z_dot = 0.0;
};

ControlInputs control_inputs(const RigidState& state, double t, const SeekParams& params,
                             const SignalField& field);

struct RigidRates {
  Vec3 p_dot;
  Mat3 R_dot;
  double z_dot;
};

RigidRates full_rhs(const RigidState& state, double t, const SeekParams& params,
                    const SignalField& field);

// Building blocks of the intermediate frame.
Mat3 fast_rotation(double tau, double z);                 // R1 = exp((tau - z) hat(e3))
Mat3 intermediate_rotation(double sigma, double alpha);   // R2 = exp(alpha sigma hat(e1 + e2))
Vec3 roll_axis(double tau, double z);                     // Omega1 = exp(2 (tau - z) hat(e3)) (e1 - e2)
Vec3 heading(double z, double sigma, double tau, double alpha);    // f = sqrt(2) R2 R1 e1
Vec3 body_rate(double z, double sigma, double tau, double alpha);  // Lambda = alpha R2 Omega1

struct TransformedRates {
  Vec3 p_dot;
  Mat3 Q_dot;
  double z_dot;
};

/// p' = sqrt(w) Q f, Q' = sqrt(w) Q hat(Lambda), z' = (c - z) / mu with
/// sigma = sqrt(w) t and tau = w t.
TransformedRates transformed_rhs(const Vec3& p, const Mat3& Q, double z, double t,
                                 const SeekParams& params, const SignalField& field);

/// R = Q R2(sigma) R1(tau, z).
Mat3 reconstruct_R(const Mat3& Q, double z, double t, const SeekParams& params);
/// Q = R R1^T R2^T.
Mat3 intermediate_frame(const Mat3& R, double z, double t, const SeekParams& params);

/// Period of the embedded field in sigma: sqrt(2) pi / alpha.
double sigma_period(double alpha);

/// Shortest time scale of the closed loop in t: 2 pi / w, the sigma period
/// divided by sqrt(w), and 2 pi mu.
double fastest_period(const SeekParams& params);

/// x = (p, q1, q2, q3).
Vector embed(const Vec3& p, const Mat3& Q);
Vec3 embedded_position(const Vector& x);
Mat3 embedded_frame(const Vector& x);

/// Coordinate field X(x, z, sigma, tau) on R^12; rotation rows use the
/// Levi-Civita expression sum_{i,k} Lambda_i eps_{ijk} q_k.
Vector embedded_field(const Vector& x, double z, double sigma, double tau, double alpha);

/// D_x X (12 x 12) and D_z X (12 x 1).
Eigen::MatrixXd embedded_field_jacobian_x(double z, double sigma, double tau, double alpha);
Eigen::MatrixXd embedded_field_jacobian_z(const Vector& x, double z, double sigma, double tau,
                                          double alpha);

enum class JacobianMode { analytic, finite_difference };

/// The embedding as a singular system: f1 = X, f2 = 0, g = c(p) - z,
/// phi = c(p), T1 = sqrt(2) pi / alpha, T2 = 2 pi. With
/// JacobianMode::finite_difference no analytic Jacobians are attached.
avgcore::SingularSystem embedded_system(const SeekParams& params, const SignalField& field,
                                        JacobianMode mode = JacobianMode::analytic);

/// A = 1/4 [[3, 1, 0], [1, 3, 0], [0, 0, 2]].
const Mat3& averaged_gain();

struct AMatrixResult {
  Mat3 A = Mat3::Zero();
  double rotation_residual = 0.0;  // max |rotation rows of the averaged field|
  double fit_residual = 0.0;       // max residual of the least-squares fit, relative
  int probes = 0;
};

class ConventionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recovers A from the numerically averaged embedded system by probing
/// random (p, Q) and fitting translation = Q A Q^T grad c(p). Throws
/// ConventionError if the fit residual exceeds `fit_tolerance`.
AMatrixResult compute_A_numeric(const SeekParams& params,
                                const avgcore::QuadratureSettings& quad = {}, int probes = 24,
                                std::uint64_t seed = 20211, double fit_tolerance = 1e-6,
                                JacobianMode mode = JacobianMode::analytic);

struct RoraRates {
  Vec3 p_dot;
  Mat3 Q_dot;
  double z;  // filter value on the slow manifold, c(p, t)
};

RoraRates rora_rhs(const Vec3& p, const Mat3& Q, double t, const SignalField& field);

/// Closed-form reduced averaged field on the R^12 embedding.
avgcore::AveragedSystem rora_system(const SignalField& field);

// Simulation in each representation. Full and transformed states are packed
// as (p, 3x3 column-major, z); the reduced averaged state is (p, q1, q2, q3).
// tf is the horizon, so samples cover [t0, t0 + tf].

odeint::Rhs full_system_rhs(const SeekParams& params, const SignalField& field);
odeint::Rhs transformed_system_rhs(const SeekParams& params, const SignalField& field);

odeint::Trajectory simulate_full(const SeekParams& params, const SignalField& field,
                                 const RigidState& initial, double t0, double tf,
                                 const odeint::StepPlan& plan,
                                 const odeint::IntegratorSettings& settings);
odeint::Trajectory simulate_transformed(const SeekParams& params, const SignalField& field,
                                        const Vec3& p0, const Mat3& Q0, double z0, double t0,
                                        double tf, const odeint::StepPlan& plan,
                                        const odeint::IntegratorSettings& settings);
odeint::Trajectory simulate_rora(const SignalField& field, const Vec3& p0, const Mat3& Q0,
                                 double t0, double tf, const odeint::StepPlan& plan,
                                 const odeint::IntegratorSettings& settings);

}  // namespace recavg::seek3d
