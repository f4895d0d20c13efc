#include "recavg/seek3d.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace recavg::seek3d {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
  }
}

SignalField log_field(std::function<Vec3(double)> source, std::optional<double> kappa) {
  SignalField field;
  field.source = source;
  field.kappa = kappa;
  field.strength = [source](const Vec3& p, double t) {
    const Vec3 d = p - source(t);
    return -std::log1p(0.5 * d.squaredNorm());
  };
  field.gradient = [source](const Vec3& p, double t) -> Vec3 {
    const Vec3 d = p - source(t);
    return -d / (1.0 + 0.5 * d.squaredNorm());
  };
  return field;
}

}  // namespace

void SeekParams::validate() const {
  require_positive(alpha, "alpha");
  require_positive(omega, "omega");
  require_positive(mu, "mu");
}

FieldKind parse_field_kind(std::string_view name) {
  if (name == "static") return FieldKind::static_source;
  if (name == "orbit") return FieldKind::orbit;
  throw std::invalid_argument("unknown signal field kind '" + std::string(name) +
                              "' (expected 'static' or 'orbit')");
}

std::string_view field_kind_name(FieldKind kind) {
  return kind == FieldKind::static_source ? "static" : "orbit";
}

SignalField signal_field(const FieldSpec& spec) {
  if (spec.kind == FieldKind::static_source) {
    const Vec3 source = spec.source;
    return log_field([source](double) { return source; }, spec.kappa);
  }
  const OrbitPath o = spec.orbit;
  return log_field(
      [o](double t) {
        return Vec3(o.radius * std::sin(o.planar_rate * t), o.radius * std::cos(o.planar_rate * t),
                    o.radius * std::cos(o.vertical_rate * t));
      },
      spec.kappa);
}

SignalField signal_field(std::string_view kind, const FieldSpec& spec) {
  FieldSpec s = spec;
  s.kind = parse_field_kind(kind);
  return signal_field(s);
}

double gradient_bound_violation(const SignalField& field, double kappa, double t, double radius,
                                int points_per_axis) {
  if (points_per_axis < 2) throw std::invalid_argument("grid needs >= 2 points per axis");
  const Vec3 center = field.source(t);
  const double c_star = field.c(center, t);
  double worst = 0.0;
  const double h = 2.0 * radius / (points_per_axis - 1);
  for (int i = 0; i < points_per_axis; ++i) {
    for (int j = 0; j < points_per_axis; ++j) {
      for (int k = 0; k < points_per_axis; ++k) {
        const Vec3 p = center + Vec3(-radius + i * h, -radius + j * h, -radius + k * h);
        const double lhs = field.c(p, t) - c_star;
        const double rhs = -kappa * field.grad(p, t).squaredNorm();
        worst = std::max(worst, rhs - lhs);
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Original representation

Vector RigidState::pack() const {
  Vector s(13);
  s.head<3>() = p;
  s.segment<9>(kRotationOffset) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(R.data());
  s[kFilterIndex] = z;
  return s;
}

RigidState RigidState::unpack(const Vector& s) {
  if (s.size() != 13) throw std::invalid_argument("rigid state must have 13 entries");
  RigidState out;
  out.p = s.head<3>();
  out.R = Eigen::Map<const Mat3>(s.data() + kRotationOffset);
  out.z = s[kFilterIndex];
  return out;
}

ControlInputs control_inputs(const RigidState& state, double t, const SeekParams& params,
                             const SignalField& field) {
  ControlInputs u;
  u.z_dot = (field.c(state.p, t) - state.z) / params.mu;
  u.yaw = params.omega - u.z_dot;
  u.roll = 2.0 * params.alpha * std::sqrt(2.0 * params.omega) *
           std::sin(params.omega * t - state.z + kPi / 4.0);
  return u;
}

RigidRates full_rhs(const RigidState& state, double t, const SeekParams& params,
                    const SignalField& field) {
  const ControlInputs u = control_inputs(state, t, params, field);
  const Vec3 body_omega = u.roll * geom3::e1() + u.yaw * geom3::e3();
  return RigidRates{std::sqrt(2.0 * params.omega) * state.R.col(0),
                    state.R * geom3::hat(body_omega), u.z_dot};
}

// ---------------------------------------------------------------------------
// Intermediate frame

Mat3 fast_rotation(double tau, double z) { return geom3::rot_exp((tau - z) * geom3::e3()); }

Mat3 intermediate_rotation(double sigma, double alpha) {
  return geom3::rot_exp(alpha * sigma * (geom3::e1() + geom3::e2()));
}

Vec3 roll_axis(double tau, double z) {
  return geom3::rot_exp(2.0 * (tau - z) * geom3::e3()) * (geom3::e1() - geom3::e2());
}

Vec3 heading(double z, double sigma, double tau, double alpha) {
  return std::sqrt(2.0) * (intermediate_rotation(sigma, alpha) * fast_rotation(tau, z).col(0));
}

Vec3 body_rate(double z, double sigma, double tau, double alpha) {
  return alpha * (intermediate_rotation(sigma, alpha) * roll_axis(tau, z));
}

TransformedRates transformed_rhs(const Vec3& p, const Mat3& Q, double z, double t,
                                 const SeekParams& params, const SignalField& field) {
  const double rs = std::sqrt(params.omega);
  const double sigma = rs * t;
  const double tau = params.omega * t;
  return TransformedRates{rs * (Q * heading(z, sigma, tau, params.alpha)),
                          rs * (Q * geom3::hat(body_rate(z, sigma, tau, params.alpha))),
                          (field.c(p, t) - z) / params.mu};
}

Mat3 reconstruct_R(const Mat3& Q, double z, double t, const SeekParams& params) {
  const double sigma = std::sqrt(params.omega) * t;
  const double tau = params.omega * t;
  return Q * intermediate_rotation(sigma, params.alpha) * fast_rotation(tau, z);
}

Mat3 intermediate_frame(const Mat3& R, double z, double t, const SeekParams& params) {
  const double sigma = std::sqrt(params.omega) * t;
  const double tau = params.omega * t;
  return R * fast_rotation(tau, z).transpose() *
         intermediate_rotation(sigma, params.alpha).transpose();
}

double sigma_period(double alpha) {
  require_positive(alpha, "alpha");
  return std::sqrt(2.0) * kPi / alpha;
}

double fastest_period(const SeekParams& params) {
  params.validate();
  return std::min({2.0 * kPi / params.omega, sigma_period(params.alpha) / std::sqrt(params.omega),
                   2.0 * kPi * params.mu});
}

// ---------------------------------------------------------------------------
// R^12 embedding

Vector embed(const Vec3& p, const Mat3& Q) {
  Vector x(12);
  x.head<3>() = p;
  x.segment<9>(3) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(Q.data());
  return x;
}

Vec3 embedded_position(const Vector& x) { return x.head<3>(); }

Mat3 embedded_frame(const Vector& x) { return Eigen::Map<const Mat3>(x.data() + 3); }

namespace {

// X is linear in (f, Lambda) for fixed q; shared by the field and its z-derivative.
Vector assemble_embedded(const Vector& x, const Vec3& f, const Vec3& lambda) {
  Vector out = Vector::Zero(12);
  Vec3 translation = Vec3::Zero();
  for (int i = 0; i < 3; ++i) translation += f[i] * x.segment<3>(3 + 3 * i);
  out.head<3>() = translation;
  for (int j = 1; j <= 3; ++j) {
    Vec3 row = Vec3::Zero();
    for (int i = 1; i <= 3; ++i) {
      for (int k = 1; k <= 3; ++k) {
        const int eps = geom3::levi_civita(i, j, k);
        if (eps != 0) row += (eps * lambda[i - 1]) * x.segment<3>(3 * k);
      }
    }
    out.segment<3>(3 * j) = row;
  }
  return out;
}

}  // namespace

Vector embedded_field(const Vector& x, double z, double sigma, double tau, double alpha) {
  return assemble_embedded(x, heading(z, sigma, tau, alpha), body_rate(z, sigma, tau, alpha));
}

Eigen::MatrixXd embedded_field_jacobian_x(double z, double sigma, double tau, double alpha) {
  const Vec3 f = heading(z, sigma, tau, alpha);
  const Vec3 lambda = body_rate(z, sigma, tau, alpha);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(12, 12);
  for (int i = 0; i < 3; ++i) {
    jac.block<3, 3>(0, 3 + 3 * i) = f[i] * Mat3::Identity();
  }
  for (int j = 1; j <= 3; ++j) {
    for (int k = 1; k <= 3; ++k) {
      double coeff = 0.0;
      for (int i = 1; i <= 3; ++i) coeff += lambda[i - 1] * geom3::levi_civita(i, j, k);
      jac.block<3, 3>(3 * j, 3 * k) = coeff * Mat3::Identity();
    }
  }
  return jac;
}

Eigen::MatrixXd embedded_field_jacobian_z(const Vector& x, double z, double sigma, double tau,
                                          double alpha) {
  const Mat3 r2 = intermediate_rotation(sigma, alpha);
  const Vec3 df = -std::sqrt(2.0) * (r2 * geom3::e3().cross(fast_rotation(tau, z).col(0)));
  const Vec3 dlambda = -2.0 * alpha * (r2 * geom3::e3().cross(roll_axis(tau, z)));
  return assemble_embedded(x, df, dlambda);
}

avgcore::SingularSystem embedded_system(const SeekParams& params, const SignalField& field,
                                        JacobianMode mode) {
  params.validate();
  const double alpha = params.alpha;
  avgcore::SingularField f1;
  f1.dim = 12;
  f1.fast_dim = 1;
  f1.T1 = sigma_period(alpha);
  f1.T2 = 2.0 * kPi;
  f1.eval = [alpha](const Vector& x, const Vector& z, double, double sigma, double tau) {
    return embedded_field(x, z[0], sigma, tau, alpha);
  };
  avgcore::SingularField f2 = avgcore::SingularField::zero(12, 1);
  f2.T1 = f1.T1;
  f2.T2 = f1.T2;
  avgcore::FastDynamics fast;
  fast.g = [field](const Vector& x, const Vector& z, double t) {
    Vector out(1);
    out[0] = field.c(embedded_position(x), t) - z[0];
    return out;
  };
  fast.phi = [field](const Vector& x, double t) {
    Vector out(1);
    out[0] = field.c(embedded_position(x), t);
    return out;
  };
  if (mode == JacobianMode::analytic) {
    f1.jacobian_x = [alpha](const Vector&, const Vector& z, double, double sigma, double tau) {
      return embedded_field_jacobian_x(z[0], sigma, tau, alpha);
    };
    f1.jacobian_z = [alpha](const Vector& x, const Vector& z, double, double sigma, double tau) {
      return embedded_field_jacobian_z(x, z[0], sigma, tau, alpha);
    };
    fast.phi_jacobian = [field](const Vector& x, double t) {
      Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(1, 12);
      jac.block<1, 3>(0, 0) = field.grad(embedded_position(x), t).transpose();
      return jac;
    };
  } else {
    f2.jacobian_x = nullptr;
    f2.jacobian_z = nullptr;
  }
  return avgcore::SingularSystem(std::move(f1), std::move(f2), std::move(fast), params.mu,
                                 params.omega);
}

// ---------------------------------------------------------------------------
// Reduced averaged flow

const Mat3& averaged_gain() {
  static const Mat3 a = [] {
    Mat3 m;
    m << 3.0, 1.0, 0.0,
         1.0, 3.0, 0.0,
         0.0, 0.0, 2.0;
    return Mat3(m / 4.0);
  }();
  return a;
}

AMatrixResult compute_A_numeric(const SeekParams& params, const avgcore::QuadratureSettings& quad,
                                int probes, std::uint64_t seed, double fit_tolerance,
                                JacobianMode mode) {
  if (probes < 3) throw std::invalid_argument("compute_A_numeric needs at least 3 probes");
  const SignalField field = signal_field(FieldSpec{});
  const avgcore::AveragedSystem averaged = avgcore::rora_reduce(embedded_system(params, field, mode), quad);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Unknowns a = vec(A) row-major; each probe contributes Q^T y = A (Q^T grad c).
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(3 * probes, 9);
  Eigen::VectorXd rhs(3 * probes);
  AMatrixResult result;
  result.probes = probes;
  for (int k = 0; k < probes; ++k) {
    Vec3 p(coord(rng), coord(rng), coord(rng));
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    axis.normalize();
    const Mat3 Q = geom3::rot_exp(angle(rng) * axis);
    const Vector out = averaged(embed(p, Q), 0.0);
    result.rotation_residual = std::max(result.rotation_residual, out.tail<9>().cwiseAbs().maxCoeff());
    const Vec3 w = Q.transpose() * field.grad(p, 0.0);
    const Vec3 y = Q.transpose() * out.head<3>();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) design(3 * k + i, 3 * i + j) = w[j];
      rhs[3 * k + i] = y[i];
    }
  }
  const Eigen::VectorXd a = design.colPivHouseholderQr().solve(rhs);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) result.A(i, j) = a[3 * i + j];
  }
  const double scale = std::max(1e-300, rhs.cwiseAbs().maxCoeff());
  result.fit_residual = (design * a - rhs).cwiseAbs().maxCoeff() / scale;
  if (result.fit_residual > fit_tolerance) {
    std::ostringstream msg;
    msg << "averaged translation is not of the form Q A Q^T grad c (relative residual "
        << result.fit_residual << ")";
    throw ConventionError(msg.str());
  }
  return result;
}

RoraRates rora_rhs(const Vec3& p, const Mat3& Q, double t, const SignalField& field) {
  return RoraRates{Q * averaged_gain() * Q.transpose() * field.grad(p, t), Mat3::Zero(),
                   field.c(p, t)};
}

avgcore::AveragedSystem rora_system(const SignalField& field) {
  avgcore::AveragedSystem sys;
  sys.dim = 12;
  sys.eval = [field](const Vector& x, double t) {
    Vector out = Vector::Zero(12);
    out.head<3>() = rora_rhs(embedded_position(x), embedded_frame(x), t, field).p_dot;
    return out;
  };
  return sys;
}

// ---------------------------------------------------------------------------
// Simulation

odeint::Rhs full_system_rhs(const SeekParams& params, const SignalField& field) {
  return [params, field](double t, const Vector& s) {
    const RigidRates r = full_rhs(RigidState::unpack(s), t, params, field);
    return RigidState{r.p_dot, r.R_dot, r.z_dot}.pack();
  };
}

odeint::Rhs transformed_system_rhs(const SeekParams& params, const SignalField& field) {
  return [params, field](double t, const Vector& s) {
    const RigidState st = RigidState::unpack(s);
    const TransformedRates r = transformed_rhs(st.p, st.R, st.z, t, params, field);
    return RigidState{r.p_dot, r.Q_dot, r.z_dot}.pack();
  };
}

odeint::Trajectory simulate_full(const SeekParams& params, const SignalField& field,
                                 const RigidState& initial, double t0, double tf,
                                 const odeint::StepPlan& plan,
                                 const odeint::IntegratorSettings& settings) {
  params.validate();
  return odeint::integrate_projected(full_system_rhs(params, field), initial.pack(), t0, tf, plan,
                                     settings.method, settings.project, {kRotationOffset});
}

odeint::Trajectory simulate_transformed(const SeekParams& params, const SignalField& field,
                                        const Vec3& p0, const Mat3& Q0, double z0, double t0,
                                        double tf, const odeint::StepPlan& plan,
                                        const odeint::IntegratorSettings& settings) {
  params.validate();
  return odeint::integrate_projected(transformed_system_rhs(params, field),
                                     RigidState{p0, Q0, z0}.pack(), t0, tf, plan,
                                     settings.method, settings.project, {kRotationOffset});
}

odeint::Trajectory simulate_rora(const SignalField& field, const Vec3& p0, const Mat3& Q0,
                                 double t0, double tf, const odeint::StepPlan& plan,
                                 const odeint::IntegratorSettings& settings) {
  return avgcore::simulate_averaged(rora_system(field), embed(p0, Q0), t0, tf, plan, settings,
                                    {3});
}

}  // namespace recavg::seek3d
