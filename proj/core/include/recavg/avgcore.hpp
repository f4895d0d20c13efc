#pragma once

// Recursive (two-timescale) averaging of
//
//   x' = sqrt(w) f1(x, t, sqrt(w) t, w t) + f2(x, t, sqrt(w) t, w t)
//
// and of its singularly perturbed extension with a fast filter state
// mu z' = g(x, z). The averaged system is
//
//   x' = fbar1(x, t) + fbar2(x, t)
//   fbar1 = 1/(2 T1 T2) int_0^T1 int_0^T2 [ int_0^s2 f1 ds, f1 ] ds2 ds1
//   fbar2 = 1/(T1 T2)   int_0^T1 int_0^T2 f2 ds2 ds1
//
// with the bracket [f, g] = (Dg) f - (Df) g.

#include "recavg/odeint.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace recavg::avgcore {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Field evaluated at state x, slow time t, intermediate time sigma and fast time tau.
using FieldFn = std::function<Vector(const Vector& x, double t, double sigma, double tau)>;
using FieldJacobianFn = std::function<Matrix(const Vector& x, double t, double sigma, double tau)>;

/// Thrown when a user-supplied field violates a structural requirement
/// (periodicity, zero fast mean, equilibrium of the fast dynamics).
class AssumptionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random spot checks run when a system is constructed.
struct AssumptionCheck {
  int samples = 16;
  double state_radius = 2.0;  // states drawn uniformly from [-r, r]^n
  double time_span = 10.0;    // slow times drawn from [0, span]
  double tolerance = 1e-9;    // relative to 1 + |f|_inf
  std::uint64_t seed = 0x5eed'a11ce;
  bool enabled = true;
};

struct TwoScaleField {
  int dim = 0;
  FieldFn eval;
  double T1 = 2.0 * std::numbers::pi;  // period in sigma
  double T2 = 2.0 * std::numbers::pi;  // period in tau
  FieldJacobianFn jacobian;            // optional analytic D_x eval

  Vector operator()(const Vector& x, double t, double sigma, double tau) const {
    return eval(x, t, sigma, tau);
  }
  /// Analytic Jacobian when supplied, otherwise central finite differences.
  Matrix state_jacobian(const Vector& x, double t, double sigma, double tau) const;

  static TwoScaleField zero(int dim);
};

class TwoScaleSystem {
 public:
  /// Validates periodicity of both fields and the zero tau-mean of f1 at
  /// random sample points; throws AssumptionError on failure.
  TwoScaleSystem(TwoScaleField f1, TwoScaleField f2, double omega,
                 const AssumptionCheck& check = {});

  const TwoScaleField& f1() const { return f1_; }
  const TwoScaleField& f2() const { return f2_; }
  int dim() const { return f1_.dim; }
  double omega() const { return omega_; }

  /// Shortest period in t among the oscillatory time scales.
  double fastest_period() const;

  /// Same fields at a different frequency (no re-validation needed).
  TwoScaleSystem with_omega(double omega) const;

  /// sqrt(w) f1(x, t, sqrt(w) t, w t) + f2(x, t, sqrt(w) t, w t).
  Vector rhs(double t, const Vector& x) const;

 private:
  struct Validated {};
  TwoScaleSystem(TwoScaleField f1, TwoScaleField f2, double omega, Validated);

  TwoScaleField f1_;
  TwoScaleField f2_;
  double omega_;
};

using SingularFieldFn =
    std::function<Vector(const Vector& x, const Vector& z, double t, double sigma, double tau)>;
using SingularJacobianFn =
    std::function<Matrix(const Vector& x, const Vector& z, double t, double sigma, double tau)>;
using FastFn = std::function<Vector(const Vector& x, const Vector& z, double t)>;
using ManifoldFn = std::function<Vector(const Vector& x, double t)>;
using ManifoldJacobianFn = std::function<Matrix(const Vector& x, double t)>;

struct SingularField {
  int dim = 0;       // slow state dimension n
  int fast_dim = 0;  // fast state dimension m
  SingularFieldFn eval;
  double T1 = 2.0 * std::numbers::pi;
  double T2 = 2.0 * std::numbers::pi;
  // Optional analytic partial Jacobians (n x n and n x m). Used by the
  // slow-manifold reduction only when both are present together with
  // FastDynamics::phi_jacobian.
  SingularJacobianFn jacobian_x;
  SingularJacobianFn jacobian_z;

  static SingularField zero(int dim, int fast_dim);
};

/// Fast subsystem mu z' = g(x, z, t) with quasi-steady state z = phi(x, t).
struct FastDynamics {
  FastFn g;
  ManifoldFn phi;
  ManifoldJacobianFn phi_jacobian;  // optional m x n
};

class SingularSystem {
 public:
  /// Validates g(x, phi(x)) = 0 and the two-scale requirements of the fields
  /// with z = phi(x) substituted; throws AssumptionError on failure.
  SingularSystem(SingularField f1, SingularField f2, FastDynamics fast, double mu, double omega,
                 const AssumptionCheck& check = {});

  const SingularField& f1() const { return f1_; }
  const SingularField& f2() const { return f2_; }
  const FastDynamics& fast() const { return fast_; }
  const FastFn& g() const { return fast_.g; }
  const ManifoldFn& phi() const { return fast_.phi; }
  int dim() const { return f1_.dim; }
  int fast_dim() const { return f1_.fast_dim; }
  double mu() const { return mu_; }
  double omega() const { return omega_; }

  /// Shortest time scale in t: the oscillation periods and 2 pi mu.
  double fastest_period() const;

  SingularSystem with_omega(double omega) const;
  SingularSystem with_mu(double mu) const;

  /// Coupled right-hand side on the stacked state (x, z).
  Vector rhs(double t, const Vector& xz) const;

 private:
  struct Validated {};
  SingularSystem(SingularField f1, SingularField f2, FastDynamics fast, double mu, double omega,
                 Validated);

  SingularField f1_;
  SingularField f2_;
  FastDynamics fast_;
  double mu_;
  double omega_;
};

/// Averaged (or reduced-order averaged) field; independent of sigma and tau.
struct AveragedSystem {
  int dim = 0;
  std::function<Vector(const Vector& x, double t)> eval;

  Vector operator()(const Vector& x, double t) const { return eval(x, t); }
};

enum class BracketConvention {
  standard,  // [f, g] = (Dg) f - (Df) g
  flipped,   // debug only: opposite sign
};

enum class PrefactorConvention {
  bracket_half,  // 1/2 on the bracket term
  mean_half,     // debug only: 1/2 moved to the f2 mean
};

struct QuadratureSettings {
  int panels = 64;        // composite Simpson panels per period (even)
  double tolerance = 1e-9;
  int max_panels = 1024;
  BracketConvention bracket = BracketConvention::standard;
  PrefactorConvention prefactor = PrefactorConvention::bracket_half;

  void validate() const;
};

using VectorField = std::function<Vector(const Vector& x)>;
using JacobianFn = std::function<Matrix(const Vector& x)>;

/// Central-difference Jacobian with step max(1e-6, 1e-6 |x|_inf).
Matrix jacobian_fd(const VectorField& f, const Vector& x);

/// (Dg)(x) f(x) - (Df)(x) g(x). Missing Jacobians are finite-differenced.
/// Throws std::domain_error on non-finite Jacobian entries.
Vector lie_bracket(const VectorField& f, const VectorField& g, const Vector& x,
                   const JacobianFn& df = {}, const JacobianFn& dg = {});

/// Averaged system built by nested composite Simpson quadrature. Every
/// evaluation refines the panel count (x2) until successive results agree.
AveragedSystem average_fields(const TwoScaleSystem& sys, const QuadratureSettings& quad = {});

/// The bracket and mean terms separately, at one point and panel count.
struct AverageTerms {
  Vector bracket_term;  // fbar1
  Vector mean_term;     // fbar2
};
AverageTerms average_terms(const TwoScaleSystem& sys, const Vector& x, double t, int panels,
                           const QuadratureSettings& quad = {});

/// Quasi-steady-state substitution z = phi(x, t) into f1 and f2.
TwoScaleSystem reduce_to_slow_manifold(const SingularSystem& ssys,
                                       const AssumptionCheck& check = {});

/// Reduced-order recursively averaged system: slow-manifold substitution
/// followed by average_fields.
AveragedSystem rora_reduce(const SingularSystem& ssys, const QuadratureSettings& quad = {});

using RotationBlocks = std::vector<odeint::RotationBlock>;

// As in odeint, tf is the horizon: samples cover [t0, t0 + tf].

odeint::Trajectory simulate_two_scale(const TwoScaleSystem& sys, const Vector& x0, double t0,
                                      double tf, const odeint::IntegratorSettings& settings,
                                      const RotationBlocks& rotation_blocks = {});
odeint::Trajectory simulate_two_scale(const TwoScaleSystem& sys, const Vector& x0, double t0,
                                      double tf, const odeint::StepPlan& plan,
                                      const odeint::IntegratorSettings& settings,
                                      const RotationBlocks& rotation_blocks = {});

/// Integrates the stacked state (x, z); the sample states have dimension n + m.
odeint::Trajectory simulate_singular(const SingularSystem& ssys, const Vector& x0,
                                     const Vector& z0, double t0, double tf,
                                     const odeint::IntegratorSettings& settings,
                                     const RotationBlocks& rotation_blocks = {});
odeint::Trajectory simulate_singular(const SingularSystem& ssys, const Vector& x0,
                                     const Vector& z0, double t0, double tf,
                                     const odeint::StepPlan& plan,
                                     const odeint::IntegratorSettings& settings,
                                     const RotationBlocks& rotation_blocks = {});

/// `period` sets the step size as for odeint::integrate.
odeint::Trajectory simulate_averaged(const AveragedSystem& asys, const Vector& x0, double t0,
                                     double tf, const odeint::IntegratorSettings& settings,
                                     double period = 1.0,
                                     const RotationBlocks& rotation_blocks = {});
odeint::Trajectory simulate_averaged(const AveragedSystem& asys, const Vector& x0, double t0,
                                     double tf, const odeint::StepPlan& plan,
                                     const odeint::IntegratorSettings& settings,
                                     const RotationBlocks& rotation_blocks = {});

struct ConvergenceSettings {
  odeint::IntegratorSettings integrator;
  std::size_t reference_steps = 400;  // averaged-run steps = number of compared samples
  QuadratureSettings quadrature;
  RotationBlocks rotation_blocks;
  bool parallel = true;
};

struct ConvergenceReport {
  std::vector<double> omega_values;
  std::vector<double> sup_errors;
  double fitted_slope = 0.0;  // least-squares slope of log(error) vs log(omega)
  double empirical_C = 0.0;   // max error * sqrt(omega)
  double horizon = 0.0;
};

/// Least-squares slope of log(err) against log(omega).
double fit_loglog_slope(const std::vector<double>& omegas, const std::vector<double>& errors);

/// For each omega, the sup over shared samples of |x(t) - xbar(t)|_2. The
/// reference is `reference` when given, otherwise average_fields(sys).
ConvergenceReport convergence_study(const TwoScaleSystem& sys, const Vector& x0, double t0,
                                    double tf, const std::vector<double>& omegas,
                                    const ConvergenceSettings& settings = {},
                                    const std::optional<AveragedSystem>& reference = std::nullopt);

/// Singular variant; the error is measured on the slow block x only and the
/// reference defaults to rora_reduce(ssys).
ConvergenceReport convergence_study(const SingularSystem& ssys, const Vector& x0,
                                    const Vector& z0, double t0, double tf,
                                    const std::vector<double>& omegas,
                                    const ConvergenceSettings& settings = {},
                                    const std::optional<AveragedSystem>& reference = std::nullopt);

}  // namespace recavg::avgcore
