#include "recavg/avgcore.hpp"
#include "recavg/test_systems.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

using namespace recavg::avgcore;
namespace odeint = recavg::odeint;
using recavg::testing::random_vector;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

const Matrix kB1 = mat2(0, 1, 0, 0);
const Matrix kB2 = mat2(0, 0, 1, 0);

// Smooth nonlinear vector fields on R^2 without analytic Jacobians.
Vector b1(const Vector& x) {
  Vector v(2);
  v << x[1] * x[1], std::sin(x[0]);
  return v;
}
Vector b2(const Vector& x) {
  Vector v(2);
  v << x[0] * x[1], std::cos(x[1]) + 0.5 * x[0];
  return v;
}

// f1 = s(sigma) (sin tau b1 + cos tau b2), s = 1 + 0.5 cos sigma, so that
// fbar1 = -1/2 mean(s^2) [b1, b2] = -9/16 [b1, b2].
TwoScaleSystem nonlinear_system(double omega, const Vector& f2_const = Vector::Zero(2)) {
  TwoScaleField f1;
  f1.dim = 2;
  f1.eval = [](const Vector& x, double, double sigma, double tau) -> Vector {
    return (1.0 + 0.5 * std::cos(sigma)) * (std::sin(tau) * b1(x) + std::cos(tau) * b2(x));
  };
  TwoScaleField f2;
  f2.dim = 2;
  f2.eval = [f2_const](const Vector&, double, double, double) -> Vector { return f2_const; };
  return TwoScaleSystem(f1, f2, omega);
}

AveragedSystem closed_form(const Matrix& m) {
  return {static_cast<int>(m.rows()), [m](const Vector& x, double) -> Vector { return m * x; }};
}

}  // namespace

TEST(LieBracket, ConstantFieldsCommute) {
  const VectorField f = [](const Vector&) { Vector v(2); v << 1.0, -2.0; return v; };
  const VectorField g = [](const Vector&) { Vector v(2); v << 0.5, 3.0; return v; };
  Vector x(2);
  x << 0.3, 0.4;
  EXPECT_LT(lie_bracket(f, g, x).norm(), 1e-12);
}

TEST(LieBracket, LinearFieldsGiveCommutator) {
  const VectorField f = [](const Vector& x) { return Vector(kB1 * x); };
  const VectorField g = [](const Vector& x) { return Vector(kB2 * x); };
  const Matrix expect = mat2(-1, 0, 0, 1);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    const Vector x = random_vector(rng, 2);
    // finite-difference Jacobians
    EXPECT_LT((lie_bracket(f, g, x) - expect * x).norm(), 1e-8);
    // analytic Jacobians
    const JacobianFn df = [](const Vector&) { return kB1; };
    const JacobianFn dg = [](const Vector&) { return kB2; };
    EXPECT_LT((lie_bracket(f, g, x, df, dg) - (kB2 * kB1 - kB1 * kB2) * x).norm(), 1e-14);
  }
}

TEST(LieBracket, AntisymmetryOnRandomSmoothFields) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const Vector x = random_vector(rng, 2);
    EXPECT_LT(lie_bracket(b1, b1, x).norm(), 1e-9);
    EXPECT_LT((lie_bracket(b1, b2, x) + lie_bracket(b2, b1, x)).norm(), 1e-9);
  }
}

TEST(LieBracket, FiniteDifferenceJacobianAccuracy) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    const Vector x = random_vector(rng, 2);
    Matrix exact(2, 2);
    exact << 0.0, 2 * x[1], std::cos(x[0]), 0.0;
    EXPECT_LT((jacobian_fd(b1, x) - exact).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(LieBracket, RejectsNonFiniteJacobian) {
  const VectorField f = [](const Vector& x) { return Vector(x.array().sqrt()); };
  Vector x(2);
  x << -1.0, 1.0;
  EXPECT_THROW(lie_bracket(f, b1, x), std::domain_error);
}

TEST(AverageFields, SinCosClosedForm) {
  const AveragedSystem avg = average_fields(sincos_system(1.0));
  const Matrix m = sincos_average();
  EXPECT_LT((m - mat2(0.5, 0, 0, -0.5)).norm(), 1e-15);
  std::mt19937_64 rng(14);
  for (int i = 0; i < 10; ++i) {
    const Vector x = random_vector(rng, 2);
    EXPECT_LT((avg(x, 0.0) - m * x).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(AverageFields, NonlinearFieldsWithSigmaDependence) {
  Vector c(2);
  c << 0.25, -1.5;
  const TwoScaleSystem sys = nonlinear_system(1.0, c);
  const AveragedSystem avg = average_fields(sys);
  std::mt19937_64 rng(15);
  for (int i = 0; i < 10; ++i) {
    const Vector x = random_vector(rng, 2, 1.0);
    const Vector expect = -9.0 / 16.0 * lie_bracket(b1, b2, x) + c;
    EXPECT_LT((avg(x, 0.0) - expect).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(AverageFields, ConstantMeanAndStateIndependentBracket) {
  // f1 independent of x: the bracket term vanishes; f2 constant: the mean is f2.
  TwoScaleField f1;
  f1.dim = 3;
  f1.eval = [](const Vector&, double, double sigma, double tau) -> Vector {
    Vector v(3);
    v << std::sin(tau), std::cos(2 * tau) * std::cos(sigma), std::sin(tau + sigma);
    return v;
  };
  TwoScaleField f2;
  f2.dim = 3;
  f2.eval = [](const Vector&, double, double, double) -> Vector { return Vector::Constant(3, 0.7); };
  const AveragedSystem avg = average_fields(TwoScaleSystem(f1, f2, 10.0));
  std::mt19937_64 rng(16);
  for (int i = 0; i < 5; ++i) {
    EXPECT_LT((avg(random_vector(rng, 3), 1.0) - Vector::Constant(3, 0.7)).norm(), 1e-12);
  }
}

TEST(AverageFields, PanelDoublingIsConsistent) {
  const TwoScaleSystem sys = nonlinear_system(1.0);
  QuadratureSettings doubled;
  doubled.panels = 128;
  const AveragedSystem a = average_fields(sys);
  const AveragedSystem b = average_fields(sys, doubled);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 5; ++i) {
    const Vector x = random_vector(rng, 2, 1.0);
    EXPECT_LT((a(x, 0.0) - b(x, 0.0)).cwiseAbs().maxCoeff(), 1e-8);
    // raw fixed-panel terms converge at fourth order
    const double d1 = (average_terms(sys, x, 0.0, 32).bracket_term - average_terms(sys, x, 0.0, 64).bracket_term).norm();
    const double d2 = (average_terms(sys, x, 0.0, 64).bracket_term - average_terms(sys, x, 0.0, 128).bracket_term).norm();
    EXPECT_GT(d1 / d2, 12.0);
  }
}

TEST(AverageFields, DebugConventions) {
  const TwoScaleSystem sys = sincos_system(1.0);
  Vector x(2);
  x << 0.4, -1.1;
  QuadratureSettings flipped;
  flipped.bracket = BracketConvention::flipped;
  QuadratureSettings mean_half;
  mean_half.prefactor = PrefactorConvention::mean_half;
  const Vector base = average_fields(sys)(x, 0.0);
  EXPECT_LT((average_fields(sys, flipped)(x, 0.0) + base).norm(), 1e-10);
  EXPECT_LT((average_fields(sys, mean_half)(x, 0.0) - 2.0 * base).norm(), 1e-10);
}

TEST(AverageFields, ReportsNonConvergence) {
  QuadratureSettings quad;
  quad.tolerance = 1e-30;
  quad.max_panels = 128;
  const AveragedSystem avg = average_fields(nonlinear_system(1.0), quad);
  Vector x(2);
  x << 0.5, 0.5;
  EXPECT_THROW(avg(x, 0.0), QuadratureError);
  quad.panels = 63;
  EXPECT_THROW(average_fields(nonlinear_system(1.0), quad), std::invalid_argument);
}

TEST(TwoScaleSystemChecks, RejectsNonzeroFastMean) {
  TwoScaleField f1;
  f1.dim = 1;
  f1.eval = [](const Vector& x, double, double, double tau) -> Vector {
    return Vector::Constant(1, x[0] * (0.1 + std::sin(tau)));
  };
  EXPECT_THROW(TwoScaleSystem(f1, TwoScaleField::zero(1), 1.0), AssumptionError);
}

TEST(TwoScaleSystemChecks, RejectsWrongPeriods) {
  TwoScaleField f1;
  f1.dim = 1;
  f1.eval = [](const Vector& x, double, double, double tau) -> Vector {
    return Vector::Constant(1, x[0] * std::sin(1.1 * tau));
  };
  EXPECT_THROW(TwoScaleSystem(f1, TwoScaleField::zero(1), 1.0), AssumptionError);

  TwoScaleField f2;
  f2.dim = 1;
  f2.T1 = 1.0;
  f2.eval = [](const Vector&, double, double sigma, double) -> Vector {
    return Vector::Constant(1, std::sin(sigma));  // period 2 pi, declared 1
  };
  EXPECT_THROW(TwoScaleSystem(TwoScaleField::zero(1), f2, 1.0), AssumptionError);
}

TEST(TwoScaleSystemChecks, RejectsMismatchedDimensionsAndOmega) {
  EXPECT_THROW(TwoScaleSystem(TwoScaleField::zero(2), TwoScaleField::zero(3), 1.0),
               std::invalid_argument);
  EXPECT_THROW(TwoScaleSystem(TwoScaleField::zero(2), TwoScaleField::zero(2), 0.0),
               std::invalid_argument);
}

TEST(SingularSystemChecks, RejectsNonEquilibriumManifold) {
  FastDynamics fast;
  fast.g = [](const Vector& x, const Vector& z, double) -> Vector { return x.head(1) - z; };
  fast.phi = [](const Vector& x, double) -> Vector { return x.head(1) + Vector::Constant(1, 0.1); };
  EXPECT_THROW(SingularSystem(SingularField::zero(2, 1), SingularField::zero(2, 1), fast, 0.1, 1.0),
               AssumptionError);
  fast.phi = [](const Vector& x, double) -> Vector { return x.head(1); };
  EXPECT_NO_THROW(SingularSystem(SingularField::zero(2, 1), SingularField::zero(2, 1), fast, 0.1, 1.0));
  EXPECT_THROW(SingularSystem(SingularField::zero(2, 1), SingularField::zero(2, 1), fast, 0.0, 1.0),
               std::invalid_argument);
}

TEST(RoraReduce, IdentityManifoldMatchesAverageFields) {
  // g = x - z with z-independent fields: the substitution is a no-op.
  const TwoScaleSystem base = nonlinear_system(1.0);
  SingularField f1;
  f1.dim = 2;
  f1.fast_dim = 2;
  f1.eval = [base](const Vector& x, const Vector&, double t, double s, double tau) {
    return base.f1()(x, t, s, tau);
  };
  SingularField f2 = SingularField::zero(2, 2);
  FastDynamics fast;
  fast.g = [](const Vector& x, const Vector& z, double) -> Vector { return x - z; };
  fast.phi = [](const Vector& x, double) -> Vector { return x; };
  const SingularSystem ssys(f1, f2, fast, 0.01, 1.0);
  const AveragedSystem a = rora_reduce(ssys);
  const AveragedSystem b = average_fields(base);
  std::mt19937_64 rng(18);
  for (int i = 0; i < 5; ++i) {
    const Vector x = random_vector(rng, 2, 1.0);
    EXPECT_LT((a(x, 0.0) - b(x, 0.0)).norm(), 1e-12);
  }
}

TEST(RoraReduce, NoBracketTermGivesReducedMean) {
  // f1 = 0, f2 = z (1 + cos tau) with z = phi(x) = x^2: mean of f2~ is x^2.
  SingularField f2;
  f2.dim = 1;
  f2.fast_dim = 1;
  f2.eval = [](const Vector&, const Vector& z, double, double, double tau) -> Vector {
    return z * (1.0 + std::cos(tau));
  };
  FastDynamics fast;
  fast.g = [](const Vector& x, const Vector& z, double) -> Vector { return x.cwiseProduct(x) - z; };
  fast.phi = [](const Vector& x, double) -> Vector { return x.cwiseProduct(x); };
  const SingularSystem ssys(SingularField::zero(1, 1), f2, fast, 0.01, 1.0);
  const AveragedSystem avg = rora_reduce(ssys);
  for (double v : {-1.5, 0.2, 3.0}) {
    EXPECT_NEAR(avg(Vector::Constant(1, v), 0.0)[0], v * v, 1e-12);
  }
}

TEST(SimulateTwoScale, ZeroFieldsAreConstant) {
  const TwoScaleSystem sys(TwoScaleField::zero(2), TwoScaleField::zero(2), 50.0);
  Vector x0(2);
  x0 << 1.0, 2.0;
  const auto traj = simulate_two_scale(sys, x0, 0.0, 1.0, odeint::IntegratorSettings{});
  for (const auto& x : traj.states) EXPECT_EQ(x, x0);
}

TEST(SimulateTwoScale, SinCosTracksAveragedFlow) {
  const TwoScaleSystem sys = sincos_system(400.0);
  Vector x0(2);
  x0 << 1.0, 1.0;
  odeint::IntegratorSettings s;
  const auto traj = simulate_two_scale(sys, x0, 0.0, 2.0, s);
  const Matrix m = sincos_average();
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vector avg = (m * traj.times[k]).exp() * x0;
    worst = std::max(worst, (traj.states[k] - avg).norm());
  }
  EXPECT_LE(worst, 0.2);
}

TEST(SimulateTwoScale, TimeShiftInvariance) {
  // With T1 = 1 and T2 = 2 pi, t0 = 2 pi k / sqrt(w) shifts tau by 2 pi k sqrt(w)
  // and sigma by 2 pi k, which are multiple periods when sqrt(w) is an integer.
  const TwoScaleSystem sys = sincos_system(16.0);
  Vector x0(2);
  x0 << 0.5, -0.5;
  odeint::IntegratorSettings s;
  const double shift = 2 * kPi;
  const auto a = simulate_two_scale(sys, x0, 0.0, 1.5, s);
  const auto b = simulate_two_scale(sys, x0, shift, 1.5, s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(b.times[k] - shift, a.times[k], 1e-12);
    EXPECT_LT((a.states[k] - b.states[k]).norm(), 1e-9);
  }
}

TEST(SimulateSingular, LinearRelaxation) {
  const double mu = 0.5;
  FastDynamics fast;
  fast.g = [](const Vector& x, const Vector& z, double) -> Vector { return x.head(1) - z; };
  fast.phi = [](const Vector& x, double) -> Vector { return x.head(1); };
  const SingularSystem ssys(SingularField::zero(1, 1), SingularField::zero(1, 1), fast, mu, 1.0);
  odeint::IntegratorSettings s;
  s.steps_per_period = 256;
  const Vector x0 = Vector::Constant(1, 2.0);
  const Vector z0 = Vector::Constant(1, -1.0);
  const auto traj = simulate_singular(ssys, x0, z0, 0.0, mu, s);
  const double expect = z0[0] + (1.0 - std::exp(-1.0)) * (x0[0] - z0[0]);
  EXPECT_EQ(traj.dimension(), 2u);
  EXPECT_NEAR(traj.states.back()[1], expect, 1e-6);
  EXPECT_EQ(traj.states.back()[0], 2.0);
}

TEST(SimulateAveraged, ZeroFieldAndLinearClosedForm) {
  Vector x0(2);
  x0 << 0.8, -0.3;
  odeint::IntegratorSettings s;
  const auto zero = simulate_averaged({2, [](const Vector& x, double) { return Vector(Vector::Zero(x.size())); }},
                                      x0, 0.0, 2.0, s);
  for (const auto& x : zero.states) EXPECT_EQ(x, x0);

  const Matrix m = sincos_average();
  s.steps_per_period = 256;
  const auto traj = simulate_averaged(closed_form(m), x0, 0.0, 2.0, s);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_LT((traj.states[k] - (m * traj.times[k]).exp() * x0).norm(), 1e-8);
  }
}

TEST(ConvergenceStudy, SinCosRateIsHalfOrder) {
  Vector x0(2);
  x0 << 1.0, 1.0;
  ConvergenceSettings settings;
  settings.reference_steps = 400;
  const auto rep = convergence_study(sincos_system(1.0), x0, 0.0, 2.0, {1e2, 1e3, 1e4}, settings,
                                     closed_form(sincos_average()));
  ASSERT_EQ(rep.sup_errors.size(), 3u);
  EXPECT_GT(rep.sup_errors[0], rep.sup_errors[1]);
  EXPECT_GT(rep.sup_errors[1], rep.sup_errors[2]);
  EXPECT_GE(rep.fitted_slope, -0.65);
  EXPECT_LE(rep.fitted_slope, -0.35);
  EXPECT_DOUBLE_EQ(rep.horizon, 2.0);
  double c = 0.0;
  for (std::size_t i = 0; i < 3; ++i) c = std::max(c, rep.sup_errors[i] * std::sqrt(rep.omega_values[i]));
  EXPECT_DOUBLE_EQ(rep.empirical_C, c);
}

TEST(ConvergenceStudy, QuadrupledOmegaHalvesError) {
  Vector x0(2);
  x0 << 1.0, 1.0;
  const auto rep = convergence_study(sincos_system(1.0), x0, 0.0, 2.0, {100.0, 400.0, 1600.0}, {},
                                     closed_form(sincos_average()));
  for (std::size_t i = 0; i + 1 < rep.sup_errors.size(); ++i) {
    const double ratio = rep.sup_errors[i] / rep.sup_errors[i + 1];
    EXPECT_GE(ratio, 1.5);
    EXPECT_LE(ratio, 2.5);
  }
}

TEST(ConvergenceStudy, QuadratureReferenceMatchesClosedForm) {
  Vector x0(2);
  x0 << 1.0, 1.0;
  ConvergenceSettings settings;
  settings.reference_steps = 10;
  const std::vector<double> omegas{100.0, 400.0, 1600.0};
  const auto numeric = convergence_study(sincos_system(1.0), x0, 0.0, 0.5, omegas, settings);
  const auto exact = convergence_study(sincos_system(1.0), x0, 0.0, 0.5, omegas, settings,
                                       closed_form(sincos_average()));
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    EXPECT_NEAR(numeric.sup_errors[i], exact.sup_errors[i], 1e-8);
  }
}

TEST(ConvergenceStudy, ParallelEqualsSerial) {
  Vector x0(2);
  x0 << 1.0, 1.0;
  ConvergenceSettings settings;
  const std::vector<double> omegas{100.0, 400.0, 1600.0};
  const auto par = convergence_study(sincos_system(1.0), x0, 0.0, 1.0, omegas, settings,
                                     closed_form(sincos_average()));
  settings.parallel = false;
  const auto ser = convergence_study(sincos_system(1.0), x0, 0.0, 1.0, omegas, settings,
                                     closed_form(sincos_average()));
  EXPECT_EQ(par.sup_errors, ser.sup_errors);
  EXPECT_EQ(par.fitted_slope, ser.fitted_slope);
}

TEST(ConvergenceStudy, RejectsBadOmegaLists) {
  Vector x0(2);
  x0 << 1.0, 1.0;
  const auto sys = sincos_system(1.0);
  EXPECT_THROW(convergence_study(sys, x0, 0.0, 1.0, {100.0, 100.0, 400.0}), std::invalid_argument);
  EXPECT_THROW(convergence_study(sys, x0, 0.0, 1.0, {100.0, 400.0}), std::invalid_argument);
  EXPECT_THROW(convergence_study(sys, x0, 0.0, 1.0, {400.0, 100.0, 1600.0}), std::invalid_argument);
  EXPECT_THROW(convergence_study(sys, x0, 0.0, 1.0, {-1.0, 100.0, 400.0}), std::invalid_argument);
}

TEST(ConvergenceStudy, FitSlope) {
  EXPECT_NEAR(fit_loglog_slope({1.0, 10.0, 100.0}, {1.0, 0.1, 0.01}), -1.0, 1e-12);
  EXPECT_NEAR(fit_loglog_slope({4.0, 16.0, 64.0}, {1.0, 0.5, 0.25}), -0.5, 1e-12);
}
