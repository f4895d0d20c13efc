#include "recavg/geom3.hpp"
#include "recavg/odeint.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace recavg::odeint;
using recavg::geom3::Mat3;

namespace {

constexpr double kPi = std::numbers::pi;

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

Rhs circle() {
  return [](double, const Vector& x) { return vec({x[1], -x[0]}); };
}

// Q' = Q hat(e3) on a column-major 9-block.
Rhs spin() {
  return [](double, const Vector& x) {
    const Mat3 q = Eigen::Map<const Mat3>(x.data());
    const Mat3 dq = q * recavg::geom3::hat(recavg::geom3::e3());
    return Vector(Eigen::Map<const Vector>(dq.data(), 9));
  };
}

Vector identity_block() {
  const Mat3 i = Mat3::Identity();
  return Eigen::Map<const Vector>(i.data(), 9);
}

}  // namespace

TEST(Integrate, ZeroFieldIsConstant) {
  const Vector a = vec({1.5, -2.0, 3.0});
  IntegratorSettings s;
  const auto traj = integrate([](double, const Vector& x) { return Vector::Zero(x.size()); }, a,
                              0.0, 3.0, s);
  for (const auto& x : traj.states) EXPECT_EQ(x, a);
}

TEST(Integrate, CircleReturnsAfterOnePeriod) {
  // The field is autonomous, so the step follows the default unit reference
  // period. With 256 steps per 2 pi instead, RK4 leaves about 2e-8.
  for (Method m : {Method::classic_rk4, Method::rk4_three_eighths}) {
    IntegratorSettings s;
    s.steps_per_period = 256;
    s.method = m;
    const auto traj = integrate(circle(), vec({1.0, 0.0}), 0.0, 2 * kPi, s);
    EXPECT_LT((traj.states.back() - vec({1.0, 0.0})).norm(), 1e-8);
    EXPECT_NEAR(traj.times.back(), 2 * kPi, 1e-12);
    const auto coarse = integrate(circle(), vec({1.0, 0.0}), 0.0, 2 * kPi, s, 2 * kPi);
    EXPECT_LT((coarse.states.back() - vec({1.0, 0.0})).norm(), 2e-8);
  }
}

TEST(Integrate, ExponentialGrowth) {
  IntegratorSettings s;
  s.steps_per_period = 256;
  const auto traj = integrate([](double, const Vector& x) { return x; }, vec({1.0}), 0.0, 1.0, s);
  EXPECT_NEAR(traj.states.back()[0], std::exp(1.0), 1e-9);
}

TEST(Integrate, TimeDependentField) {
  // x' = cos t, x(t0) = 0 over [2, 5].
  IntegratorSettings s;
  s.steps_per_period = 256;
  const auto traj =
      integrate([](double t, const Vector&) { return vec({std::cos(t)}); }, vec({0.0}), 2.0, 3.0, s);
  EXPECT_NEAR(traj.times.front(), 2.0, 0.0);
  EXPECT_NEAR(traj.times.back(), 5.0, 1e-12);
  EXPECT_NEAR(traj.states.back()[0], std::sin(5.0) - std::sin(2.0), 1e-10);
}

TEST(Integrate, FourthOrderConvergenceOnCircle) {
  const double tf = 2 * kPi;
  auto end_state = [&](int spp, Method m) {
    IntegratorSettings s;
    s.steps_per_period = spp;
    s.method = m;
    return integrate(circle(), vec({1.0, 0.0}), 0.0, tf, s, tf).states.back();
  };
  for (Method m : {Method::classic_rk4, Method::rk4_three_eighths}) {
    const Vector ref = end_state(8 * 64, m);
    const double coarse = (end_state(32, m) - ref).norm();
    const double fine = (end_state(64, m) - ref).norm();
    const double ratio = coarse / fine;
    EXPECT_GE(ratio, 12.0);
    EXPECT_LE(ratio, 20.0);
  }
}

TEST(Integrate, SamplingLayout) {
  IntegratorSettings s;
  s.steps_per_period = 16;
  s.sample_stride = 5;
  const StepPlan plan = plan_steps(1.0, 1.0, s);
  EXPECT_EQ(plan.steps, 16u);
  const auto traj = integrate(circle(), vec({1.0, 0.0}), 0.0, 1.0, s);
  // samples at steps 0, 5, 10, 15 and the final step 16
  ASSERT_EQ(traj.size(), 5u);
  EXPECT_EQ(traj.states.front(), vec({1.0, 0.0}));
  EXPECT_DOUBLE_EQ(traj.times[1], 5.0 / 16.0);
  EXPECT_DOUBLE_EQ(traj.times.back(), 1.0);
  for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GT(traj.times[i], traj.times[i - 1]);
  for (const auto& x : traj.states) EXPECT_EQ(x.size(), 2);
}

TEST(Integrate, Deterministic) {
  IntegratorSettings s;
  s.sample_stride = 3;
  const auto a = integrate(circle(), vec({0.3, 0.7}), 0.0, 10.0, s);
  const auto b = integrate(circle(), vec({0.3, 0.7}), 0.0, 10.0, s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.times[i], b.times[i]);
    EXPECT_EQ(a.states[i], b.states[i]);
  }
}

TEST(Integrate, RejectsBadSettingsAndHorizon) {
  IntegratorSettings s;
  EXPECT_THROW(integrate(circle(), vec({1, 0}), 0.0, 0.0, s), std::invalid_argument);
  EXPECT_THROW(integrate(circle(), vec({1, 0}), 0.0, -1.0, s), std::invalid_argument);
  s.steps_per_period = 15;
  EXPECT_THROW(integrate(circle(), vec({1, 0}), 0.0, 1.0, s), std::invalid_argument);
  s.steps_per_period = 64;
  s.sample_stride = 0;
  EXPECT_THROW(integrate(circle(), vec({1, 0}), 0.0, 1.0, s), std::invalid_argument);
}

TEST(Integrate, ReportsDivergenceTime) {
  // x' = x^2, x(0) = 1 blows up at t = 1.
  IntegratorSettings s;
  s.steps_per_period = 1024;
  try {
    integrate([](double, const Vector& x) { return Vector(x.cwiseProduct(x)); }, vec({1.0}), 0.0,
              2.0, s);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time(), 0.9);
    EXPECT_LT(e.time(), 1.1);
  }
}

TEST(IntegrateProjected, SpinStaysOnSo3) {
  IntegratorSettings s;
  s.steps_per_period = 64;
  s.sample_stride = 100;
  const auto traj = integrate_projected(spin(), identity_block(), 0.0, 10000.0 / 64.0, s, {0});
  EXPECT_EQ(plan_steps(10000.0 / 64.0, 1.0, s).steps, 10000u);
  EXPECT_LE(max_orthonormality_error(traj, {0}), 1e-12);
  // exact solution Q(t) = exp(t hat(e3))
  const double t = traj.times.back();
  const Mat3 q = Eigen::Map<const Mat3>(traj.states.back().data());
  EXPECT_LT((q - recavg::geom3::rot_exp(t * recavg::geom3::e3())).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(IntegrateProjected, UnprojectedDriftIsSmallButNonzero) {
  IntegratorSettings s;
  s.steps_per_period = 64;
  s.project = false;
  s.sample_stride = 100;
  const auto traj = integrate_projected(spin(), identity_block(), 0.0, 10000.0 / 64.0, s, {0});
  const double drift = max_orthonormality_error(traj, {0});
  EXPECT_LE(drift, 1e-5);
  EXPECT_GT(drift, 0.0);
}

TEST(IntegrateProjected, ZeroFieldKeepsBlock) {
  const Mat3 r = recavg::geom3::rot_exp(Eigen::Vector3d(0.3, -1.0, 0.4));
  Vector x0(10);
  x0[0] = 2.0;
  x0.tail<9>() = Eigen::Map<const Vector>(r.data(), 9);
  IntegratorSettings s;
  const auto traj = integrate_projected(
      [](double, const Vector& x) { return Vector::Zero(x.size()); }, x0, 0.0, 1.0, s, {1});
  for (const auto& x : traj.states) EXPECT_LT((x - x0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(IntegrateProjected, RejectsNonRotationStart) {
  IntegratorSettings s;
  Vector x0 = identity_block();
  x0[0] = 1.1;
  EXPECT_THROW(integrate_projected(spin(), x0, 0.0, 1.0, s, {0}), std::invalid_argument);
  Vector reflected = identity_block();
  reflected[8] = -1.0;
  EXPECT_THROW(integrate_projected(spin(), reflected, 0.0, 1.0, s, {0}), std::invalid_argument);
  EXPECT_THROW(integrate_projected(spin(), identity_block(), 0.0, 1.0, s, {1}),
               std::invalid_argument);
}
