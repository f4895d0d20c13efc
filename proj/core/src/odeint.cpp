#include "recavg/odeint.hpp"

#include "recavg/geom3.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace recavg::odeint {

namespace {

constexpr double kInitialRotationTolerance = 1e-6;

Vector step_classic(const Rhs& rhs, double t, const Vector& x, double h) {
  const Vector k1 = rhs(t, x);
  const Vector k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1);
  const Vector k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2);
  const Vector k4 = rhs(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector step_three_eighths(const Rhs& rhs, double t, const Vector& x, double h) {
  const Vector k1 = rhs(t, x);
  const Vector k2 = rhs(t + h / 3.0, x + (h / 3.0) * k1);
  const Vector k3 = rhs(t + 2.0 * h / 3.0, x + h * (k2 - k1 / 3.0));
  const Vector k4 = rhs(t + h, x + h * (k1 - k2 + k3));
  return x + (h / 8.0) * (k1 + 3.0 * (k2 + k3) + k4);
}

void check_block_range(const Vector& x, const std::vector<RotationBlock>& blocks) {
  for (RotationBlock b : blocks) {
    if (b + 9 > static_cast<std::size_t>(x.size())) {
      throw std::invalid_argument("rotation block at offset " + std::to_string(b) +
                                  " exceeds state dimension " + std::to_string(x.size()));
    }
  }
}

void project_blocks(Vector& x, const std::vector<RotationBlock>& blocks) {
  for (RotationBlock b : blocks) {
    Eigen::Map<geom3::Mat3> block(x.data() + b);
    block = geom3::project_so3(block);
  }
}

}  // namespace

void IntegratorSettings::validate() const {
  if (steps_per_period < 16) {
    throw std::invalid_argument("steps_per_period must be >= 16, got " +
                                std::to_string(steps_per_period));
  }
  if (sample_stride < 1) {
    throw std::invalid_argument("sample_stride must be >= 1, got " +
                                std::to_string(sample_stride));
  }
}

StepPlan plan_steps(double span, double period, const IntegratorSettings& settings) {
  settings.validate();
  if (!(span > 0.0) || !std::isfinite(span)) {
    throw std::invalid_argument("integration horizon must be positive and finite");
  }
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("reference period must be positive and finite");
  }
  const double nominal = period / settings.steps_per_period;
  auto steps = static_cast<std::size_t>(std::ceil(span / nominal - 1e-9));
  if (steps == 0) steps = 1;
  return StepPlan{steps, static_cast<std::size_t>(settings.sample_stride),
                  span / static_cast<double>(steps)};
}

Trajectory integrate(const Rhs& rhs, const Vector& x0, double t0, double tf,
                     const IntegratorSettings& settings, double period) {
  return integrate(rhs, x0, t0, tf, plan_steps(tf, period, settings), settings.method);
}

Trajectory integrate(const Rhs& rhs, const Vector& x0, double t0, double tf,
                     const StepPlan& plan, Method method) {
  return integrate_projected(rhs, x0, t0, tf, plan, method, false, {});
}

Trajectory integrate_projected(const Rhs& rhs, const Vector& x0, double t0, double tf,
                               const IntegratorSettings& settings,
                               const std::vector<RotationBlock>& rotation_blocks,
                               double period) {
  return integrate_projected(rhs, x0, t0, tf, plan_steps(tf, period, settings),
                             settings.method, settings.project, rotation_blocks);
}

Trajectory integrate_projected(const Rhs& rhs, const Vector& x0, double t0, double tf,
                               const StepPlan& plan, Method method, bool project,
                               const std::vector<RotationBlock>& rotation_blocks) {
  if (!(tf > 0.0) || !std::isfinite(tf)) {
    throw std::invalid_argument("integration horizon must be positive and finite");
  }
  if (plan.steps == 0 || plan.stride == 0) {
    throw std::invalid_argument("step plan needs at least one step and stride >= 1");
  }
  if (!x0.allFinite()) {
    throw DivergenceError("non-finite initial state", t0);
  }
  check_block_range(x0, rotation_blocks);
  for (RotationBlock b : rotation_blocks) {
    const Eigen::Map<const geom3::Mat3> block(x0.data() + b);
    if (geom3::orthonormality_error(block) > kInitialRotationTolerance || block.determinant() <= 0.0) {
      throw std::invalid_argument("initial rotation block at offset " + std::to_string(b) +
                                  " is not within tolerance of SO(3)");
    }
  }

  const double h = tf / static_cast<double>(plan.steps);
  Trajectory traj;
  const std::size_t expected = plan.steps / plan.stride + 2;
  traj.times.reserve(expected);
  traj.states.reserve(expected);
  traj.times.push_back(t0);
  traj.states.push_back(x0);

  Vector x = x0;
  for (std::size_t k = 0; k < plan.steps; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    x = (method == Method::classic_rk4) ? step_classic(rhs, t, x, h)
                                        : step_three_eighths(rhs, t, x, h);
    const double t_next = t0 + static_cast<double>(k + 1) * h;
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "integration diverged at t = " << t_next;
      throw DivergenceError(msg.str(), t_next);
    }
    if (project) project_blocks(x, rotation_blocks);
    if ((k + 1) % plan.stride == 0 || k + 1 == plan.steps) {
      traj.times.push_back(t_next);
      traj.states.push_back(x);
    }
  }
  return traj;
}

double max_orthonormality_error(const Trajectory& traj,
                                const std::vector<RotationBlock>& rotation_blocks) {
  double worst = 0.0;
  for (const Vector& x : traj.states) {
    for (RotationBlock b : rotation_blocks) {
      const Eigen::Map<const geom3::Mat3> block(x.data() + b);
      worst = std::max(worst, geom3::orthonormality_error(block));
    }
  }
  return worst;
}

}  // namespace recavg::odeint
