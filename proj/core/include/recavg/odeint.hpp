#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace recavg::odeint {

using Vector = Eigen::VectorXd;

/// Right-hand side x' = rhs(t, x).
using Rhs = std::function<Vector(double t, const Vector& x)>;

enum class Method {
  classic_rk4,
  rk4_three_eighths,
};

struct IntegratorSettings {
  int steps_per_period = 64;  // substeps per shortest forcing period, >= 16
  Method method = Method::classic_rk4;
  bool project = true;        // only consulted by integrate_projected
  int sample_stride = 1;      // keep every n-th step, >= 1

  void validate() const;
};

/// Exact step layout of a run: `steps` equal steps of size `step`, a sample
/// every `stride` steps (and always at the final step).
struct StepPlan {
  std::size_t steps = 0;
  std::size_t stride = 1;
  double step = 0.0;
};

/// Smallest step count over a horizon of length `span` such that
/// step <= period / steps_per_period.
StepPlan plan_steps(double span, double period, const IntegratorSettings& settings);

/// Sampled solution.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  std::size_t dimension() const { return states.empty() ? 0 : static_cast<std::size_t>(states.front().size()); }
};

/// Thrown when the state stops being finite. `time()` is the end of the
/// first step that produced a non-finite component.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Offset of a 9-coordinate block holding a rotation matrix in column-major order.
using RotationBlock = std::size_t;

/// Fixed-step fourth-order integration over [t0, t0 + tf] with
/// step <= period / steps_per_period.
Trajectory integrate(const Rhs& rhs, const Vector& x0, double t0, double tf,
                     const IntegratorSettings& settings, double period = 1.0);

/// As integrate, but with an explicit step layout.
Trajectory integrate(const Rhs& rhs, const Vector& x0, double t0, double tf,
                     const StepPlan& plan, Method method);

/// As integrate, re-projecting each rotation block onto SO(3) after every step
/// when settings.project is set. Each block must start within 1e-6 of SO(3).
Trajectory integrate_projected(const Rhs& rhs, const Vector& x0, double t0, double tf,
                               const IntegratorSettings& settings,
                               const std::vector<RotationBlock>& rotation_blocks,
                               double period = 1.0);

Trajectory integrate_projected(const Rhs& rhs, const Vector& x0, double t0, double tf,
                               const StepPlan& plan, Method method, bool project,
                               const std::vector<RotationBlock>& rotation_blocks);

/// Largest max|Q^T Q - I| over all samples and blocks.
double max_orthonormality_error(const Trajectory& traj,
                                const std::vector<RotationBlock>& rotation_blocks);

}  // namespace recavg::odeint
