#include "recavg/avgcore.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace recavg::avgcore {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double fd_step(const Vector& x) { return std::max(1e-6, 1e-6 * inf_norm(x)); }

// Composite Simpson weight of node i out of panels + 1, without the h/3 factor.
double simpson_weight(int i, int panels) {
  if (i == 0 || i == panels) return 1.0;
  return (i % 2 == 1) ? 4.0 : 2.0;
}

struct Sampler {
  explicit Sampler(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  Vector state(int n, double radius) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = uniform(-radius, radius);
    return x;
  }
  std::mt19937_64 rng;
};

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw AssumptionError(std::string(what) + ": non-finite field value");
}

void check_periodic(const TwoScaleField& f, const char* name, const AssumptionCheck& check,
                    Sampler& sampler, bool zero_mean) {
  for (int s = 0; s < check.samples; ++s) {
    const Vector x = sampler.state(f.dim, check.state_radius);
    const double t = sampler.uniform(0.0, check.time_span);
    const double sigma = sampler.uniform(0.0, f.T1);
    const double tau = sampler.uniform(0.0, f.T2);
    const Vector base = f(x, t, sigma, tau);
    require_finite(base, name);
    if (base.size() != f.dim) {
      throw AssumptionError(std::string(name) + ": field returned wrong dimension");
    }
    const double scale = 1.0 + inf_norm(base);
    if (inf_norm(f(x, t, sigma + f.T1, tau) - base) > check.tolerance * scale) {
      throw AssumptionError(std::string(name) + " is not T1-periodic in sigma");
    }
    if (inf_norm(f(x, t, sigma, tau + f.T2) - base) > check.tolerance * scale) {
      throw AssumptionError(std::string(name) + " is not T2-periodic in tau");
    }
    if (zero_mean) {
      constexpr int kPanels = 64;
      const double h = f.T2 / kPanels;
      Vector sum = Vector::Zero(f.dim);
      double peak = 0.0;
      for (int j = 0; j <= kPanels; ++j) {
        const Vector v = f(x, t, sigma, j * h);
        peak = std::max(peak, inf_norm(v));
        sum += simpson_weight(j, kPanels) * v;
      }
      const Vector mean = sum * (h / 3.0) / f.T2;
      if (inf_norm(mean) > check.tolerance * (1.0 + peak)) {
        std::ostringstream msg;
        msg << name << " has nonzero mean over one tau-period (|mean| = " << inf_norm(mean)
            << ")";
        throw AssumptionError(msg.str());
      }
    }
  }
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
  }
}

void check_field_shape(const TwoScaleField& f, const char* name) {
  if (f.dim <= 0 || !f.eval) throw std::invalid_argument(std::string(name) + ": empty field");
  check_positive(f.T1, "T1");
  check_positive(f.T2, "T2");
}

}  // namespace

// ---------------------------------------------------------------------------
// Fields and systems

Matrix TwoScaleField::state_jacobian(const Vector& x, double t, double sigma, double tau) const {
  if (jacobian) return jacobian(x, t, sigma, tau);
  return jacobian_fd([&](const Vector& y) { return eval(y, t, sigma, tau); }, x);
}

TwoScaleField TwoScaleField::zero(int dim) {
  TwoScaleField f;
  f.dim = dim;
  f.eval = [dim](const Vector&, double, double, double) { return Vector::Zero(dim).eval(); };
  f.jacobian = [dim](const Vector&, double, double, double) {
    return Matrix::Zero(dim, dim).eval();
  };
  return f;
}

SingularField SingularField::zero(int dim, int fast_dim) {
  SingularField f;
  f.dim = dim;
  f.fast_dim = fast_dim;
  f.eval = [dim](const Vector&, const Vector&, double, double, double) {
    return Vector::Zero(dim).eval();
  };
  f.jacobian_x = [dim](const Vector&, const Vector&, double, double, double) {
    return Matrix::Zero(dim, dim).eval();
  };
  f.jacobian_z = [dim, fast_dim](const Vector&, const Vector&, double, double, double) {
    return Matrix::Zero(dim, fast_dim).eval();
  };
  return f;
}

TwoScaleSystem::TwoScaleSystem(TwoScaleField f1, TwoScaleField f2, double omega,
                               const AssumptionCheck& check)
    : TwoScaleSystem(std::move(f1), std::move(f2), omega, Validated{}) {
  if (!check.enabled) return;
  Sampler sampler(check.seed);
  check_periodic(f1_, "f1", check, sampler, /*zero_mean=*/true);
  check_periodic(f2_, "f2", check, sampler, /*zero_mean=*/false);
}

TwoScaleSystem::TwoScaleSystem(TwoScaleField f1, TwoScaleField f2, double omega, Validated)
    : f1_(std::move(f1)), f2_(std::move(f2)), omega_(omega) {
  check_field_shape(f1_, "f1");
  check_field_shape(f2_, "f2");
  if (f1_.dim != f2_.dim) throw std::invalid_argument("f1 and f2 dimensions differ");
  check_positive(omega_, "omega");
}

double TwoScaleSystem::fastest_period() const {
  const double rs = std::sqrt(omega_);
  return std::min({f1_.T2 / omega_, f2_.T2 / omega_, f1_.T1 / rs, f2_.T1 / rs});
}

TwoScaleSystem TwoScaleSystem::with_omega(double omega) const {
  return TwoScaleSystem(f1_, f2_, omega, Validated{});
}

Vector TwoScaleSystem::rhs(double t, const Vector& x) const {
  const double rs = std::sqrt(omega_);
  const double sigma = rs * t;
  const double tau = omega_ * t;
  return rs * f1_(x, t, sigma, tau) + f2_(x, t, sigma, tau);
}

SingularSystem::SingularSystem(SingularField f1, SingularField f2, FastDynamics fast, double mu,
                               double omega, const AssumptionCheck& check)
    : SingularSystem(std::move(f1), std::move(f2), std::move(fast), mu, omega, Validated{}) {
  if (!check.enabled) return;
  Sampler sampler(check.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int s = 0; s < check.samples; ++s) {
    const Vector x = sampler.state(dim(), check.state_radius);
    const double t = sampler.uniform(0.0, check.time_span);
    const Vector z = fast_.phi(x, t);
    if (z.size() != fast_dim()) throw AssumptionError("phi returned wrong dimension");
    const Vector residual = fast_.g(x, z, t);
    if (!residual.allFinite() || inf_norm(residual) > check.tolerance * (1.0 + inf_norm(z))) {
      throw AssumptionError("g(x, phi(x)) != 0: phi is not an equilibrium of the fast dynamics");
    }
  }
  // Periodicity and zero mean of the reduced fields.
  reduce_to_slow_manifold(*this, check);
}

SingularSystem::SingularSystem(SingularField f1, SingularField f2, FastDynamics fast, double mu,
                               double omega, Validated)
    : f1_(std::move(f1)),
      f2_(std::move(f2)),
      fast_(std::move(fast)),
      mu_(mu),
      omega_(omega) {
  if (f1_.dim <= 0 || f1_.fast_dim <= 0 || !f1_.eval || !f2_.eval) {
    throw std::invalid_argument("singular system: empty field");
  }
  if (f1_.dim != f2_.dim || f1_.fast_dim != f2_.fast_dim) {
    throw std::invalid_argument("singular system: f1 and f2 shapes differ");
  }
  if (!fast_.g || !fast_.phi) throw std::invalid_argument("singular system: missing g or phi");
  check_positive(f1_.T1, "T1");
  check_positive(f1_.T2, "T2");
  check_positive(f2_.T1, "T1");
  check_positive(f2_.T2, "T2");
  check_positive(mu_, "mu");
  check_positive(omega_, "omega");
}

double SingularSystem::fastest_period() const {
  const double rs = std::sqrt(omega_);
  return std::min({f1_.T2 / omega_, f2_.T2 / omega_, f1_.T1 / rs, f2_.T1 / rs,
                   2.0 * std::numbers::pi * mu_});
}

SingularSystem SingularSystem::with_omega(double omega) const {
  return SingularSystem(f1_, f2_, fast_, mu_, omega, Validated{});
}

SingularSystem SingularSystem::with_mu(double mu) const {
  return SingularSystem(f1_, f2_, fast_, mu, omega_, Validated{});
}

Vector SingularSystem::rhs(double t, const Vector& xz) const {
  const int n = dim();
  const int m = fast_dim();
  const Vector x = xz.head(n);
  const Vector z = xz.tail(m);
  const double rs = std::sqrt(omega_);
  const double sigma = rs * t;
  const double tau = omega_ * t;
  Vector out(n + m);
  out.head(n) = rs * f1_.eval(x, z, t, sigma, tau) + f2_.eval(x, z, t, sigma, tau);
  out.tail(m) = fast_.g(x, z, t) / mu_;
  return out;
}

void QuadratureSettings::validate() const {
  if (panels < 2 || panels % 2 != 0) {
    throw std::invalid_argument("quadrature panels must be even and >= 2");
  }
  if (max_panels < panels) throw std::invalid_argument("max_panels below panels");
  if (!(tolerance > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
}

// ---------------------------------------------------------------------------
// Brackets

Matrix jacobian_fd(const VectorField& f, const Vector& x) {
  const double h = fd_step(x);
  const int n = static_cast<int>(x.size());
  Matrix jac;
  Vector xp = x;
  for (int j = 0; j < n; ++j) {
    xp[j] = x[j] + h;
    const Vector fp = f(xp);
    xp[j] = x[j] - h;
    const Vector fm = f(xp);
    xp[j] = x[j];
    if (j == 0) jac.resize(fp.size(), n);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Vector lie_bracket(const VectorField& f, const VectorField& g, const Vector& x,
                   const JacobianFn& df, const JacobianFn& dg) {
  const Matrix jf = df ? df(x) : jacobian_fd(f, x);
  const Matrix jg = dg ? dg(x) : jacobian_fd(g, x);
  if (!jf.allFinite() || !jg.allFinite()) {
    throw std::domain_error("lie_bracket: non-finite Jacobian entries");
  }
  return jg * f(x) - jf * g(x);
}

// ---------------------------------------------------------------------------
// Averaging

AverageTerms average_terms(const TwoScaleSystem& sys, const Vector& x, double t, int panels,
                           const QuadratureSettings& quad) {
  const int n = sys.dim();
  const TwoScaleField& f1 = sys.f1();
  const TwoScaleField& f2 = sys.f2();
  const int np = panels;

  // Bracket term. For each sigma node, walk the tau grid once: the running
  // antiderivative U(tau) = int_0^tau f1 and its Jacobian DU are accumulated
  // panel by panel with Simpson's rule (midpoint included), and the bracket
  // [U, f1] = (Df1) U - (DU) f1 is integrated with Simpson on the panel ends.
  const double h1 = f1.T1 / np;
  const double h2 = f1.T2 / np;
  Vector bracket_sum = Vector::Zero(n);
  for (int i = 0; i <= np; ++i) {
    const double sigma = i * h1;
    Vector u = Vector::Zero(n);
    Matrix du = Matrix::Zero(n, n);
    Vector f_prev = f1(x, t, sigma, 0.0);
    Matrix j_prev = f1.state_jacobian(x, t, sigma, 0.0);
    Vector inner = Vector::Zero(n);  // bracket vanishes at tau = 0
    for (int j = 1; j <= np; ++j) {
      const double tau_mid = (j - 0.5) * h2;
      const double tau = j * h2;
      const Vector f_mid = f1(x, t, sigma, tau_mid);
      const Matrix j_mid = f1.state_jacobian(x, t, sigma, tau_mid);
      const Vector f_end = f1(x, t, sigma, tau);
      const Matrix j_end = f1.state_jacobian(x, t, sigma, tau);
      u += (h2 / 6.0) * (f_prev + 4.0 * f_mid + f_end);
      du += (h2 / 6.0) * (j_prev + 4.0 * j_mid + j_end);
      inner += simpson_weight(j, np) * (j_end * u - du * f_end);
      f_prev = f_end;
      j_prev = j_end;
    }
    bracket_sum += simpson_weight(i, np) * inner;
  }
  // int int B = bracket_sum * (h1/3) * (h2/3)
  Vector bracket_term = bracket_sum * ((h1 / 3.0) * (h2 / 3.0) / (f1.T1 * f1.T2));

  const double g1 = f2.T1 / np;
  const double g2 = f2.T2 / np;
  Vector mean_sum = Vector::Zero(n);
  for (int i = 0; i <= np; ++i) {
    Vector row = Vector::Zero(n);
    for (int j = 0; j <= np; ++j) row += simpson_weight(j, np) * f2(x, t, i * g1, j * g2);
    mean_sum += simpson_weight(i, np) * row;
  }
  Vector mean_term = mean_sum * ((g1 / 3.0) * (g2 / 3.0) / (f2.T1 * f2.T2));

  if (quad.prefactor == PrefactorConvention::bracket_half) {
    bracket_term *= 0.5;
  } else {
    mean_term *= 0.5;
  }
  if (quad.bracket == BracketConvention::flipped) bracket_term = -bracket_term;
  return {std::move(bracket_term), std::move(mean_term)};
}

AveragedSystem average_fields(const TwoScaleSystem& sys, const QuadratureSettings& quad) {
  quad.validate();
  AveragedSystem out;
  out.dim = sys.dim();
  out.eval = [sys, quad](const Vector& x, double t) -> Vector {
    int panels = quad.panels;
    AverageTerms coarse = average_terms(sys, x, t, panels, quad);
    Vector previous = coarse.bracket_term + coarse.mean_term;
    while (2 * panels <= quad.max_panels) {
      panels *= 2;
      AverageTerms fine = average_terms(sys, x, t, panels, quad);
      Vector current = fine.bracket_term + fine.mean_term;
      if (!current.allFinite()) throw QuadratureError("averaged field is not finite");
      if (inf_norm(current - previous) <= quad.tolerance * (1.0 + inf_norm(current))) {
        return current;
      }
      previous = std::move(current);
    }
    std::ostringstream msg;
    msg << "averaging quadrature did not converge within " << quad.max_panels << " panels";
    throw QuadratureError(msg.str());
  };
  return out;
}

TwoScaleSystem reduce_to_slow_manifold(const SingularSystem& ssys, const AssumptionCheck& check) {
  auto substitute = [&ssys](const SingularField& f) {
    TwoScaleField out;
    out.dim = f.dim;
    out.T1 = f.T1;
    out.T2 = f.T2;
    out.eval = [eval = f.eval, phi = ssys.phi()](const Vector& x, double t, double sigma,
                                                 double tau) {
      return eval(x, phi(x, t), t, sigma, tau);
    };
    // Chain rule D_x f(x, phi(x)) = D_x f + D_z f D phi when all pieces are analytic.
    if (f.jacobian_x && f.jacobian_z && ssys.fast().phi_jacobian) {
      out.jacobian = [jx = f.jacobian_x, jz = f.jacobian_z, phi = ssys.phi(),
                      dphi = ssys.fast().phi_jacobian](const Vector& x, double t, double sigma,
                                                       double tau) -> Matrix {
        const Vector z = phi(x, t);
        return jx(x, z, t, sigma, tau) + jz(x, z, t, sigma, tau) * dphi(x, t);
      };
    }
    return out;
  };
  return TwoScaleSystem(substitute(ssys.f1()), substitute(ssys.f2()), ssys.omega(), check);
}

AveragedSystem rora_reduce(const SingularSystem& ssys, const QuadratureSettings& quad) {
  AssumptionCheck check;
  check.enabled = false;  // already validated when ssys was built
  return average_fields(reduce_to_slow_manifold(ssys, check), quad);
}

// ---------------------------------------------------------------------------
// Simulation

odeint::Trajectory simulate_two_scale(const TwoScaleSystem& sys, const Vector& x0, double t0,
                                      double tf, const odeint::IntegratorSettings& settings,
                                      const RotationBlocks& rotation_blocks) {
  return simulate_two_scale(sys, x0, t0, tf,
                            odeint::plan_steps(tf, sys.fastest_period(), settings), settings,
                            rotation_blocks);
}

odeint::Trajectory simulate_two_scale(const TwoScaleSystem& sys, const Vector& x0, double t0,
                                      double tf, const odeint::StepPlan& plan,
                                      const odeint::IntegratorSettings& settings,
                                      const RotationBlocks& rotation_blocks) {
  if (x0.size() != sys.dim()) throw std::invalid_argument("initial state has wrong dimension");
  return odeint::integrate_projected([&sys](double t, const Vector& x) { return sys.rhs(t, x); },
                                     x0, t0, tf, plan, settings.method, settings.project,
                                     rotation_blocks);
}

odeint::Trajectory simulate_singular(const SingularSystem& ssys, const Vector& x0,
                                     const Vector& z0, double t0, double tf,
                                     const odeint::IntegratorSettings& settings,
                                     const RotationBlocks& rotation_blocks) {
  return simulate_singular(ssys, x0, z0, t0, tf,
                           odeint::plan_steps(tf, ssys.fastest_period(), settings), settings,
                           rotation_blocks);
}

odeint::Trajectory simulate_singular(const SingularSystem& ssys, const Vector& x0,
                                     const Vector& z0, double t0, double tf,
                                     const odeint::StepPlan& plan,
                                     const odeint::IntegratorSettings& settings,
                                     const RotationBlocks& rotation_blocks) {
  if (x0.size() != ssys.dim() || z0.size() != ssys.fast_dim()) {
    throw std::invalid_argument("initial state has wrong dimension");
  }
  Vector xz(x0.size() + z0.size());
  xz << x0, z0;
  return odeint::integrate_projected(
      [&ssys](double t, const Vector& s) { return ssys.rhs(t, s); }, xz, t0, tf, plan,
      settings.method, settings.project, rotation_blocks);
}

odeint::Trajectory simulate_averaged(const AveragedSystem& asys, const Vector& x0, double t0,
                                     double tf, const odeint::IntegratorSettings& settings,
                                     double period, const RotationBlocks& rotation_blocks) {
  return simulate_averaged(asys, x0, t0, tf, odeint::plan_steps(tf, period, settings), settings,
                           rotation_blocks);
}

odeint::Trajectory simulate_averaged(const AveragedSystem& asys, const Vector& x0, double t0,
                                     double tf, const odeint::StepPlan& plan,
                                     const odeint::IntegratorSettings& settings,
                                     const RotationBlocks& rotation_blocks) {
  if (x0.size() != asys.dim) throw std::invalid_argument("initial state has wrong dimension");
  return odeint::integrate_projected(
      [&asys](double t, const Vector& x) { return asys(x, t); }, x0, t0, tf, plan,
      settings.method, settings.project, rotation_blocks);
}

// ---------------------------------------------------------------------------
// Convergence studies

double fit_loglog_slope(const std::vector<double>& omegas, const std::vector<double>& errors) {
  if (omegas.size() != errors.size() || omegas.size() < 2) {
    throw std::invalid_argument("slope fit needs matching lists of length >= 2");
  }
  const double n = static_cast<double>(omegas.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const double lx = std::log(omegas[i]);
    const double ly = std::log(errors[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

void validate_omegas(const std::vector<double>& omegas) {
  if (omegas.size() < 3) {
    throw std::invalid_argument("convergence study needs at least 3 omega values");
  }
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!(omegas[i] > 0.0) || !std::isfinite(omegas[i])) {
      throw std::invalid_argument("omega values must be positive and finite");
    }
    if (i > 0 && !(omegas[i] > omegas[i - 1])) {
      throw std::invalid_argument("omega values must be strictly increasing");
    }
  }
}

// Plan for the oscillatory run whose samples coincide with the reference samples.
odeint::StepPlan matched_plan(double span, double period, const ConvergenceSettings& settings) {
  settings.integrator.validate();
  const std::size_t m = settings.reference_steps;
  const double coarse = span / static_cast<double>(m);
  const double nominal = period / settings.integrator.steps_per_period;
  auto k = static_cast<std::size_t>(std::ceil(coarse / nominal - 1e-9));
  if (k == 0) k = 1;
  return {m * k, k, span / static_cast<double>(m * k)};
}

double sup_distance(const odeint::Trajectory& a, const odeint::Trajectory& ref, int block) {
  if (a.size() != ref.size()) {
    throw std::logic_error("convergence study: sample counts differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, (a.states[i].head(block) - ref.states[i].head(block)).norm());
  }
  return worst;
}

template <typename RunFn>
ConvergenceReport run_study(const std::vector<double>& omegas, double tf,
                            const ConvergenceSettings& settings, RunFn run_one) {
  ConvergenceReport report;
  report.omega_values = omegas;
  report.horizon = tf;
  report.sup_errors.resize(omegas.size());
  auto guarded = [&](double omega) {
    try {
      return run_one(omega);
    } catch (const odeint::DivergenceError& e) {
      std::ostringstream msg;
      msg << "run at omega = " << omega << " diverged: " << e.what();
      throw odeint::DivergenceError(msg.str(), e.time());
    }
  };
  if (settings.parallel) {
    std::vector<std::future<double>> futures;
    futures.reserve(omegas.size());
    for (double omega : omegas) futures.push_back(std::async(std::launch::async, guarded, omega));
    for (std::size_t i = 0; i < omegas.size(); ++i) report.sup_errors[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < omegas.size(); ++i) report.sup_errors[i] = guarded(omegas[i]);
  }
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    report.empirical_C = std::max(report.empirical_C, report.sup_errors[i] * std::sqrt(omegas[i]));
  }
  if (std::all_of(report.sup_errors.begin(), report.sup_errors.end(),
                  [](double e) { return e > 0.0; })) {
    report.fitted_slope = fit_loglog_slope(omegas, report.sup_errors);
  } else {
    report.fitted_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

odeint::StepPlan reference_plan(double span, const ConvergenceSettings& settings) {
  if (settings.reference_steps == 0) throw std::invalid_argument("reference_steps must be >= 1");
  return {settings.reference_steps, 1, span / static_cast<double>(settings.reference_steps)};
}

}  // namespace

ConvergenceReport convergence_study(const TwoScaleSystem& sys, const Vector& x0, double t0,
                                    double tf, const std::vector<double>& omegas,
                                    const ConvergenceSettings& settings,
                                    const std::optional<AveragedSystem>& reference) {
  validate_omegas(omegas);
  if (!(tf > 0.0)) throw std::invalid_argument("horizon must be positive");
  const AveragedSystem averaged = reference ? *reference : average_fields(sys, settings.quadrature);
  const odeint::Trajectory ref = simulate_averaged(averaged, x0, t0, tf,
                                                   reference_plan(tf, settings),
                                                   settings.integrator, settings.rotation_blocks);
  return run_study(omegas, tf, settings, [&](double omega) {
    const TwoScaleSystem at = sys.with_omega(omega);
    const odeint::Trajectory traj =
        simulate_two_scale(at, x0, t0, tf, matched_plan(tf, at.fastest_period(), settings),
                           settings.integrator, settings.rotation_blocks);
    return sup_distance(traj, ref, sys.dim());
  });
}

ConvergenceReport convergence_study(const SingularSystem& ssys, const Vector& x0,
                                    const Vector& z0, double t0, double tf,
                                    const std::vector<double>& omegas,
                                    const ConvergenceSettings& settings,
                                    const std::optional<AveragedSystem>& reference) {
  validate_omegas(omegas);
  if (!(tf > 0.0)) throw std::invalid_argument("horizon must be positive");
  const AveragedSystem averaged = reference ? *reference : rora_reduce(ssys, settings.quadrature);
  const odeint::Trajectory ref = simulate_averaged(averaged, x0, t0, tf,
                                                   reference_plan(tf, settings),
                                                   settings.integrator, settings.rotation_blocks);
  return run_study(omegas, tf, settings, [&](double omega) {
    const SingularSystem at = ssys.with_omega(omega);
    const odeint::Trajectory traj =
        simulate_singular(at, x0, z0, t0, tf, matched_plan(tf, at.fastest_period(), settings),
                          settings.integrator, settings.rotation_blocks);
    return sup_distance(traj, ref, ssys.dim());
  });
}

}  // namespace recavg::avgcore
