#include "recavg/runner/run.hpp"

#include "recavg/runner/csv.hpp"
#include "recavg/test_systems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace recavg::runner {

namespace {

using json = nlohmann::json;
using seek3d::Mat3;
using seek3d::Vec3;

constexpr std::size_t kRotationColumn = 6;  // first of r11..r33

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Vec3 row_position(const std::vector<double>& row) { return {row[1], row[2], row[3]}; }

Mat3 row_rotation(const std::vector<double>& row) {
  Mat3 R;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) R(i, j) = row[kRotationColumn + 3 * i + j];
  }
  return R;
}

struct Prepared {
  seek3d::SignalField field;
  double z0 = 0.0;
  Mat3 Q0;
  odeint::StepPlan plan;
};

Prepared prepare(const Scenario& s) {
  s.validate();
  Prepared p;
  p.field = seek3d::signal_field(s.field);
  p.z0 = s.initial_filter(p.field);
  p.Q0 = seek3d::intermediate_frame(s.R0, p.z0, s.t0, s.params);
  p.plan = odeint::plan_steps(s.t_final - s.t0, seek3d::fastest_period(s.params), s.integrator);
  return p;
}

odeint::Trajectory simulate_one(const Scenario& s, const Prepared& prep, Representation rep) {
  try {
    switch (rep) {
      case Representation::full:
        return seek3d::simulate_full(s.params, prep.field, {s.p0, s.R0, prep.z0}, s.t0, s.t_final - s.t0,
                                     prep.plan, s.integrator);
      case Representation::transformed:
        return seek3d::simulate_transformed(s.params, prep.field, s.p0, prep.Q0, prep.z0, s.t0,
                                            s.t_final - s.t0, prep.plan, s.integrator);
      case Representation::rora:
        return seek3d::simulate_rora(prep.field, s.p0, prep.Q0, s.t0, s.t_final - s.t0, prep.plan,
                                     s.integrator);
    }
  } catch (const odeint::DivergenceError& e) {
    throw odeint::DivergenceError(std::string(representation_name(rep)) + " run: " + e.what(),
                                  e.time());
  }
  throw std::logic_error("unknown representation");
}

Table comparison_table(const Table& a, const Table& b) {
  if (a.rows.size() != b.rows.size()) throw std::logic_error("representations sampled differently");
  Table out;
  out.columns = {"t", "err_pos", "err_c"};
  const std::size_t ci = a.column_index("c");
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    const double err_pos = (row_position(a.rows[k]) - row_position(b.rows[k])).norm();
    const double err_c = std::abs(a.rows[k][ci] - b.rows[k][ci]);
    out.rows.push_back({a.rows[k][0], err_pos, err_c});
  }
  return out;
}

RepresentationSummary summarize(const Table& table, const seek3d::SignalField& field) {
  RepresentationSummary s;
  const auto& last = table.rows.back();
  const double t = last[0];
  s.final_distance = (row_position(last) - field.source(t)).norm();
  s.final_c = last[table.column_index("c")];
  for (const auto& row : table.rows) {
    s.max_so3_drift = std::max(s.max_so3_drift, geom3::orthonormality_error(row_rotation(row)));
  }
  return s;
}

// Worst violation of the gradient bound at a spread of sample times, on a
// grid that covers every sampled position.
double worst_gradient_violation(const Scenario& s, const seek3d::SignalField& field,
                                const std::map<Representation, Table>& tables) {
  double radius = 1.0;
  for (const auto& [rep, table] : tables) {
    for (const auto& row : table.rows) {
      radius = std::max(radius, (row_position(row) - field.source(row[0])).lpNorm<Eigen::Infinity>());
    }
  }
  const auto& rows = tables.begin()->second.rows;
  constexpr std::size_t kTimes = 16;
  double worst = 0.0;
  for (std::size_t i = 0; i < kTimes; ++i) {
    const std::size_t k = i * (rows.size() - 1) / (kTimes - 1);
    worst = std::max(worst, seek3d::gradient_bound_violation(field, *s.field.kappa, rows[k][0],
                                                             radius, 11));
  }
  return worst;
}

json summary_json(const RunSummary& summary) {
  json reps = json::object();
  for (const auto& [rep, s] : summary.representations) {
    reps[std::string(representation_name(rep))] = {
        {"final_distance", s.final_distance},
        {"final_c", s.final_c},
        {"max_so3_drift", s.max_so3_drift},
        {"sup_error_vs_rora", optional_json(s.sup_error_vs_rora)}};
  }
  return {{"schema_version", kSchemaVersion},
          {"scenario", summary.scenario},
          {"samples", summary.samples},
          {"representations", reps},
          {"gradient_bound_violation", optional_json(summary.gradient_bound_violation)}};
}

}  // namespace

std::vector<std::string> trajectory_columns(bool rotation_columns) {
  std::vector<std::string> cols{"t", "px", "py", "pz", "z", "c"};
  if (rotation_columns) {
    for (int i = 1; i <= 3; ++i) {
      for (int j = 1; j <= 3; ++j) cols.push_back("r" + std::to_string(i) + std::to_string(j));
    }
  }
  return cols;
}

Table trajectory_table(const Scenario& scenario, Representation rep,
                       const odeint::Trajectory& traj) {
  const seek3d::SignalField field = seek3d::signal_field(scenario.field);
  Table table;
  table.columns = trajectory_columns(scenario.rotation_columns);
  table.rows.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    const auto& x = traj.states[k];
    Vec3 p = Vec3::Zero();
    Mat3 R = Mat3::Identity();
    double z = 0.0;
    switch (rep) {
      case Representation::full: {
        const auto st = seek3d::RigidState::unpack(x);
        p = st.p;
        R = st.R;
        z = st.z;
        break;
      }
      case Representation::transformed: {
        const auto st = seek3d::RigidState::unpack(x);
        p = st.p;
        z = st.z;
        R = seek3d::reconstruct_R(st.R, z, t, scenario.params);
        break;
      }
      case Representation::rora: {
        p = seek3d::embedded_position(x);
        z = field.c(p, t);
        R = seek3d::reconstruct_R(seek3d::embedded_frame(x), z, t, scenario.params);
        break;
      }
    }
    std::vector<double> row{t, p.x(), p.y(), p.z(), z, field.c(p, t)};
    if (scenario.rotation_columns) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) row.push_back(R(i, j));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

RunArtifacts simulate_scenario(const Scenario& scenario) {
  const Prepared prep = prepare(scenario);
  // Rotation columns are needed internally for the drift summary.
  Scenario with_rotation = scenario;
  with_rotation.rotation_columns = true;

  RunArtifacts art;
  art.summary.scenario = scenario.name;
  std::map<Representation, Table> tables;
  for (Representation rep : scenario.representations) {
    art.trajectories[rep] = simulate_one(scenario, prep, rep);
    tables[rep] = trajectory_table(with_rotation, rep, art.trajectories[rep]);
  }
  art.summary.samples = tables.begin()->second.rows.size();
  for (const auto& [rep, table] : tables) {
    RepresentationSummary s = summarize(table, prep.field);
    if (rep != Representation::rora && tables.count(Representation::rora)) {
      double sup = 0.0;
      for (const auto& row : comparison_table(table, tables.at(Representation::rora)).rows) {
        sup = std::max(sup, row[1]);
      }
      s.sup_error_vs_rora = sup;
    }
    art.summary.representations[rep] = s;
  }
  if (scenario.field.kappa) {
    art.summary.gradient_bound_violation = worst_gradient_violation(scenario, prep.field, tables);
  }
  return art;
}

RunArtifacts run_scenario(const Scenario& scenario, const std::filesystem::path& output_dir_override) {
  scenario.validate();
  RunArtifacts art = simulate_scenario(scenario);
  art.directory = output_dir_override.empty() ? resolve_output_dir(scenario) : output_dir_override;
  std::filesystem::create_directories(art.directory);

  std::map<Representation, Table> tables;
  for (const auto& [rep, traj] : art.trajectories) {
    tables[rep] = trajectory_table(scenario, rep, traj);
    const auto file = art.directory / (std::string(representation_name(rep)) + ".csv");
    write_csv(file, tables[rep]);
    art.csv[rep] = file;
  }
  for (auto a = tables.begin(); a != tables.end(); ++a) {
    for (auto b = std::next(a); b != tables.end(); ++b) {
      const auto file = art.directory / ("compare_" + std::string(representation_name(a->first)) +
                                         "_" + std::string(representation_name(b->first)) + ".csv");
      write_csv(file, comparison_table(a->second, b->second));
      art.comparisons.push_back(file);
    }
  }
  write_json(art.directory / "scenario.json", to_json(scenario));
  art.summary_file = art.directory / "summary.json";
  write_json(art.summary_file, summary_json(art.summary));
  return art;
}

avgcore::ConvergenceReport sweep_report(const Scenario& scenario, const std::vector<double>& omegas) {
  const Prepared prep = prepare(scenario);
  if (omegas.size() < 3) throw ConfigError("sweep needs at least 3 omega values");
  avgcore::ConvergenceSettings settings;
  settings.integrator = scenario.integrator;
  settings.integrator.sample_stride = 1;
  settings.reference_steps = scenario.sweep.reference_steps;
  settings.rotation_blocks = {3};
  const double horizon = scenario.sweep.t_final;
  const avgcore::Vector x0 = seek3d::embed(scenario.p0, prep.Q0);
  const avgcore::SingularSystem ssys = seek3d::embedded_system(scenario.params, prep.field);
  const avgcore::AveragedSystem reference = seek3d::rora_system(prep.field);
  if (scenario.sweep.mode == SweepMode::reduced) {
    const avgcore::TwoScaleSystem reduced = avgcore::reduce_to_slow_manifold(ssys);
    return avgcore::convergence_study(reduced, x0, scenario.t0, horizon, omegas, settings, reference);
  }
  return avgcore::convergence_study(ssys, x0, avgcore::Vector::Constant(1, prep.z0), scenario.t0,
                                    horizon, omegas, settings, reference);
}

SweepResult run_sweep(const Scenario& scenario, const std::vector<double>& omegas,
                      const std::filesystem::path& output_dir_override) {
  SweepResult result;
  result.report = sweep_report(scenario, omegas);
  const auto dir = output_dir_override.empty() ? resolve_output_dir(scenario) : output_dir_override;
  std::filesystem::create_directories(dir);
  Table table;
  table.columns = {"omega", "sup_error", "error_sqrt_omega"};
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const double e = result.report.sup_errors[i];
    table.rows.push_back({omegas[i], e, e * std::sqrt(omegas[i])});
  }
  result.csv = dir / "sweep.csv";
  write_csv(result.csv, table);
  result.summary_file = dir / "sweep_summary.json";
  write_json(result.summary_file,
             {{"schema_version", kSchemaVersion},
              {"scenario", scenario.name},
              {"mode", scenario.sweep.mode == SweepMode::reduced ? "reduced" : "singular"},
              {"horizon", result.report.horizon},
              {"omegas", omegas},
              {"sup_errors", result.report.sup_errors},
              {"fitted_slope", result.report.fitted_slope},
              {"empirical_C", result.report.empirical_C}});
  return result;
}

json VerifyReport::to_json() const {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({A_numeric(i, 0), A_numeric(i, 1), A_numeric(i, 2)});
  return {{"passed", passed},
          {"A_numeric", rows},
          {"A_discrepancy", A_discrepancy},
          {"rotation_residual", rotation_residual},
          {"fit_residual", fit_residual},
          {"sincos_discrepancy", sincos_discrepancy},
          {"bracket_convention", bracket_convention},
          {"prefactor_convention", prefactor_convention},
          {"diagnosis", diagnosis}};
}

VerifyReport verify_averaging(const VerifyOptions& options) {
  VerifyReport report;
  avgcore::QuadratureSettings quad;
  quad.bracket = options.flip_bracket ? avgcore::BracketConvention::flipped
                                      : avgcore::BracketConvention::standard;
  quad.prefactor = options.swap_prefactors ? avgcore::PrefactorConvention::mean_half
                                           : avgcore::PrefactorConvention::bracket_half;
  report.bracket_convention = options.flip_bracket ? "[f,g] = (Df)g - (Dg)f"
                                                   : "[f,g] = (Dg)f - (Df)g";
  report.prefactor_convention = options.swap_prefactors ? "1/2 on the mean of f2"
                                                         : "1/2 on the bracket term";

  const Mat3& A = seek3d::averaged_gain();
  std::vector<std::string> problems;
  try {
    const auto res = seek3d::compute_A_numeric(seek3d::SeekParams{}, quad, options.probes);
    report.A_numeric = res.A;
    report.rotation_residual = res.rotation_residual;
    report.fit_residual = res.fit_residual;
    report.A_discrepancy = (res.A - A).cwiseAbs().maxCoeff();
  } catch (const seek3d::ConventionError& e) {
    report.A_discrepancy = INFINITY;
    problems.push_back(e.what());
  }

  // sin/cos field with a closed-form average, at 10 seeded random states
  {
    const avgcore::TwoScaleSystem sys = avgcore::sincos_system(1.0);
    const avgcore::AveragedSystem avg = avgcore::average_fields(sys, quad);
    const avgcore::Matrix M = avgcore::sincos_average();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (int k = 0; k < 10; ++k) {
      avgcore::Vector x(2);
      x << unit(rng), unit(rng);
      report.sincos_discrepancy =
          std::max(report.sincos_discrepancy, (avg(x, 0.0) - M * x).lpNorm<Eigen::Infinity>());
    }
  }

  const bool a_ok = report.A_discrepancy <= options.a_tolerance;
  const bool rot_ok = report.rotation_residual <= options.rotation_tolerance;
  const bool sc_ok = report.sincos_discrepancy <= options.sincos_tolerance;
  report.passed = a_ok && rot_ok && sc_ok;

  std::ostringstream diag;
  if (report.passed) {
    diag << "ok";
  } else {
    if (!a_ok && std::isfinite(report.A_discrepancy)) {
      const double neg = (report.A_numeric + A).cwiseAbs().maxCoeff();
      const double dbl = (report.A_numeric - 2.0 * A).cwiseAbs().maxCoeff();
      if (neg <= options.a_tolerance) {
        diag << "A has the wrong sign (numeric A = -A): bracket sign convention reversed; ";
      } else if (dbl <= options.a_tolerance) {
        diag << "A is off by a factor 2: the 1/2 prefactor is not on the bracket term; ";
      } else {
        diag << "A mismatch of " << report.A_discrepancy << "; ";
      }
    }
    if (!rot_ok) diag << "rotation block residual " << report.rotation_residual << "; ";
    if (!sc_ok) {
      diag << "sin/cos average off by " << report.sincos_discrepancy
           << (options.flip_bracket ? " (sign reversed)" : "") << "; ";
    }
    for (const auto& p : problems) diag << p << "; ";
  }
  report.diagnosis = diag.str();
  if (report.diagnosis.size() > 2 && report.diagnosis.ends_with("; ")) {
    report.diagnosis.resize(report.diagnosis.size() - 2);
  }
  return report;
}

}  // namespace recavg::runner
