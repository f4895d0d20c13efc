#pragma once

#include "recavg/avgcore.hpp"
#include "recavg/odeint.hpp"
#include "recavg/runner/csv.hpp"
#include "recavg/runner/scenario.hpp"
#include "recavg/seek3d.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace recavg::runner {

/// Exit codes of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitVerification = 4,
};

struct RepresentationSummary {
  double final_distance = 0.0;  // |p(tf) - p*(tf)|
  double final_c = 0.0;
  double max_so3_drift = 0.0;   // max |R^T R - I| over samples
  std::optional<double> sup_error_vs_rora;  // sup |p - pbar|
};

struct RunSummary {
  std::string scenario;
  std::size_t samples = 0;
  std::map<Representation, RepresentationSummary> representations;
  std::optional<double> gradient_bound_violation;  // only when kappa is configured
};

struct RunArtifacts {
  std::filesystem::path directory;
  std::map<Representation, std::filesystem::path> csv;
  std::vector<std::filesystem::path> comparisons;
  std::filesystem::path summary_file;
  RunSummary summary;
  std::map<Representation, odeint::Trajectory> trajectories;  // in the representation's own state layout
};

/// Columns of representation CSVs: t, px, py, pz, z, c and r11..r33 (row-major R).
std::vector<std::string> trajectory_columns(bool rotation_columns);

/// Runs every requested representation with identical sampling and writes
/// <rep>.csv, compare_<a>_<b>.csv, scenario.json and summary.json.
RunArtifacts run_scenario(const Scenario& scenario,
                          const std::filesystem::path& output_dir_override = {});

/// Runs without writing files.
RunArtifacts simulate_scenario(const Scenario& scenario);

/// Converts a trajectory of one representation to the CSV table layout.
Table trajectory_table(const Scenario& scenario, Representation rep,
                       const odeint::Trajectory& traj);

struct SweepResult {
  avgcore::ConvergenceReport report;
  std::filesystem::path csv;
  std::filesystem::path summary_file;
};

/// Transformed representation against the closed-form reduced averaged flow
/// over scenario.sweep.t_final for each omega.
avgcore::ConvergenceReport sweep_report(const Scenario& scenario, const std::vector<double>& omegas);
SweepResult run_sweep(const Scenario& scenario, const std::vector<double>& omegas,
                      const std::filesystem::path& output_dir_override = {});

struct VerifyOptions {
  bool flip_bracket = false;      // debug: opposite bracket sign
  bool swap_prefactors = false;   // debug: 1/2 on the mean term instead of the bracket
  int probes = 24;
  double a_tolerance = 1e-6;
  double rotation_tolerance = 1e-8;
  double sincos_tolerance = 1e-8;
};

struct VerifyReport {
  seek3d::Mat3 A_numeric = seek3d::Mat3::Zero();
  double A_discrepancy = 0.0;
  double rotation_residual = 0.0;
  double fit_residual = 0.0;
  double sincos_discrepancy = 0.0;
  bool passed = false;
  std::string bracket_convention;
  std::string prefactor_convention;
  std::string diagnosis;

  nlohmann::json to_json() const;
};

VerifyReport verify_averaging(const VerifyOptions& options = {});

}  // namespace recavg::runner
