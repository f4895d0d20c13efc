// recavg: simulate, sweep, verify and plot rigid-body source seeking runs.

#include "recavg/runner/csv.hpp"
#include "recavg/runner/plot.hpp"
#include "recavg/runner/run.hpp"
#include "recavg/runner/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace rr = recavg::runner;

namespace {

std::vector<double> parse_omega_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(rr::parse_number_text(item));
    } catch (const std::exception& e) {
      throw rr::ConfigError("--omegas: " + std::string(e.what()));
    }
  }
  return out;
}

void print_run(const rr::RunArtifacts& art) {
  std::printf("scenario %s: %zu samples -> %s\n", art.summary.scenario.c_str(), art.summary.samples,
              art.directory.string().c_str());
  for (const auto& [rep, s] : art.summary.representations) {
    std::printf("  %-12s final |p - p*| = %.6g  final c = %.6g  max SO(3) drift = %.3g",
                std::string(rr::representation_name(rep)).c_str(), s.final_distance, s.final_c,
                s.max_so3_drift);
    if (s.sup_error_vs_rora) std::printf("  sup |p - p_rora| = %.6g", *s.sup_error_vs_rora);
    std::printf("\n");
  }
  if (art.summary.gradient_bound_violation) {
    std::printf("  gradient bound violation = %.6g\n", *art.summary.gradient_bound_violation);
  }
}

rr::Scenario scenario_from(const std::string& config, const std::string& builtin) {
  if (!builtin.empty()) return rr::builtin_scenario(builtin);
  return rr::load_scenario(config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid-body source seeking and recursive two-timescale averaging"};
  app.require_subcommand(1);

  std::string config, builtin, out_dir, in_dir, omegas_text;
  bool with_plot = false, flip_bracket = false, swap_prefactors = false, as_json = false;
  int probes = 24;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario from a JSON config");
  simulate->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Output directory (default: $RECAVG_OUTPUT_ROOT/<name>)");
  simulate->add_flag("--plot", with_plot, "Also write SVG plots");

  auto* demo = app.add_subcommand("demo", "Run a built-in example (ex1 or ex2)");
  demo->add_option("name", builtin, "ex1 | ex2")->required()->check(CLI::IsMember({"ex1", "ex2"}));
  demo->add_option("--out", out_dir, "Output directory");
  demo->add_flag("--plot", with_plot, "Also write SVG plots");

  auto* sweep = app.add_subcommand("sweep", "Error versus omega against the reduced averaged flow");
  auto* sweep_config = sweep->add_option("--config", config, "Scenario file")->check(CLI::ExistingFile);
  auto* sweep_builtin =
      sweep->add_option("--scenario", builtin, "Built-in scenario instead of a file")
          ->check(CLI::IsMember({"ex1", "ex2"}));
  sweep_config->excludes(sweep_builtin);
  sweep->add_option("--omegas", omegas_text, "Comma separated list, e.g. 4pi,16pi,64pi");
  sweep->add_option("--out", out_dir, "Output directory");

  auto* verify = app.add_subcommand("verify", "Check the numerical averaging against closed forms");
  verify->add_flag("--flip-bracket", flip_bracket, "Debug: use the opposite bracket sign");
  verify->add_flag("--swap-prefactors", swap_prefactors, "Debug: move the 1/2 to the mean term");
  verify->add_option("--probes", probes, "Random (p, Q) probes for the A fit")->check(CLI::Range(3, 1000));
  verify->add_flag("--json", as_json, "Print the report as JSON");

  auto* plot = app.add_subcommand("plot", "Write SVG plots for a run directory");
  plot->add_option("--in", in_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rr::kExitOk : rr::kExitConfig;
  }

  try {
    if (*simulate || *demo) {
      const rr::Scenario s = *demo ? rr::builtin_scenario(builtin) : rr::load_scenario(config);
      const auto art = rr::run_scenario(s, out_dir);
      print_run(art);
      if (with_plot) {
        for (const auto& f : rr::plot(art.directory)) std::printf("  wrote %s\n", f.string().c_str());
      }
      return rr::kExitOk;
    }
    if (*sweep) {
      if (config.empty() && builtin.empty()) throw rr::ConfigError("sweep needs --config or --scenario");
      const rr::Scenario s = scenario_from(config, builtin);
      const auto omegas = omegas_text.empty() ? s.sweep.omegas : parse_omega_list(omegas_text);
      const auto res = rr::run_sweep(s, omegas, out_dir);
      std::printf("%-14s %-14s %s\n", "omega", "sup_error", "error*sqrt(omega)");
      for (std::size_t i = 0; i < omegas.size(); ++i) {
        std::printf("%-14.6g %-14.6g %.6g\n", omegas[i], res.report.sup_errors[i],
                    res.report.sup_errors[i] * std::sqrt(omegas[i]));
      }
      std::printf("fitted slope = %.4f  empirical C = %.4f  (%s)\n", res.report.fitted_slope,
                  res.report.empirical_C, res.csv.string().c_str());
      return rr::kExitOk;
    }
    if (*verify) {
      rr::VerifyOptions opts;
      opts.flip_bracket = flip_bracket;
      opts.swap_prefactors = swap_prefactors;
      opts.probes = probes;
      const auto rep = rr::verify_averaging(opts);
      if (as_json) {
        std::cout << rep.to_json().dump(2) << '\n';
      } else {
        std::printf("A (numeric):\n");
        for (int i = 0; i < 3; ++i) {
          std::printf("  %12.9f %12.9f %12.9f\n", rep.A_numeric(i, 0), rep.A_numeric(i, 1),
                      rep.A_numeric(i, 2));
        }
        std::printf("A discrepancy      %.3e\n", rep.A_discrepancy);
        std::printf("rotation residual  %.3e\n", rep.rotation_residual);
        std::printf("fit residual       %.3e\n", rep.fit_residual);
        std::printf("sin/cos discrepancy %.3e\n", rep.sincos_discrepancy);
        std::printf("bracket            %s\n", rep.bracket_convention.c_str());
        std::printf("prefactor          %s\n", rep.prefactor_convention.c_str());
        std::printf("%s: %s\n", rep.passed ? "PASS" : "FAIL", rep.diagnosis.c_str());
      }
      return rep.passed ? rr::kExitOk : rr::kExitVerification;
    }
    if (*plot) {
      for (const auto& f : rr::plot(in_dir)) std::printf("wrote %s\n", f.string().c_str());
      return rr::kExitOk;
    }
  } catch (const rr::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return rr::kExitConfig;
  } catch (const recavg::odeint::DivergenceError& e) {
    std::fprintf(stderr, "numerical divergence at t = %.6g: %s\n", e.time(), e.what());
    return rr::kExitDivergence;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return rr::kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
