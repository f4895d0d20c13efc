#pragma once

#include "recavg/odeint.hpp"
#include "recavg/seek3d.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace recavg::runner {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; the message lists every offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Representation { full, transformed, rora };

std::string_view representation_name(Representation r);
Representation parse_representation(std::string_view name);

enum class SweepMode {
  reduced,   // transformed system on the slow manifold z = c(p)
  singular,  // transformed system with the filter state z integrated
};

struct SweepSettings {
  double t_final = 20.0;  // sweep horizon from t0
  SweepMode mode = SweepMode::reduced;
  std::size_t reference_steps = 400;
  std::vector<double> omegas;  // optional default list for `sweep`
};

struct Scenario {
  std::string name = "scenario";
  seek3d::SeekParams params;
  seek3d::FieldSpec field;
  seek3d::Vec3 p0 = seek3d::Vec3::Zero();
  seek3d::Mat3 R0 = seek3d::Mat3::Identity();
  std::optional<double> z0;  // empty: start on the slow manifold z0 = c(p0, t0)
  double t0 = 0.0;
  double t_final = 1.0;  // end time (absolute), > t0
  odeint::IntegratorSettings integrator;
  std::vector<Representation> representations{Representation::full, Representation::transformed,
                                              Representation::rora};
  std::filesystem::path output_dir;  // empty: default output root / name
  bool rotation_columns = true;
  SweepSettings sweep;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;

  double initial_filter(const seek3d::SignalField& field) const;
};

/// Reads a JSON number or a string "a" or "a/b" where each side is a plain
/// number or [coef]pi[^k], e.g. "4pi", "16pi^2", "1/8", "pi/4", "1/(16pi^2)".
double parse_number(const nlohmann::json& value, const std::string& path);
double parse_number_text(std::string_view text);

Scenario parse_scenario(const nlohmann::json& config);
Scenario load_scenario(const std::filesystem::path& file);
nlohmann::json to_json(const Scenario& scenario);

/// "ex1": static source at the origin; "ex2": orbiting source. Both use
/// alpha = 1/8, omega = 4 pi, mu = 16 pi^2, p0 = (-2, -2, 6), R0 = I, t in [0, 200].
Scenario builtin_scenario(std::string_view name);

/// $RECAVG_OUTPUT_ROOT, or ./recavg-out when unset.
std::filesystem::path default_output_root();
std::filesystem::path resolve_output_dir(const Scenario& scenario);

}  // namespace recavg::runner
