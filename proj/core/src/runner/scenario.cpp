#include "recavg/runner/scenario.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace recavg::runner {

namespace {

using json = nlohmann::json;

constexpr double kPi = std::numbers::pi;

// Collects field-level problems so that a config error reports all of them.
class Problems {
 public:
  void add(const std::string& path, const std::string& message) {
    items_.push_back(path + ": " + message);
  }
  bool empty() const { return items_.empty(); }
  [[noreturn]] void raise() const {
    std::ostringstream msg;
    msg << "invalid configuration";
    for (const auto& item : items_) msg << "\n  " << item;
    throw ConfigError(msg.str());
  }

 private:
  std::vector<std::string> items_;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_plain(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) throw std::invalid_argument("empty number");
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("not a number: '" + t + "'");
  return value;
}

// "<coef>pi[^k]" or a plain number.
double parse_term(const std::string& s) {
  const auto pi_pos = s.find("pi");
  if (pi_pos == std::string::npos) return parse_plain(s);
  const std::string coef = s.substr(0, pi_pos);
  std::string rest = s.substr(pi_pos + 2);
  int power = 1;
  if (!rest.empty() && rest[0] == '^') {
    std::size_t end = 1;
    while (end < rest.size() && std::isdigit(static_cast<unsigned char>(rest[end]))) ++end;
    if (end == 1) throw std::invalid_argument("missing exponent after '^'");
    power = std::stoi(rest.substr(1, end - 1));
    rest = rest.substr(end);
  }
  if (!rest.empty()) throw std::invalid_argument("unexpected text after pi: '" + rest + "'");
  double value = coef.empty() ? 1.0 : coef == "-" ? -1.0 : parse_plain(coef);
  for (int i = 0; i < power; ++i) value *= kPi;
  return value;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed,
                Problems& problems) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) problems.add(path + "." + it.key(), "unknown key");
  }
}

template <typename Fn>
void guarded(Problems& problems, const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    // parse_number already names the field
    const std::string msg = e.what();
    if (msg.rfind(path + ":", 0) == 0) {
      problems.add(path, msg.substr(path.size() + 2));
    } else {
      problems.add(path, msg);
    }
  } catch (const std::exception& e) {
    problems.add(path, e.what());
  }
}

seek3d::Vec3 parse_vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ConfigError("expected an array of 3 numbers");
  return {parse_number(v[0], path + "[0]"), parse_number(v[1], path + "[1]"),
          parse_number(v[2], path + "[2]")};
}

seek3d::Mat3 parse_mat3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ConfigError("expected a 3x3 array (rows)");
  seek3d::Mat3 m;
  for (int i = 0; i < 3; ++i) m.row(i) = parse_vec3(v[i], path + "[" + std::to_string(i) + "]");
  return m;
}

int parse_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<int>();
}

json vec_json(const seek3d::Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string_view representation_name(Representation r) {
  switch (r) {
    case Representation::full: return "full";
    case Representation::transformed: return "transformed";
    case Representation::rora: return "rora";
  }
  return "unknown";
}

Representation parse_representation(std::string_view name) {
  if (name == "full") return Representation::full;
  if (name == "transformed") return Representation::transformed;
  if (name == "rora") return Representation::rora;
  throw ConfigError("unknown representation '" + std::string(name) +
                    "' (expected full, transformed or rora)");
}

double parse_number_text(std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '*' || ch == '(' || ch == ')') continue;
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (s.empty()) throw std::invalid_argument("empty number");
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_term(s);
  const double den = parse_term(s.substr(slash + 1));
  if (den == 0.0) throw std::invalid_argument("division by zero");
  return parse_term(s.substr(0, slash)) / den;
}

double parse_number(const json& value, const std::string& path) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    try {
      return parse_number_text(value.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  throw ConfigError(path + ": expected a number or a string such as \"4pi\"");
}

void Scenario::validate() const {
  Problems problems;
  if (name.empty()) problems.add("name", "must not be empty");
  if (!(params.alpha > 0.0) || !std::isfinite(params.alpha)) problems.add("params.alpha", "must be > 0");
  if (!(params.omega > 0.0) || !std::isfinite(params.omega)) problems.add("params.omega", "must be > 0");
  if (!(params.mu > 0.0) || !std::isfinite(params.mu)) problems.add("params.mu", "must be > 0");
  if (!p0.allFinite()) problems.add("initial.p", "must be finite");
  if (!R0.allFinite() || geom3::orthonormality_error(R0) > 1e-6 || R0.determinant() <= 0.0) {
    problems.add("initial.R", "must be a rotation matrix (within 1e-6)");
  }
  if (z0 && !std::isfinite(*z0)) problems.add("initial.z", "must be finite");
  if (!std::isfinite(t0)) problems.add("t0", "must be finite");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) {
    problems.add("t_final", "must be > 0");
  } else if (!(t_final > t0)) {
    problems.add("t_final", "must be > t0");
  }
  if (integrator.steps_per_period < 16) problems.add("integrator.steps_per_period", "must be >= 16");
  if (integrator.sample_stride < 1) problems.add("integrator.sample_stride", "must be >= 1");
  if (representations.empty()) problems.add("representations", "must not be empty");
  if (std::set<Representation>(representations.begin(), representations.end()).size() !=
      representations.size()) {
    problems.add("representations", "duplicate entries");
  }
  if (field.kind == seek3d::FieldKind::orbit && !(field.orbit.radius >= 0.0)) {
    problems.add("field.radius", "must be >= 0");
  }
  if (field.kappa && !(*field.kappa >= 0.0)) problems.add("field.kappa", "must be >= 0");
  if (!(sweep.t_final > 0.0)) problems.add("sweep.t_final", "must be > 0");
  if (sweep.reference_steps < 1) problems.add("sweep.reference_steps", "must be >= 1");
  if (!problems.empty()) problems.raise();
}

double Scenario::initial_filter(const seek3d::SignalField& f) const {
  return z0 ? *z0 : f.c(p0, t0);
}

Scenario parse_scenario(const json& config) {
  Problems problems;
  Scenario s;
  if (!config.is_object()) throw ConfigError("configuration must be a JSON object");
  check_keys(config, "config",
             {"schema_version", "name", "params", "field", "initial", "t0", "t_final",
              "integrator", "representations", "output", "sweep"},
             problems);

  if (!config.contains("schema_version")) {
    problems.add("schema_version", "missing");
  } else if (!config["schema_version"].is_number_integer() ||
             config["schema_version"].get<int>() != kSchemaVersion) {
    problems.add("schema_version", "unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (config.contains("name")) {
    guarded(problems, "name", [&] { s.name = config["name"].get<std::string>(); });
  }

  if (config.contains("params")) {
    const json& p = config["params"];
    check_keys(p, "params", {"alpha", "omega", "mu"}, problems);
    if (p.contains("alpha")) guarded(problems, "params.alpha", [&] { s.params.alpha = parse_number(p["alpha"], "params.alpha"); });
    if (p.contains("omega")) guarded(problems, "params.omega", [&] { s.params.omega = parse_number(p["omega"], "params.omega"); });
    if (p.contains("mu")) guarded(problems, "params.mu", [&] { s.params.mu = parse_number(p["mu"], "params.mu"); });
  } else {
    problems.add("params", "missing");
  }

  if (config.contains("field")) {
    const json& f = config["field"];
    check_keys(f, "field", {"kind", "source", "radius", "planar_rate", "vertical_rate", "kappa"}, problems);
    guarded(problems, "field.kind", [&] {
      s.field.kind = seek3d::parse_field_kind(f.value("kind", std::string("static")));
    });
    if (f.contains("source")) guarded(problems, "field.source", [&] { s.field.source = parse_vec3(f["source"], "field.source"); });
    if (f.contains("radius")) guarded(problems, "field.radius", [&] { s.field.orbit.radius = parse_number(f["radius"], "field.radius"); });
    if (f.contains("planar_rate")) guarded(problems, "field.planar_rate", [&] { s.field.orbit.planar_rate = parse_number(f["planar_rate"], "field.planar_rate"); });
    if (f.contains("vertical_rate")) guarded(problems, "field.vertical_rate", [&] { s.field.orbit.vertical_rate = parse_number(f["vertical_rate"], "field.vertical_rate"); });
    if (f.contains("kappa")) guarded(problems, "field.kappa", [&] { s.field.kappa = parse_number(f["kappa"], "field.kappa"); });
  }

  if (config.contains("initial")) {
    const json& ini = config["initial"];
    check_keys(ini, "initial", {"p", "R", "z"}, problems);
    if (ini.contains("p")) {
      guarded(problems, "initial.p", [&] { s.p0 = parse_vec3(ini["p"], "initial.p"); });
    } else {
      problems.add("initial.p", "missing");
    }
    if (ini.contains("R")) guarded(problems, "initial.R", [&] { s.R0 = parse_mat3(ini["R"], "initial.R"); });
    if (ini.contains("z")) {
      guarded(problems, "initial.z", [&] {
        const json& z = ini["z"];
        if (z.is_string() && z.get<std::string>() == "slow-manifold") {
          s.z0.reset();
        } else {
          s.z0 = parse_number(z, "initial.z");
        }
      });
    }
  } else {
    problems.add("initial", "missing");
  }

  if (config.contains("t0")) guarded(problems, "t0", [&] { s.t0 = parse_number(config["t0"], "t0"); });
  if (config.contains("t_final")) {
    guarded(problems, "t_final", [&] { s.t_final = parse_number(config["t_final"], "t_final"); });
  } else {
    problems.add("t_final", "missing");
  }

  if (config.contains("integrator")) {
    const json& in = config["integrator"];
    check_keys(in, "integrator", {"steps_per_period", "method", "projection", "sample_stride"}, problems);
    if (in.contains("steps_per_period")) guarded(problems, "integrator.steps_per_period", [&] { s.integrator.steps_per_period = parse_int(in["steps_per_period"], "integrator.steps_per_period"); });
    if (in.contains("sample_stride")) guarded(problems, "integrator.sample_stride", [&] { s.integrator.sample_stride = parse_int(in["sample_stride"], "integrator.sample_stride"); });
    if (in.contains("projection")) guarded(problems, "integrator.projection", [&] { s.integrator.project = in["projection"].get<bool>(); });
    if (in.contains("method")) {
      guarded(problems, "integrator.method", [&] {
        const std::string m = in["method"].get<std::string>();
        if (m == "rk4") {
          s.integrator.method = odeint::Method::classic_rk4;
        } else if (m == "rk4-3/8") {
          s.integrator.method = odeint::Method::rk4_three_eighths;
        } else {
          throw ConfigError("unknown method '" + m + "' (expected rk4 or rk4-3/8)");
        }
      });
    }
  }

  if (config.contains("representations")) {
    guarded(problems, "representations", [&] {
      s.representations.clear();
      for (const auto& r : config["representations"]) {
        s.representations.push_back(parse_representation(r.get<std::string>()));
      }
    });
  }

  if (config.contains("output")) {
    const json& out = config["output"];
    check_keys(out, "output", {"directory", "rotation_columns"}, problems);
    if (out.contains("directory")) guarded(problems, "output.directory", [&] { s.output_dir = out["directory"].get<std::string>(); });
    if (out.contains("rotation_columns")) guarded(problems, "output.rotation_columns", [&] { s.rotation_columns = out["rotation_columns"].get<bool>(); });
  }

  if (config.contains("sweep")) {
    const json& sw = config["sweep"];
    check_keys(sw, "sweep", {"t_final", "mode", "reference_steps", "omegas"}, problems);
    if (sw.contains("t_final")) guarded(problems, "sweep.t_final", [&] { s.sweep.t_final = parse_number(sw["t_final"], "sweep.t_final"); });
    if (sw.contains("reference_steps")) guarded(problems, "sweep.reference_steps", [&] {
      const int steps = parse_int(sw["reference_steps"], "sweep.reference_steps");
      if (steps < 1) throw ConfigError("must be >= 1");
      s.sweep.reference_steps = static_cast<std::size_t>(steps);
    });
    if (sw.contains("mode")) guarded(problems, "sweep.mode", [&] {
      const std::string m = sw["mode"].get<std::string>();
      if (m == "reduced") {
        s.sweep.mode = SweepMode::reduced;
      } else if (m == "singular") {
        s.sweep.mode = SweepMode::singular;
      } else {
        throw ConfigError("unknown sweep mode '" + m + "' (expected reduced or singular)");
      }
    });
    if (sw.contains("omegas")) guarded(problems, "sweep.omegas", [&] {
      s.sweep.omegas.clear();
      for (std::size_t i = 0; i < sw["omegas"].size(); ++i) {
        s.sweep.omegas.push_back(parse_number(sw["omegas"][i], "sweep.omegas[" + std::to_string(i) + "]"));
      }
    });
  }

  if (!problems.empty()) problems.raise();
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open configuration file " + file.string());
  json config;
  try {
    in >> config;
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return parse_scenario(config);
}

json to_json(const Scenario& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = s.name;
  j["params"] = {{"alpha", s.params.alpha}, {"omega", s.params.omega}, {"mu", s.params.mu}};
  json field = {{"kind", std::string(seek3d::field_kind_name(s.field.kind))}};
  if (s.field.kind == seek3d::FieldKind::static_source) {
    field["source"] = vec_json(s.field.source);
  } else {
    field["radius"] = s.field.orbit.radius;
    field["planar_rate"] = s.field.orbit.planar_rate;
    field["vertical_rate"] = s.field.orbit.vertical_rate;
  }
  if (s.field.kappa) field["kappa"] = *s.field.kappa;
  j["field"] = field;
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(vec_json(s.R0.row(i).transpose()));
  j["initial"] = {{"p", vec_json(s.p0)}, {"R", rows}};
  if (s.z0) {
    j["initial"]["z"] = *s.z0;
  } else {
    j["initial"]["z"] = "slow-manifold";
  }
  j["t0"] = s.t0;
  j["t_final"] = s.t_final;
  j["integrator"] = {
      {"steps_per_period", s.integrator.steps_per_period},
      {"method", s.integrator.method == odeint::Method::classic_rk4 ? "rk4" : "rk4-3/8"},
      {"projection", s.integrator.project},
      {"sample_stride", s.integrator.sample_stride}};
  json reps = json::array();
  for (auto r : s.representations) reps.push_back(std::string(representation_name(r)));
  j["representations"] = reps;
  j["output"] = {{"rotation_columns", s.rotation_columns}};
  if (!s.output_dir.empty()) j["output"]["directory"] = s.output_dir.string();
  j["sweep"] = {{"t_final", s.sweep.t_final},
                {"mode", s.sweep.mode == SweepMode::reduced ? "reduced" : "singular"},
                {"reference_steps", s.sweep.reference_steps},
                {"omegas", s.sweep.omegas}};
  return j;
}

Scenario builtin_scenario(std::string_view name) {
  Scenario s;
  s.params = seek3d::SeekParams{0.125, 4.0 * kPi, 16.0 * kPi * kPi};
  s.p0 = seek3d::Vec3(-2.0, -2.0, 6.0);
  s.R0 = seek3d::Mat3::Identity();
  s.t_final = 200.0;
  s.integrator.steps_per_period = 64;
  s.integrator.sample_stride = 16;
  s.sweep.t_final = 20.0;
  s.sweep.omegas = {4.0 * kPi, 16.0 * kPi, 64.0 * kPi, 256.0 * kPi};
  if (name == "ex1") {
    s.name = "ex1";
    s.field.kind = seek3d::FieldKind::static_source;
  } else if (name == "ex2") {
    s.name = "ex2";
    s.field.kind = seek3d::FieldKind::orbit;
  } else {
    throw ConfigError("unknown built-in scenario '" + std::string(name) + "' (expected ex1 or ex2)");
  }
  return s;
}

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv("RECAVG_OUTPUT_ROOT"); root && *root) return root;
  return "recavg-out";
}

std::filesystem::path resolve_output_dir(const Scenario& scenario) {
  if (!scenario.output_dir.empty()) return scenario.output_dir;
  return default_output_root() / scenario.name;
}

}  // namespace recavg::runner
