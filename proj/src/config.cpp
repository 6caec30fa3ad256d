// Copyright 2026 The psde Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "psde/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

namespace psde {
namespace {

const std::string kParamsPrefix = "model.params.";

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_schema_key(const std::string& key) {
  const auto& schema = config_schema();
  return std::any_of(schema.begin(), schema.end(), [&](const ConfigKey& k) { return k.key == key; });
}

bool is_known_key(const std::string& key) {
  if (key.rfind(kParamsPrefix, 0) == 0) return key.size() > kParamsPrefix.size();
  return is_schema_key(key);
}

double parse_double(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw ConfigError(key, "config key '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

bool is_none(const std::string& v) {
  const std::string t = trim(v);
  return t.empty() || t == "none";
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"run.command", "none", "command recorded by the run manifest (used by replay)"},
      {"run.version", "none", "artifact version recorded by the run manifest"},
      {"run.seed", "1", "master seed; path i uses stream (seed, i)"},
      {"run.threads", "0", "worker cap, 0 = available cores"},
      {"run.out", "out", "output directory"},
      {"model.name", "periodic_ou", "periodic_ou, dissipative, lorenz, lemniscate, frozen or custom"},
      {"levy.kind", "none", "small-jump part: none or stable"},
      {"levy.dim", "1", "mark dimension l"},
      {"levy.alpha", "1", "stable index of the small part, in (0, 2)"},
      {"levy.c", "1", "density scale c of c |u|^(-l-alpha)"},
      {"levy.delta", "0.01", "small-jump truncation radius"},
      {"levy.large_rate", "0", "large-jump intensity nu(|u| >= 1)"},
      {"levy.large_dist", "atom", "large marks: atom (single mark) or pareto (radial tail)"},
      {"levy.large_mark", "1", "mark of the atom, one entry per mark dimension"},
      {"levy.large_exponent", "2", "radial density r^(-1-exponent) on r >= 1 for pareto"},
      {"sim.s0", "0", "start time"},
      {"sim.x0", "none", "start state, comma separated (none = origin)"},
      {"sim.horizon", "1", "time span T (multiple of sim.dt)"},
      {"sim.dt", "0.001", "Euler step"},
      {"sim.n_paths", "1000", "ensemble size"},
      {"sim.truncation_radius", "none", "record the first exit from the ball of this radius"},
      {"sim.compensator", "quadrature", "quadrature or per_event"},
      {"sim.event_budget", "100000", "maximum small-jump events per step"},
      {"sim.record_every", "1", "keep every n-th grid row"},
      {"sim.record_events", "true", "keep the applied jump log"},
      {"sim.blowup_bound", "1e12", "state norm treated as a blow-up"},
      {"phi.kind", "coordinate", "test function: coordinate, tanh or square"},
      {"phi.index", "1", "coordinate used by phi (1-based)"},
      {"phi.weights", "none", "weights w of tanh(<w, x>) (none = first coordinate)"},
      {"phi.bound", "10", "clip bound of phi"},
      {"lyapunov.radii", "1,2,4,8,16,32,64,128", "audit shell radii"},
      {"lyapunov.points_per_shell", "64", "points per shell"},
      {"lyapunov.time_samples", "8", "time samples per period"},
      {"lyapunov.lv_bound", "inf", "h1 needs sup LV <= this"},
      {"lyapunov.h2_threshold", "-10", "h2 needs the last shell max LV below this"},
      {"lyapunov.coercive_threshold", "10", "coercivity needs the last shell min V above this"},
      {"lyapunov.min_tail", "3", "radii in the monotone tail"},
      {"lyapunov.slack", "1e-9", "relative slack of the pointwise inequalities"},
      {"law.metric", "sliced_wasserstein1", "sliced_wasserstein1 or energy"},
      {"law.projections", "64", "projection directions of sliced W1"},
      {"law.bootstrap", "200", "bootstrap replicates for standard errors"},
      {"law.energy_max_points", "1000", "subsample cap of the energy distance"},
      {"periodicity.k_max", "10", "number of period shifts"},
      {"periodicity.band_sigmas", "3", "null band width in combined standard errors"},
      {"cesaro.n", "50", "number of periods"},
      {"irreducibility.target", "none", "target point y (none = origin)"},
      {"irreducibility.radius", "0.5", "ball radius a"},
      {"bel.direction", "none", "direction h (none = first basis vector)"},
      {"feller.y", "none", "second start point (none = x0 + first basis vector)"},
      {"feller.ladder", "0.05,0.1,0.2,0.5,1", "times after s0"},
      {"picard.iterations", "8", "number of Picard iterates"},
      {"dynkin.h", "0.001", "Dynkin time step h (multiple of sim.dt)"},
      {"dynkin.function", "squared_norm", "squared_norm (|x|^2 + 1) or certificate (the builtin V)"},
  };
  return schema;
}

RunConfig::RunConfig() {
  for (const auto& k : config_schema()) values_[k.key] = k.default_value;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      throw ConfigError(line, where + ": expected 'section.key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!is_known_key(key)) throw ConfigError(key, where + ": unknown config key '" + key + "'");
    config.values_[key] = value;
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open config file '" + path + "'");
  return parse(in, path);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigError(key, "unknown config key '" + key + "'");
  values_[key] = trim(value);
}

void RunConfig::set_number(const std::string& key, double value) { set(key, format_double(value)); }

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(assignment, "--set expects key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "config key '" + key + "' is not set");
  return it->second;
}

double RunConfig::number(const std::string& key) const { return parse_double(get(key), key); }

std::uint64_t RunConfig::unsigned_integer(const std::string& key) const {
  const std::string t = trim(get(key));
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (t.empty() || t[0] == '-' || end != t.c_str() + t.size() || errno == ERANGE) {
    throw ConfigError(key, "config key '" + key + "' expects a non-negative integer, got '" + t + "'");
  }
  return v;
}

std::vector<double> RunConfig::list(const std::string& key) const {
  std::string text = get(key);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_double(token, key));
  if (out.empty()) throw ConfigError(key, "config key '" + key + "' expects a list of numbers");
  return out;
}

std::optional<double> RunConfig::optional_number(const std::string& key) const {
  if (is_none(get(key))) return std::nullopt;
  return number(key);
}

std::optional<std::vector<double>> RunConfig::optional_list(const std::string& key) const {
  if (is_none(get(key))) return std::nullopt;
  return list(key);
}

Params RunConfig::model_params() const {
  Params params;
  for (const auto& [key, value] : values_) {
    if (key.rfind(kParamsPrefix, 0) == 0) params.set(key.substr(kParamsPrefix.size()), value);
  }
  return params;
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
  return out.str();
}

LevyMeasureSpec levy_from_config(const RunConfig& config) {
  const auto dim_raw = config.unsigned_integer("levy.dim");
  if (dim_raw < 1 || dim_raw > static_cast<std::uint64_t>(kMaxDim)) {
    throw ConfigError("levy.dim", "levy.dim must be between 1 and " + std::to_string(kMaxDim));
  }
  const int dim = static_cast<int>(dim_raw);
  LevyMeasureSpec levy = LevyMeasureSpec::none(dim);
  const std::string kind = config.get("levy.kind");
  if (kind == "stable") {
    const double alpha = config.number("levy.alpha");
    if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("levy.alpha", "levy.alpha must lie in (0, 2)");
    const double c = config.number("levy.c");
    if (!(c > 0.0)) throw ConfigError("levy.c", "levy.c must be positive");
    const double delta = config.number("levy.delta");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("levy.delta", "levy.delta must lie in (0, 1)");
    levy = LevyMeasureSpec::stable_like(dim, alpha, c, delta);
  } else if (kind != "none") {
    throw ConfigError("levy.kind", "levy.kind must be none or stable, got '" + kind + "'");
  }
  const double rate = config.number("levy.large_rate");
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw ConfigError("levy.large_rate", "levy.large_rate must be finite and non-negative");
  }
  if (rate > 0.0) {
    const std::string dist = config.get("levy.large_dist");
    if (dist == "atom") {
      const auto mark = config.list("levy.large_mark");
      if (static_cast<int>(mark.size()) != dim) {
        throw ConfigError("levy.large_mark", "levy.large_mark needs levy.dim = " + std::to_string(dim) + " entries");
      }
      Vec u(dim);
      for (int i = 0; i < dim; ++i) u(i) = mark[static_cast<std::size_t>(i)];
      if (u.norm() < 1.0) throw ConfigError("levy.large_mark", "levy.large_mark must satisfy |u| >= 1");
      levy.large = AtomicPart{{u}, {rate}};
    } else if (dist == "pareto") {
      const double exponent = config.number("levy.large_exponent");
      if (!(exponent > 0.0)) throw ConfigError("levy.large_exponent", "levy.large_exponent must be positive");
      levy.large = RadialPart::with_mass(rate, exponent, 1.0, std::numeric_limits<double>::infinity());
    } else {
      throw ConfigError("levy.large_dist", "levy.large_dist must be atom or pareto, got '" + dist + "'");
    }
  }
  try {
    levy.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("levy.kind", std::string("invalid Levy measure: ") + e.what());
  }
  return levy;
}

ModelSpec model_from_config(const RunConfig& config) {
  const std::string name = config.get("model.name");
  const auto names = builtin_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("model.name", "config key 'model.name': unknown model '" + name + "'");
  }
  LevyMeasureSpec levy = levy_from_config(config);
  const Params params = config.model_params();
  try {
    params.require_known(builtin_param_names(name), name);
    return builtin(name, params, std::move(levy));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("model.params", e.what());
  }
}

StepConfig step_from_config(const RunConfig& config) {
  StepConfig cfg;
  cfg.dt = config.number("sim.dt");
  const std::string mode = config.get("sim.compensator");
  if (mode == "quadrature") {
    cfg.compensator_mode = CompensatorMode::quadrature;
  } else if (mode == "per_event") {
    cfg.compensator_mode = CompensatorMode::per_event;
  } else {
    throw ConfigError("sim.compensator", "sim.compensator must be quadrature or per_event, got '" + mode + "'");
  }
  cfg.truncation_radius = config.optional_number("sim.truncation_radius");
  cfg.event_budget = static_cast<std::size_t>(config.unsigned_integer("sim.event_budget"));
  cfg.record_every = static_cast<std::size_t>(config.unsigned_integer("sim.record_every"));
  const std::string rec = config.get("sim.record_events");
  if (rec != "true" && rec != "false") {
    throw ConfigError("sim.record_events", "sim.record_events must be true or false");
  }
  cfg.record_events = rec == "true";
  cfg.blowup_bound = config.number("sim.blowup_bound");
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("sim", e.what());
  }
  return cfg;
}

Vec initial_state(const RunConfig& config, int m) {
  const auto x0 = config.optional_list("sim.x0");
  if (!x0) return Vec::Zero(m);
  if (static_cast<int>(x0->size()) != m) {
    throw ConfigError("sim.x0", "sim.x0 needs " + std::to_string(m) + " entries for this model");
  }
  Vec x(m);
  for (int i = 0; i < m; ++i) x(i) = (*x0)[static_cast<std::size_t>(i)];
  return x;
}

}  // namespace psde
