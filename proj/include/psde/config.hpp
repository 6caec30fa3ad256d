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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psde/levy.hpp"
#include "psde/model.hpp"
#include "psde/simulate.hpp"

namespace psde {

/// Config problem; always names the offending key (and line, when parsed
/// from text). Maps to CLI exit status 2.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string key, const std::string& what) : InvalidArgument(what), key(std::move(key)) {}
  std::string key;
};

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Every accepted key with its default. Keys under model.params. are free
/// form and checked against the selected builtin instead.
const std::vector<ConfigKey>& config_schema();

/// Resolved run configuration: every schema key has a value.
///
/// Text format, one assignment per line:
///
///   # comment
///   section.key = value
///
/// Values are kept verbatim, so parse(serialize()) reproduces the config
/// exactly. Lists are comma separated; "none" marks an absent optional.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::istream& in, const std::string& source = "<config>");
  static RunConfig load(const std::string& path);

  /// Throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  void set_number(const std::string& key, double value);
  /// "key=value" as given to --set.
  void apply_override(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  /// "none" (or empty) gives nullopt.
  std::optional<double> optional_number(const std::string& key) const;
  std::optional<std::vector<double>> optional_list(const std::string& key) const;

  Params model_params() const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// All keys in sorted order, "key = value" per line.
  std::string serialize() const;

  bool operator==(const RunConfig& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// levy.kind (none, stable), levy.dim, levy.alpha, levy.c, levy.delta,
/// levy.large_rate, levy.large_dist (atom, pareto), levy.large_mark,
/// levy.large_exponent.
LevyMeasureSpec levy_from_config(const RunConfig& config);
ModelSpec model_from_config(const RunConfig& config);
StepConfig step_from_config(const RunConfig& config);
/// sim.x0, or zeros of the model dimension when it is "none".
Vec initial_state(const RunConfig& config, int m);

}  // namespace psde
