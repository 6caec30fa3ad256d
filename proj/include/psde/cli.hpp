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

#include <iosfwd>
#include <string>
#include <vector>

#include "psde/belgrad.hpp"
#include "psde/config.hpp"

namespace psde {

inline constexpr const char* kArtifactVersion = "psde 0.1.0";
/// File written next to the outputs; it is itself a valid config.
inline constexpr const char* kManifestName = "run_manifest";

enum ExitStatus : int {
  kExitOk = 0,
  kExitVerdictFailure = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
};

/// simulate, check-lyapunov, estimate-law, periodicity, cesaro,
/// irreducibility, bel-grad, feller-probe, picard, dynkin.
const std::vector<std::string>& command_names();

/// phi.kind = coordinate (x_index), tanh (tanh <w, x>) or square (|x|^2).
BoundedFn phi_from_config(const RunConfig& config, int m);

/// Runs one command on a fully resolved config: writes the manifest and the
/// command's CSV files into run.out and returns an ExitStatus. Errors are
/// reported on err and mapped to exit statuses.
int run_command(const std::string& command, RunConfig config, std::ostream& out, std::ostream& err);

/// Command-line entry point; args excludes the program name.
///
///   psde COMMAND [--config PATH] [--seed N] [--out DIR] [--threads N] [--set key=value]...
///   psde replay --config MANIFEST
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psde
