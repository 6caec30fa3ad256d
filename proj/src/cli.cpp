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

#include "psde/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "psde/certificates.hpp"
#include "psde/generator.hpp"
#include "psde/lawlab.hpp"
#include "psde/parallel.hpp"

namespace psde {
namespace {

namespace fs = std::filesystem;

struct Context {
  RunConfig config;
  ModelSpec spec;
  StepConfig cfg;
  Vec x0;
  double s0 = 0.0;
  double horizon = 1.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  fs::path out_dir;
  std::ostream* out = nullptr;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw ConfigError("run.out", "cannot write '" + path.string() + "'");
  file << content;
  if (!file) throw ConfigError("run.out", "failed writing '" + path.string() + "'");
}

void emit(Context& ctx, const std::string& name, const std::string& content) {
  write_file(ctx.out_dir / name, content);
  *ctx.out << "wrote " << (ctx.out_dir / name).string() << '\n';
}

Vec vec_from(const std::vector<double>& values, int m, const std::string& key) {
  if (static_cast<int>(values.size()) != m) {
    throw ConfigError(key, "config key '" + key + "' needs " + std::to_string(m) + " entries for this model");
  }
  Vec v(m);
  for (int i = 0; i < m; ++i) v(i) = values[static_cast<std::size_t>(i)];
  return v;
}

Vec basis(int m, int i) {
  Vec e = Vec::Zero(m);
  e(i) = 1.0;
  return e;
}

double positive(const RunConfig& config, const std::string& key) {
  const double v = config.number(key);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "config key '" + key + "' must be positive");
  return v;
}

std::size_t positive_count(const RunConfig& config, const std::string& key) {
  const auto v = config.unsigned_integer(key);
  if (v == 0) throw ConfigError(key, "config key '" + key + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

BelOptions bel_options(const RunConfig& config) {
  BelOptions options;
  options.phi_bound = positive(config, "phi.bound");
  return options;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_simulate(Context& ctx) {
  const Ensemble ensemble =
      simulate_ensemble(ctx.spec, ctx.x0, ctx.s0, ctx.horizon, ctx.cfg, ctx.n_paths, ctx.seed);
  std::ostringstream csv;
  write_path_csv_header(csv, ctx.spec.m, true);
  std::size_t exits = 0;
  for (std::size_t i = 0; i < ensemble.paths.size(); ++i) {
    write_path_csv_rows(csv, ensemble.paths[i], i);
    if (ensemble.paths[i].exited) ++exits;
  }
  emit(ctx, "paths.csv", csv.str());
  std::ostringstream summary;
  summary << "paths = " << ensemble.paths.size() << "\nexits = " << exits
          << "\nblowups = " << ensemble.blown_up.size() << '\n';
  emit(ctx, "summary.txt", summary.str());
  if (!ensemble.blown_up.empty()) {
    const auto& first = ensemble.paths[ensemble.blown_up.front()];
    throw BlowUpError(first.blowup->time, first.blowup->state,
                      "path " + std::to_string(ensemble.blown_up.front()) + " blew up at t = " +
                          format_double(first.blowup->time) + ", x = " + format_vec(first.blowup->state) + " (" +
                          first.blowup->reason + ")");
  }
  return kExitOk;
}

int cmd_check_lyapunov(Context& ctx) {
  const auto cert = builtin_certificate(ctx.config.get("model.name"), ctx.config.model_params());
  AuditGrid grid;
  grid.radii = ctx.config.list("lyapunov.radii");
  grid.points_per_shell = positive_count(ctx.config, "lyapunov.points_per_shell");
  grid.time_samples = positive_count(ctx.config, "lyapunov.time_samples");
  grid.lv_bound = ctx.config.number("lyapunov.lv_bound");
  grid.h2_threshold = ctx.config.number("lyapunov.h2_threshold");
  grid.coercive_threshold = ctx.config.number("lyapunov.coercive_threshold");
  grid.min_tail = positive_count(ctx.config, "lyapunov.min_tail");
  grid.slack = ctx.config.number("lyapunov.slack");
  try {
    grid.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("lyapunov", e.what());
  }
  const GeneratorReport report = audit_lyapunov(ctx.spec, cert, grid);
  std::ostringstream csv, summary;
  write_generator_csv(csv, report);
  write_generator_summary(summary, report);
  emit(ctx, "generator.csv", csv.str());
  emit(ctx, "summary.txt", summary.str());
  *ctx.out << summary.str();
  return report.all_ok() ? kExitOk : kExitVerdictFailure;
}

int cmd_estimate_law(Context& ctx) {
  const EmpiricalMeasure mu =
      estimate_law(ctx.spec, ctx.x0, ctx.s0, ctx.s0 + ctx.horizon, ctx.n_paths, ctx.cfg, ctx.seed);
  std::ostringstream csv;
  write_measure_csv(csv, mu);
  emit(ctx, "measure.csv", csv.str());
  std::ostringstream summary;
  const Vec mean = mu.mean();
  const Mat cov = mu.covariance();
  summary << "samples = " << mu.size() << "\nmean =";
  for (Eigen::Index i = 0; i < mean.size(); ++i) summary << ' ' << format_double(mean(i));
  summary << "\ncovariance =";
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) summary << ' ' << format_double(cov(i, j));
  }
  summary << '\n';
  emit(ctx, "summary.txt", summary.str());
  *ctx.out << summary.str();
  return kExitOk;
}

LawDistanceOptions distance_options(const RunConfig& config) {
  LawDistanceOptions options;
  options.n_projections = positive_count(config, "law.projections");
  options.bootstrap = positive_count(config, "law.bootstrap");
  options.energy_max_points = positive_count(config, "law.energy_max_points");
  return options;
}

int cmd_periodicity(Context& ctx) {
  PeriodicityOptions options;
  try {
    options.metric = parse_law_metric(ctx.config.get("law.metric"));
  } catch (const InvalidArgument& e) {
    throw ConfigError("law.metric", e.what());
  }
  options.distance = distance_options(ctx.config);
  options.band_sigmas = positive(ctx.config, "periodicity.band_sigmas");
  const std::size_t k_max = positive_count(ctx.config, "periodicity.k_max");
  const LawPeriodicityReport report =
      periodicity_test(ctx.spec, ctx.x0, ctx.s0, k_max, ctx.n_paths, ctx.cfg, ctx.seed, options);
  std::ostringstream csv;
  write_periodicity_csv(csv, report);
  emit(ctx, "periodicity.csv", csv.str());
  std::ostringstream summary;
  summary << "metric = " << to_string(options.metric) << "\nfirst_in_band = " << report.first_in_band
          << "\nsettled_from = " << report.settled_from << "\nlongest_run = " << report.longest_run
          << "\nblowups = " << report.blowups << '\n';
  emit(ctx, "summary.txt", summary.str());
  *ctx.out << summary.str();
  return report.settled_from < k_max ? kExitOk : kExitVerdictFailure;
}

int cmd_cesaro(Context& ctx) {
  const BoundedFn phi = phi_from_config(ctx.config, ctx.spec.m);
  const double bound = positive(ctx.config, "phi.bound");
  const BoundedFn clipped = [phi, bound](const Vec& x) { return std::clamp(phi(x), -bound, bound); };
  const std::size_t n = positive_count(ctx.config, "cesaro.n");
  const CesaroReport report = cesaro_average(ctx.spec, clipped, ctx.s0, ctx.x0, n, ctx.n_paths, ctx.cfg, ctx.seed);
  std::ostringstream csv;
  write_cesaro_csv(csv, report);
  emit(ctx, "cesaro.csv", csv.str());
  std::ostringstream summary;
  summary << "average = " << format_double(report.average.back())
          << "\nstderr = " << format_double(report.std_error.back()) << "\nblowups = " << report.blowups << '\n';
  emit(ctx, "summary.txt", summary.str());
  *ctx.out << summary.str();
  return kExitOk;
}

int cmd_irreducibility(Context& ctx) {
  const auto target = ctx.config.optional_list("irreducibility.target");
  const Vec y = target ? vec_from(*target, ctx.spec.m, "irreducibility.target") : Vec::Zero(ctx.spec.m);
  const double a = positive(ctx.config, "irreducibility.radius");
  const IrreducibilityReport report =
      irreducibility_probe(ctx.spec, ctx.x0, ctx.s0, y, a, ctx.horizon, ctx.n_paths, ctx.cfg, ctx.seed);
  std::ostringstream csv;
  csv << "hits,n_paths,blowups,estimate,ci_low,ci_high,verdict\n"
      << report.hits << ',' << report.n_paths << ',' << report.blowups << ',' << format_double(report.estimate)
      << ',' << format_double(report.ci_low) << ',' << format_double(report.ci_high) << ',' << report.verdict()
      << '\n';
  emit(ctx, "irreducibility.csv", csv.str());
  *ctx.out << "verdict = " << report.verdict() << '\n';
  return report.evidence ? kExitOk : kExitVerdictFailure;
}

int cmd_bel_grad(Context& ctx) {
  const auto dir = ctx.config.optional_list("bel.direction");
  const Vec h = dir ? vec_from(*dir, ctx.spec.m, "bel.direction") : basis(ctx.spec.m, 0);
  const BoundedFn phi = phi_from_config(ctx.config, ctx.spec.m);
  const BelEstimate est = bel_gradient(ctx.spec, phi, ctx.x0, h, ctx.s0, ctx.s0 + ctx.horizon, ctx.n_paths, ctx.cfg,
                                       ctx.seed, bel_options(ctx.config));
  std::ostringstream csv;
  csv << "t,estimate,stderr,weight_mean,weight_stderr,n_paths\n"
      << format_double(ctx.s0 + ctx.horizon) << ',' << format_double(est.estimate) << ','
      << format_double(est.std_error) << ',' << format_double(est.weight_mean) << ','
      << format_double(est.weight_std_error) << ',' << est.n_paths << '\n';
  emit(ctx, "bel.csv", csv.str());
  *ctx.out << "estimate = " << format_double(est.estimate) << "\nstderr = " << format_double(est.std_error)
           << '\n';
  return kExitOk;
}

int cmd_feller_probe(Context& ctx) {
  const auto y_list = ctx.config.optional_list("feller.y");
  const Vec y = y_list ? vec_from(*y_list, ctx.spec.m, "feller.y") : Vec(ctx.x0 + basis(ctx.spec.m, 0));
  std::vector<double> ladder;
  for (double rung : ctx.config.list("feller.ladder")) ladder.push_back(ctx.s0 + rung);
  const BoundedFn phi = phi_from_config(ctx.config, ctx.spec.m);
  const FellerProbeReport report =
      feller_probe(ctx.spec, phi, ctx.x0, y, ctx.s0, ladder, ctx.n_paths, ctx.cfg, ctx.seed, bel_options(ctx.config));
  std::ostringstream csv;
  write_feller_csv(csv, report, ctx.s0);
  emit(ctx, "feller.csv", csv.str());
  std::ostringstream summary;
  summary << "m_envelope = " << format_double(report.m_envelope)
          << "\nm_least_squares = " << format_double(report.m_least_squares)
          << "\nm_upper = " << format_double(report.m_upper)
          << "\nenvelope_dominates = " << (report.envelope_dominates ? "true" : "false")
          << "\nshape_ok = " << (report.shape_ok ? "true" : "false") << '\n';
  emit(ctx, "summary.txt", summary.str());
  *ctx.out << summary.str();
  return report.envelope_dominates && report.shape_ok ? kExitOk : kExitVerdictFailure;
}

int cmd_picard(Context& ctx) {
  const auto iterations = positive_count(ctx.config, "picard.iterations");
  const PicardReport report =
      picard_validate(ctx.spec, ctx.x0, ctx.horizon, static_cast<int>(iterations), ctx.cfg, RngStream(ctx.seed, 0));
  std::ostringstream csv;
  csv << "i,distance,ratio\n";
  for (std::size_t i = 0; i < report.distances.size(); ++i) {
    csv << i + 1 << ',' << format_double(report.distances[i]) << ','
        << (i == 0 ? std::string() : format_double(report.ratios[i - 1])) << '\n';
  }
  emit(ctx, "picard.csv", csv.str());
  *ctx.out << "max_ratio_from_second = " << format_double(report.max_ratio_from_second())
           << "\ndiverged = " << (report.diverged ? "true" : "false") << '\n';
  return report.diverged ? kExitVerdictFailure : kExitOk;
}

int cmd_dynkin(Context& ctx) {
  const std::string fn = ctx.config.get("dynkin.function");
  TestFunction v;
  if (fn == "squared_norm") {
    v = TestFunction::squared_norm(1.0);
  } else if (fn == "certificate") {
    v = builtin_certificate(ctx.config.get("model.name"), ctx.config.model_params()).v;
  } else {
    throw ConfigError("dynkin.function", "dynkin.function must be squared_norm or certificate, got '" + fn + "'");
  }
  const double h = positive(ctx.config, "dynkin.h");
  const DynkinResult r = dynkin_check(ctx.spec, v, ctx.s0, ctx.x0, h, ctx.n_paths, ctx.cfg, ctx.seed);
  std::ostringstream csv;
  csv << "lhs,lhs_stderr,rhs,rhs_error,z_score,n_paths,blowups\n"
      << format_double(r.lhs) << ',' << format_double(r.lhs_stderr) << ',' << format_double(r.rhs) << ','
      << format_double(r.rhs_error) << ',' << format_double(r.z_score) << ',' << r.n_paths << ',' << r.blowups
      << '\n';
  emit(ctx, "dynkin.csv", csv.str());
  *ctx.out << "z_score = " << format_double(r.z_score) << '\n';
  return r.z_score <= 3.0 ? kExitOk : kExitVerdictFailure;
}

using CommandFn = int (*)(Context&);

CommandFn find_command(const std::string& name) {
  static const std::vector<std::pair<std::string, CommandFn>> table = {
      {"simulate", cmd_simulate},         {"check-lyapunov", cmd_check_lyapunov},
      {"estimate-law", cmd_estimate_law}, {"periodicity", cmd_periodicity},
      {"cesaro", cmd_cesaro},             {"irreducibility", cmd_irreducibility},
      {"bel-grad", cmd_bel_grad},         {"feller-probe", cmd_feller_probe},
      {"picard", cmd_picard},             {"dynkin", cmd_dynkin},
  };
  for (const auto& [key, fn] : table) {
    if (key == name) return fn;
  }
  return nullptr;
}

std::string config_reference() {
  std::ostringstream out;
  out << "Config keys (section.key = value; --set overrides; model.params.* per model):\n";
  for (const auto& k : config_schema()) {
    out << "  " << k.key << " = " << k.default_value << "    " << k.help << '\n';
  }
  return out.str();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate", "check-lyapunov", "estimate-law", "periodicity",
                                                 "cesaro",   "irreducibility", "bel-grad",     "feller-probe",
                                                 "picard",   "dynkin"};
  return names;
}

BoundedFn phi_from_config(const RunConfig& config, int m) {
  const std::string kind = config.get("phi.kind");
  if (kind == "coordinate") {
    const auto index = config.unsigned_integer("phi.index");
    if (index < 1 || index > static_cast<std::uint64_t>(m)) {
      throw ConfigError("phi.index", "phi.index must lie in 1.." + std::to_string(m));
    }
    const auto i = static_cast<Eigen::Index>(index - 1);
    return [i](const Vec& x) { return x(i); };
  }
  if (kind == "tanh") {
    const auto w_list = config.optional_list("phi.weights");
    const Vec w = w_list ? vec_from(*w_list, m, "phi.weights") : basis(m, 0);
    return [w](const Vec& x) { return std::tanh(w.dot(x)); };
  }
  if (kind == "square") return [](const Vec& x) { return x.squaredNorm(); };
  throw ConfigError("phi.kind", "phi.kind must be coordinate, tanh or square, got '" + kind + "'");
}

int run_command(const std::string& command, RunConfig config, std::ostream& out, std::ostream& err) {
  try {
    const CommandFn fn = find_command(command);
    if (!fn) {
      err << "error: unknown command '" << command << "'\n";
      return kExitUsage;
    }
    config.set("run.command", command);
    config.set("run.version", kArtifactVersion);
    Context ctx;
    ctx.out = &out;
    const auto threads = config.unsigned_integer("run.threads");
    set_thread_count(static_cast<unsigned>(threads));
    ctx.spec = model_from_config(config);
    ctx.cfg = step_from_config(config);
    ctx.x0 = initial_state(config, ctx.spec.m);
    ctx.s0 = config.number("sim.s0");
    if (!(ctx.s0 >= 0.0) || !std::isfinite(ctx.s0)) throw ConfigError("sim.s0", "sim.s0 must be finite and >= 0");
    ctx.horizon = positive(config, "sim.horizon");
    ctx.n_paths = positive_count(config, "sim.n_paths");
    ctx.seed = config.unsigned_integer("run.seed");
    ctx.out_dir = config.get("run.out");
    ctx.config = config;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError("run.out", "cannot create output directory '" + ctx.out_dir.string() + "'");
    write_file(ctx.out_dir / kManifestName, "# " + std::string(kArtifactVersion) +
                                                " run manifest; replay with: psde replay --config " +
                                                (ctx.out_dir / kManifestName).string() + "\n" + config.serialize());
    return fn(ctx);
  } catch (const ConfigError& e) {
    err << "config error [" << e.key << "]: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for periodic jump diffusions.", "psde"};
  app.footer(config_reference());
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;

  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (section.key = value lines)");
    sub->add_option("--seed", seed, "master seed (run.seed)");
    sub->add_option("--out", out_dir, "output directory (run.out)");
    sub->add_option("--threads", threads, "worker cap, 0 = available cores (run.threads)");
    sub->add_option("--set", overrides, "override a config key, key=value (repeatable)");
    sub->footer(config_reference());
  };
  const std::vector<std::pair<std::string, std::string>> descriptions = {
      {"simulate", "simulate an ensemble of paths (paths.csv)"},
      {"check-lyapunov", "audit the builtin Lyapunov certificate on shells (generator.csv)"},
      {"estimate-law", "terminal law of an ensemble (measure.csv)"},
      {"periodicity", "period-shift law distances against the null band (periodicity.csv)"},
      {"cesaro", "Cesaro averages over periods (cesaro.csv)"},
      {"irreducibility", "ball hitting probability with Wilson interval (irreducibility.csv)"},
      {"bel-grad", "Bismut-Elworthy-Li gradient estimate (bel.csv)"},
      {"feller-probe", "Lipschitz ratios on a time ladder (feller.csv)"},
      {"picard", "Picard iterate distances (picard.csv)"},
      {"dynkin", "Monte Carlo Dynkin check of the generator (dynkin.csv)"},
      {"replay", "rerun the command recorded in a run manifest"},
  };
  for (const auto& [name, text] : descriptions) add_flags(app.add_subcommand(name, text));

  std::vector<std::string> argv_storage{"psde"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunConfig config;
  try {
    if (!config_path.empty()) config = RunConfig::load(config_path);
    for (const auto& o : overrides) config.apply_override(o);
    if (seed) config.set("run.seed", std::to_string(*seed));
    if (!out_dir.empty()) config.set("run.out", out_dir);
    if (threads) config.set("run.threads", std::to_string(*threads));
  } catch (const ConfigError& e) {
    err << "config error [" << e.key << "]: " << e.what() << '\n';
    return kExitUsage;
  }
  if (command == "replay") {
    if (config_path.empty()) {
      err << "usage error: replay needs --config MANIFEST\n";
      return kExitUsage;
    }
    const std::string recorded = config.get("run.command");
    return run_command(recorded, config, out, err);
  }
  return run_command(command, config, out, err);
}

}  // namespace psde
