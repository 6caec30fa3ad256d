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

// Acceptance suite: one PASS/FAIL line per criterion, followed by indented
// detail lines. Exit status 0 iff every criterion passes.

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "psde/belgrad.hpp"
#include "psde/certificates.hpp"
#include "psde/cli.hpp"
#include "psde/generator.hpp"
#include "psde/lawlab.hpp"
#include "psde/model.hpp"
#include "psde/parallel.hpp"
#include "psde/simulate.hpp"

namespace psde {
namespace {

namespace fs = std::filesystem;

constexpr double kTwoPi = 2 * std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
  void note(const std::string& line) { details.push_back(line); }
};

std::string num(double v) { return format_double(v); }

Params params(std::map<std::string, std::string> raw) { return Params(std::move(raw)); }

StepConfig step(double dt, bool record_events = false) {
  StepConfig cfg;
  cfg.dt = dt;
  cfg.record_events = record_events;
  return cfg;
}

double periodic_mean(double a, double c, double w, double t) {
  return c * (a * std::cos(w * t) + w * std::sin(w * t)) / (a * a + w * w);
}

// --- 1. Generator correctness --------------------------------------------

Outcome generator_correctness() {
  Outcome o;
  const ModelSpec spec = builtin("dissipative", params({{"dim", "2"}}));
  const TestFunction v = TestFunction::squared_norm(1.0);
  RngStream rng(2026, 0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vec x = make_vec({20 * rng.uniform() - 10, 20 * rng.uniform() - 10});
    const double t = rng.uniform();
    worst = std::max(worst, std::abs(apply_generator(spec, v, t, x).value - (-2 * x.squaredNorm() + 2)));
  }
  const DynkinResult d = dynkin_check(spec, v, 0.0, make_vec({1, 2}), 1e-3, 100000, step(1e-4), 11);
  o.pass = worst <= 1e-8 && d.z_score <= 3.0;
  o.note("max |LV - (-2|x|^2 + 2)| over 20 points = " + num(worst) + " (tolerance 1e-8)");
  o.note("dynkin at x = (1, 2), h = 1e-3, 1e5 paths: lhs = " + num(d.lhs) + " +- " + num(d.lhs_stderr) +
         ", rhs = " + num(d.rhs) + ", z = " + num(d.z_score) + " (need <= 3)");
  return o;
}

// --- 2. Certificate audits ------------------------------------------------

std::string flags(const GeneratorReport& r) {
  std::ostringstream s;
  s << "h1 " << r.h1_ok << ", h2 " << r.h2_ok << ", coercive " << r.coercive_ok << ", domination "
    << r.domination_ok;
  return s.str();
}

Outcome certificate_audits() {
  Outcome o;
  const GeneratorReport diss =
      audit_lyapunov(builtin("dissipative", params({{"dim", "2"}})), dissipative_certificate(), AuditGrid{});
  o.note("dissipative: " + flags(diss));

  const Params lorenz_params = params({{"eps", "1"}, {"perturbation", "0.5"}});
  const GeneratorReport lor =
      audit_lyapunov(builtin("lorenz", lorenz_params), builtin_certificate("lorenz", lorenz_params), AuditGrid{});
  o.note("lorenz (alpha 10, beta 8/3, mu 28, eps 1, perturbation 0.5): " + flags(lor));

  const ModelSpec lem = builtin("lemniscate", Params());
  const GeneratorReport lit = audit_lyapunov(lem, lemniscate_certificate(64.0), AuditGrid{});
  o.note("lemniscate, q = 2^6: " + flags(lit) + ", worst domination excess " + num(lit.worst_domination_excess));
  const GeneratorReport fix = audit_lyapunov(lem, lemniscate_certificate(76.0), AuditGrid{});
  o.note("diagnostic only, lemniscate with q = 76: " + flags(fix));

  // Noise-free Lorenz with constant coefficients against the expanded LV.
  const Params quiet = params({{"eps", "0"}});
  const ModelSpec spec = builtin("lorenz", quiet);
  const LyapunovCertificateSpec cert = builtin_certificate("lorenz", quiet);
  const double a = 10, b = 8.0 / 3.0, m = 28;
  RngStream rng(42, 0);
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    const double t = rng.uniform();
    const Vec x = make_vec({30 * rng.uniform() - 15, 30 * rng.uniform() - 15, 60 * rng.uniform() - 10});
    const double expected = -2 * a * x(0) * x(0) - 2 * x(1) * x(1) - 2 * b * (x(2) * x(2) - (a + m) * x(2));
    worst = std::max(worst, std::abs(apply_generator(spec, cert.v, t, x).value - expected));
  }
  o.note("lorenz noise-free LV spot values: max error " + num(worst) + " (tolerance 1e-8)");
  o.pass = diss.all_ok() && lor.all_ok() && lit.all_ok() && worst <= 1e-8;
  return o;
}

// --- 3. Interlacing oracle ------------------------------------------------

Outcome interlacing() {
  Outcome o;
  const double rate = 2.0, horizon = 5.0, mark = 1.5;
  LevyMeasureSpec levy = LevyMeasureSpec::none(1);
  levy.large = AtomicPart{{make_vec({mark})}, {rate}};
  const ModelSpec spec = builtin("frozen", params({{"large_scale", "1"}}), levy);
  const std::size_t n = 100000;
  std::vector<double> disp(n);
  std::vector<std::size_t> count(n);
  parallel_for(n, [&](std::size_t i) {
    const SamplePath p = simulate_path(spec, make_vec({0.0}), 0.0, horizon, step(0.5, true), RngStream(3, i));
    disp[i] = p.terminal()(0);
    std::size_t c = 0;
    for (const auto& e : p.events) c += e.event.kind == JumpKind::large;
    count[i] = c;
  });
  double mean = 0.0;
  for (double d : disp) mean += d / n;
  const double target = rate * horizon * mark;
  const bool mean_ok = std::abs(mean - target) <= 0.01 * target;

  // Chi-square against Poisson(10) with the tails pooled below 4 and above 19.
  const double lambda = rate * horizon;
  const std::size_t lo = 3, hi = 20;
  std::vector<double> observed(hi - lo + 1, 0.0), expected(hi - lo + 1, 0.0);
  for (std::size_t c : count) observed[std::clamp(c, lo, hi) - lo] += 1;
  double cdf = 0.0;
  for (std::size_t k = 0; k < hi; ++k) {
    const double pk = std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
    expected[std::max(k, lo) - lo] += n * pk;
    cdf += pk;
  }
  expected.back() += n * (1 - cdf);
  double chi2 = 0.0;
  for (std::size_t b = 0; b < observed.size(); ++b) {
    chi2 += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
  }
  const boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  const double critical = boost::math::quantile(boost::math::complement(dist, 0.01));
  o.pass = mean_ok && chi2 <= critical;
  o.note("mean displacement " + num(mean) + " vs lambda T E[mark] = " + num(target) + " (within 1%)");
  o.note("chi-square " + num(chi2) + " on " + std::to_string(observed.size() - 1) + " d.o.f., 1% critical " +
         num(critical));
  return o;
}

// --- 4. Periodic OU end to end --------------------------------------------

Outcome periodic_ou() {
  Outcome o;
  const double a = 1, c = 1, w = kTwoPi;
  const ModelSpec spec = builtin("periodic_ou", Params());

  bool law_ok = true;
  const double x0 = 2.0;
  const std::size_t n = 20000;
  for (double t : {0.25, 1.5, 3.75}) {
    const EmpiricalMeasure mu = estimate_law(spec, make_vec({x0}), 0.0, t, n, step(1e-3), 100);
    const double mean_exact = std::exp(-a * t) * (x0 - periodic_mean(a, c, w, 0)) + periodic_mean(a, c, w, t);
    const double var_exact = (1 - std::exp(-2 * a * t)) / (2 * a);
    const double mean = mu.mean()(0), var = mu.covariance()(0, 0);
    const double se_mean = std::sqrt(var / n), se_var = var * std::sqrt(2.0 / (n - 1));
    const bool ok = std::abs(mean - mean_exact) <= 4 * se_mean && std::abs(var - var_exact) <= 4 * se_var;
    law_ok = law_ok && ok;
    o.note("t = " + num(t) + ": mean " + num(mean) + " vs " + num(mean_exact) + " (se " + num(se_mean) +
           "), var " + num(var) + " vs " + num(var_exact) + " (se " + num(se_var) + ")");
  }

  const std::size_t k_max = 11;
  const LawPeriodicityReport per = periodicity_test(spec, make_vec({5.0}), 0.0, k_max, 20000, step(1e-2), 200);
  const bool per_ok = per.first_in_band <= 10 && per.first_in_band < per.in_band.size();
  std::ostringstream d;
  for (std::size_t k = 0; k < per.d.size(); ++k) d << (k ? " " : "") << num(per.d[k].value);
  o.note("periodicity from x0 = 5, 2e4 paths: d_k = " + d.str());
  o.note("first in band at k = " + std::to_string(per.first_in_band) + ", settled from k = " +
         std::to_string(per.settled_from));

  const CesaroReport ces = cesaro_average(spec, [](const Vec& x) { return x(0); }, 0.0, make_vec({0.0}), 50, 20000,
                                          step(1e-3), 300);
  const double target = 1.0 / (1.0 + 4 * std::numbers::pi * std::numbers::pi);
  const bool ces_ok = std::abs(ces.average.back() - target) <= 4 * ces.std_error.back();
  o.note("cesaro A_50 = " + num(ces.average.back()) + " +- " + num(ces.std_error.back()) + " vs 1/(1+4 pi^2) = " +
         num(target));
  o.pass = law_ok && per_ok && ces_ok;
  return o;
}

// --- 5. BEL estimator -----------------------------------------------------

ModelSpec nonlinear_2d() {
  ModelSpec spec = builtin("dissipative", Params());
  spec.name = "cubic_2d";
  spec.drift = [](double, const Vec& x) -> Vec {
    return make_vec({-x(0) - x(0) * x(0) * x(0) + 0.5 * x(1), -x(1) - x(1) * x(1) * x(1) - 0.5 * x(0)});
  };
  spec.drift_jacobian = nullptr;
  spec.diffusion = [](double, const Vec& x) -> Mat {
    Mat s = Mat::Zero(2, 2);
    s(0, 0) = 1 + 0.25 * std::sin(x(0));
    s(1, 1) = 1 + 0.25 * std::sin(x(1));
    return s;
  };
  spec.diffusion_partial = nullptr;
  return spec;
}

Outcome bel() {
  Outcome o;
  const ModelSpec ou = builtin("periodic_ou", params({{"c", "0"}}));
  const BelEstimate e = bel_gradient(ou, [](const Vec& x) { return x(0); }, make_vec({0.0}), make_vec({1.0}), 0.0,
                                     1.0, 100000, step(1e-3), 500);
  const double exact = std::exp(-1.0);
  const bool ou_ok = std::abs(e.estimate - exact) <= 3 * e.std_error;
  o.note("scalar OU, clipped identity, 1e5 paths: " + num(e.estimate) + " +- " + num(e.std_error) + " vs e^-1 = " +
         num(exact));

  const ModelSpec spec = nonlinear_2d();
  const BoundedFn phi = [](const Vec& x) { return std::tanh(x(0) + x(1)); };
  const Vec x0 = make_vec({0.5, -0.3}), h = make_vec({1, 0.5});
  const std::size_t n = 40000;
  const double dt = 0.01, eps = 1e-2, t = 1.0;
  const BelEstimate b = bel_gradient(spec, phi, x0, h, 0.0, t, n, step(dt), 501);
  std::vector<double> fd(n);
  parallel_for(n, [&](std::size_t i) {
    const auto p = simulate_snapshots(spec, x0 + eps * h, 0.0, {t}, step(dt), RngStream(502, i));
    const auto m = simulate_snapshots(spec, x0 - eps * h, 0.0, {t}, step(dt), RngStream(502, i));
    fd[i] = (phi(p.states[0]) - phi(m.states[0])) / (2 * eps);
  });
  double mean = 0.0, ss = 0.0;
  for (double v : fd) mean += v / n;
  for (double v : fd) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (n - 1) / n);
  const bool fd_ok = std::abs(b.estimate - mean) <= 3 * std::hypot(b.std_error, se);
  o.note("2-d cubic model at t = 1: BEL " + num(b.estimate) + " +- " + num(b.std_error) + ", central difference " +
         num(mean) + " +- " + num(se));
  o.pass = ou_ok && fd_ok;
  return o;
}

// --- 6. Strong Feller shape -----------------------------------------------

Outcome feller() {
  Outcome o;
  const ModelSpec spec = builtin("periodic_ou", Params());
  const std::vector<double> ladder{0.05, 0.1, 0.2, 0.5, 1.0};
  const FellerProbeReport r = feller_probe(spec, [](const Vec& x) { return x(0); }, make_vec({0.5}),
                                           make_vec({-0.5}), 0.0, ladder, 10000, step(1e-3), 600);
  std::ostringstream s;
  for (std::size_t k = 0; k < r.ratios.size(); ++k) s << (k ? " " : "") << num(r.ratios[k]);
  o.note("ratios on {0.05, 0.1, 0.2, 0.5, 1}: " + s.str());
  o.note("envelope M = " + num(r.m_envelope) + ", least-squares M = " + num(r.m_least_squares) +
         " (dominates: " + (r.least_squares_dominates ? "yes" : "no") + "), upper-half M = " + num(r.m_upper));
  o.pass = r.envelope_dominates && r.shape_ok;
  return o;
}

// --- 7. Picard contraction ------------------------------------------------

Outcome picard() {
  Outcome o;
  const ModelSpec det = builtin("periodic_ou", params({{"a", "1"}, {"c", "0"}, {"sigma", "0"}}));
  const PicardReport d = picard_validate(det, make_vec({1.0}), 0.5, 8, step(1e-3), RngStream(1, 0));
  const bool det_ok = !d.diverged && d.max_ratio_from_second() <= 0.6;
  o.note("deterministic: max ratio from the second iterate " + num(d.max_ratio_from_second()));

  ModelSpec sto = builtin("periodic_ou", params({{"a", "1"}, {"c", "0"}}));
  sto.diffusion = [](double, const Vec& x) -> Mat { return Mat::Constant(1, 1, 0.5 * (1 + 0.5 * std::sin(x(0)))); };
  sto.diffusion_partial = [](double, const Vec& x, int) -> Mat { return Mat::Constant(1, 1, 0.25 * std::cos(x(0))); };
  int good = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const PicardReport r = picard_validate(sto, make_vec({1.0}), 0.5, 8, step(1e-3), RngStream(seed, 0));
    good += !r.diverged && r.max_ratio_from_second() <= 0.6;
  }
  o.note("stochastic (sigma = 0.5 (1 + 0.5 sin x)): " + std::to_string(good) + " of 100 runs contract (need 95)");
  o.pass = det_ok && good >= 95;
  return o;
}

// --- 8. Lorenz periodic law -----------------------------------------------

Outcome lorenz_periodic_law() {
  Outcome o;
  const ModelSpec spec = builtin("lorenz", params({{"alpha", "10, 0, 2"}, {"eps", "1"}}));
  const std::size_t k_max = 40;
  const LawPeriodicityReport r = periodicity_test(spec, make_vec({1, 1, 1}), 0.0, k_max, 20000, step(5e-3), 800);
  std::ostringstream d;
  for (std::size_t k = 0; k < r.d.size(); ++k) {
    d << (k ? " " : "") << num(std::round(r.d[k].value * 1e4) / 1e4) << (r.in_band[k] ? "*" : "");
  }
  o.note("d_k (* in band): " + d.str());
  o.note("settled from k = " + std::to_string(r.settled_from) + " of " + std::to_string(k_max) +
         ", blow-ups " + std::to_string(r.blowups));
  o.pass = r.settled_from + 10 <= k_max && r.blowups == 0;
  return o;
}

// --- 9. Determinism -------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "psde_acceptance_replay";
  fs::remove_all(root);
  bool ok = true;
  std::ostringstream sink;
  for (const auto& name : command_names()) {
    std::vector<std::string> args{name, "--out", (root / name / "a").string(), "--threads", "1", "--seed", "77",
                                  "--set", "sim.n_paths=64", "--set", "sim.dt=0.01", "--set", "sim.horizon=1",
                                  "--set", "lyapunov.points_per_shell=8", "--set", "periodicity.k_max=3",
                                  "--set", "cesaro.n=3", "--set", "law.bootstrap=20", "--set", "bel.direction=1",
                                  "--set", "dynkin.h=0.01", "--set", "levy.kind=stable", "--set", "levy.delta=0.1"};
    if (name == "check-lyapunov") args.insert(args.end(), {"--set", "model.name=dissipative"});
    const int first = run(args, sink, sink);
    const fs::path manifest = root / name / "a" / kManifestName;
    const int second = run({"replay", "--config", manifest.string(), "--threads", "4", "--out",
                            (root / name / "b").string()},
                           sink, sink);
    std::size_t files = 0;
    bool same = first == second;
    for (const auto& entry : fs::directory_iterator(root / name / "a")) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      same = same && slurp(entry.path()) == slurp(root / name / "b" / entry.path().filename());
    }
    same = same && files > 0 && first != kExitUsage && first != kExitNumerical;
    ok = ok && same;
    o.note(name + ": exit " + std::to_string(first) + "/" + std::to_string(second) + ", " + std::to_string(files) +
           " csv file(s) " + (same ? "identical" : "DIFFER"));
  }
  fs::remove_all(root);
  o.pass = ok;
  return o;
}

// --- 10. Truncation agreement ---------------------------------------------

Outcome truncation_agreement() {
  Outcome o;
  LevyMeasureSpec levy = LevyMeasureSpec::stable_like(3, 1.0, 0.5, 0.1);
  const ModelSpec spec = builtin("lorenz", params({{"eps", "1"}}), levy);
  StepConfig plain = step(1e-3);
  StepConfig cut = plain;
  cut.truncation_radius = 8.0;
  const TruncatedModel trunc = truncate(spec, 8.0);
  std::size_t exits = 0, mismatches = 0, compared = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const SamplePath a = simulate_path(spec, make_vec({1, 1, 1}), 0.0, 2.0, plain, RngStream(900, i));
    const SamplePath b = simulate_path(trunc.spec(), make_vec({1, 1, 1}), 0.0, 2.0, plain, RngStream(900, i));
    const SamplePath c = simulate_path(spec, make_vec({1, 1, 1}), 0.0, 2.0, cut, RngStream(900, i));
    const double until = c.exited ? c.exited->time : 2.0;
    exits += c.exited.has_value();
    for (std::size_t r = 0; r < a.times.size() && a.times[r] <= until; ++r) {
      ++compared;
      mismatches += !(a.states[r] == b.states[r]) || !(a.states[r] == c.states[r]);
    }
  }
  o.note("200 Lorenz paths with small jumps: " + std::to_string(exits) + " exits from |x| < 8, " +
         std::to_string(compared) + " rows compared, " + std::to_string(mismatches) + " mismatches");
  o.pass = mismatches == 0 && exits > 0;
  return o;
}

}  // namespace
}  // namespace psde

int main() {
  using namespace psde;
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria = {
      {1, "generator correctness", generator_correctness},
      {2, "certificate audits", certificate_audits},
      {3, "interlacing oracle", interlacing},
      {4, "periodic OU end to end", periodic_ou},
      {5, "BEL estimator", bel},
      {6, "strong Feller shape", feller},
      {7, "Picard contraction", picard},
      {8, "Lorenz periodic law", lorenz_periodic_law},
      {9, "determinism", determinism},
      {10, "truncation agreement", truncation_agreement},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " (" << std::fixed
              << std::setprecision(1) << secs << " s)\n";
    std::cout.unsetf(std::ios::fixed);
    for (const auto& line : o.details) std::cout << "    " << line << '\n';
    std::cout.flush();
  }
  std::cout << (criteria.size() - failures) << " of " << criteria.size() << " criteria pass\n";
  return failures == 0 ? 0 : 1;
}
