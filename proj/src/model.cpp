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

#include "psde/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "psde/polynomial_model.hpp"

namespace psde {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double parse_number(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw InvalidArgument("parameter '" + key + "' expects a number, got '" + text + "'");
  }
}

// E embeds marks into state space: identity for l == m, ones column for l == 1.
Mat mark_embedding(int m, int l) {
  if (l == m) return Mat::Identity(m, m);
  if (l == 1) return Mat::Ones(m, 1);
  throw InvalidArgument("builtin jump coefficients need levy.dim equal to 1 or the state dimension");
}

// Adds H = small_scale E u and G = large_scale E u.
void attach_affine_jumps(ModelSpec& spec, double small_scale, double large_scale) {
  const Mat embed = mark_embedding(spec.m, spec.l);
  if (spec.levy.has_small() && small_scale != 0.0) {
    spec.small_jump = [embed, small_scale](double, const Vec&, const Vec& u) -> Vec {
      return small_scale * (embed * u);
    };
    spec.small_jump_jacobian = [m = spec.m](double, const Vec&, const Vec&) -> Mat {
      return Mat::Zero(m, m);
    };
    spec.small_jump_affine_in_u = true;
    const double rate = spec.levy.small_rate();
    const Vec mean_mark = spec.levy.small_first_moment() / rate;
    spec.small_jump_mean = [embed, small_scale, mean_mark](double, const Vec&) -> Vec {
      return small_scale * (embed * mean_mark);
    };
  }
  if (spec.levy.has_large() && large_scale != 0.0) {
    spec.large_jump = [embed, large_scale](double, const Vec&, const Vec& u) -> Vec {
      return large_scale * (embed * u);
    };
  }
}

// sigma(t, x) = eps (1 + modulation sin(w t)) I + perturbation diag(tanh x_i)
void attach_state_noise(ModelSpec& spec, double eps, double perturbation, double modulation) {
  if (std::abs(modulation) >= 1.0) throw InvalidArgument("noise modulation must satisfy |modulation| < 1");
  if (eps != 0.0 && eps * (1.0 - std::abs(modulation)) <= std::abs(perturbation)) {
    throw InvalidArgument("noise perturbation must stay below eps (1 - |modulation|) to keep sigma invertible");
  }
  const double omega = kTwoPi / spec.theta;
  const int m = spec.m;
  spec.k = m;
  spec.diffusion = [=](double t, const Vec& x) -> Mat {
    Mat s = Mat::Zero(m, m);
    const double level = eps * (1.0 + modulation * std::sin(omega * t));
    for (int i = 0; i < m; ++i) s(i, i) = level + perturbation * std::tanh(x(i));
    return s;
  };
  spec.diffusion_partial = [=](double, const Vec& x, int i) -> Mat {
    Mat d = Mat::Zero(m, m);
    const double th = std::tanh(x(i));
    d(i, i) = perturbation * (1.0 - th * th);
    return d;
  };
}

ModelSpec periodic_ou(const Params& p, LevyMeasureSpec levy) {
  p.require_known({"a", "c", "sigma", "theta", "dim", "small_scale", "large_scale"}, "periodic_ou");
  ModelSpec spec;
  spec.name = "periodic_ou";
  spec.theta = p.number("theta", 1.0);
  spec.m = static_cast<int>(p.number("dim", 1.0));
  spec.k = spec.m;
  spec.l = levy.dim;
  spec.levy = std::move(levy);
  const double a = p.number("a", 1.0);
  const double c = p.number("c", 1.0);
  const double sigma = p.number("sigma", 1.0);
  const double omega = kTwoPi / spec.theta;
  const int m = spec.m;
  spec.drift = [=](double t, const Vec& x) -> Vec {
    return (-a * x).array() + c * std::cos(omega * t);
  };
  spec.drift_jacobian = [=](double, const Vec&) -> Mat { return -a * Mat::Identity(m, m); };
  spec.diffusion = [=](double, const Vec&) -> Mat { return sigma * Mat::Identity(m, m); };
  spec.diffusion_partial = [=](double, const Vec&, int) -> Mat { return Mat::Zero(m, m); };
  attach_affine_jumps(spec, p.number("small_scale", 1.0), p.number("large_scale", 1.0));
  return spec;
}

ModelSpec dissipative(const Params& p, LevyMeasureSpec levy) {
  p.require_known({"kappa", "sigma", "forcing", "theta", "dim", "small_scale", "large_scale"},
                  "dissipative");
  ModelSpec spec;
  spec.name = "dissipative";
  spec.theta = p.number("theta", 1.0);
  spec.m = static_cast<int>(p.number("dim", 2.0));
  spec.k = spec.m;
  spec.l = levy.dim;
  spec.levy = std::move(levy);
  const double kappa = p.number("kappa", 1.0);
  const double sigma = p.number("sigma", 1.0);
  const double forcing = p.number("forcing", 0.0);
  const double omega = kTwoPi / spec.theta;
  const int m = spec.m;
  spec.drift = [=](double t, const Vec& x) -> Vec {
    return (-kappa * x).array() + forcing * std::cos(omega * t);
  };
  spec.drift_jacobian = [=](double, const Vec&) -> Mat { return -kappa * Mat::Identity(m, m); };
  spec.diffusion = [=](double, const Vec&) -> Mat { return sigma * Mat::Identity(m, m); };
  spec.diffusion_partial = [=](double, const Vec&, int) -> Mat { return Mat::Zero(m, m); };
  attach_affine_jumps(spec, p.number("small_scale", 1.0), p.number("large_scale", 1.0));
  return spec;
}

ModelSpec lorenz_from_params(const Params& p, LevyMeasureSpec levy) {
  p.require_known({"alpha", "beta", "mu", "theta", "eps", "perturbation", "modulation",
                   "small_scale", "large_scale"},
                  "lorenz");
  LorenzParams lp;
  lp.theta = p.number("theta", 1.0);
  const FourierSeries alpha(p.list("alpha", {10.0}), lp.theta);
  const FourierSeries beta(p.list("beta", {8.0 / 3.0}), lp.theta);
  const FourierSeries mu(p.list("mu", {28.0}), lp.theta);
  if (alpha.min_over_period() <= 0.0 || beta.min_over_period() <= 0.0) {
    throw InvalidArgument("lorenz: alpha(t) and beta(t) must stay positive over a period");
  }
  lp.alpha = alpha;
  lp.alpha_prime = [alpha](double t) { return alpha.derivative(t); };
  lp.beta = beta;
  lp.mu = mu;
  lp.mu_prime = [mu](double t) { return mu.derivative(t); };
  lp.noise_eps = p.number("eps", 1.0);
  lp.noise_perturbation = p.number("perturbation", 0.0);
  lp.noise_modulation = p.number("modulation", 0.0);
  lp.small_scale = p.number("small_scale", 1.0);
  lp.large_scale = p.number("large_scale", 1.0);
  return lorenz_model(lp, std::move(levy));
}

ModelSpec lemniscate_model(const Params& p, LevyMeasureSpec levy) {
  p.require_known({"theta", "eps", "perturbation", "modulation", "small_scale", "large_scale"},
                  "lemniscate");
  ModelSpec spec;
  spec.name = "lemniscate";
  spec.theta = p.number("theta", 1.0);
  spec.m = 2;
  spec.l = levy.dim;
  spec.levy = std::move(levy);
  spec.drift = [](double, const Vec& x) -> Vec { return lemniscate::drift(x); };
  attach_state_noise(spec, p.number("eps", 1.0), p.number("perturbation", 0.0),
                     p.number("modulation", 0.0));
  attach_affine_jumps(spec, p.number("small_scale", 1.0), p.number("large_scale", 1.0));
  return spec;
}

ModelSpec frozen(const Params& p, LevyMeasureSpec levy) {
  p.require_known({"dim", "theta", "large_scale"}, "frozen");
  ModelSpec spec;
  spec.name = "frozen";
  spec.theta = p.number("theta", 1.0);
  spec.m = static_cast<int>(p.number("dim", 1.0));
  spec.k = spec.m;
  spec.l = levy.dim;
  spec.levy = std::move(levy);
  const int m = spec.m;
  spec.drift = [m](double, const Vec&) -> Vec { return Vec::Zero(m); };
  spec.drift_jacobian = [m](double, const Vec&) -> Mat { return Mat::Zero(m, m); };
  spec.diffusion = [m](double, const Vec&) -> Mat { return Mat::Zero(m, m); };
  spec.diffusion_partial = [m](double, const Vec&, int) -> Mat { return Mat::Zero(m, m); };
  attach_affine_jumps(spec, 0.0, p.number("large_scale", 0.0));
  return spec;
}

Mat projection_jacobian(const Vec& x, double radius) {
  const int m = static_cast<int>(x.size());
  const double r = x.norm();
  if (r <= radius) return Mat::Identity(m, m);
  const Vec e = x / r;
  return (radius / r) * (Mat::Identity(m, m) - e * e.transpose());
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelSpec

void ModelSpec::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw InvalidArgument("model: theta must be positive");
  if (m < 1 || m > kMaxDim || k < 1 || k > kMaxDim || l < 1 || l > kMaxDim) {
    throw InvalidArgument("model: dimensions must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (k < m) throw InvalidArgument("model: Brownian dimension k must be at least m");
  if (!drift || !diffusion) throw InvalidArgument("model: drift and diffusion are required");
  if (levy.dim != l) throw InvalidArgument("model: levy.dim does not match the mark dimension");
  levy.validate();
}

Vec eval_small_jump(const ModelSpec& spec, double t, const Vec& x, const Vec& u) {
  return spec.small_jump ? spec.small_jump(t, x, u) : Vec::Zero(spec.m);
}

Vec eval_large_jump(const ModelSpec& spec, double t, const Vec& x, const Vec& u) {
  return spec.large_jump ? spec.large_jump(t, x, u) : Vec::Zero(spec.m);
}

double jacobian_step(const Vec& x) { return std::max(1e-6, 1e-8 * x.norm()); }

Mat drift_jacobian(const ModelSpec& spec, double t, const Vec& x) {
  if (spec.drift_jacobian) return spec.drift_jacobian(t, x);
  const double h = jacobian_step(x);
  Mat jac(spec.m, spec.m);
  Vec xp = x, xm = x;
  for (int i = 0; i < spec.m; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    jac.col(i) = (spec.drift(t, xp) - spec.drift(t, xm)) / (2.0 * h);
    xp(i) = xm(i) = x(i);
  }
  return jac;
}

Mat diffusion_partial(const ModelSpec& spec, double t, const Vec& x, int i) {
  if (spec.diffusion_partial) return spec.diffusion_partial(t, x, i);
  const double h = jacobian_step(x);
  Vec xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (spec.diffusion(t, xp) - spec.diffusion(t, xm)) / (2.0 * h);
}

Mat small_jump_jacobian(const ModelSpec& spec, double t, const Vec& x, const Vec& u) {
  if (!spec.small_jump) return Mat::Zero(spec.m, spec.m);
  if (spec.small_jump_jacobian) return spec.small_jump_jacobian(t, x, u);
  const double h = jacobian_step(x);
  Mat jac(spec.m, spec.m);
  Vec xp = x, xm = x;
  for (int i = 0; i < spec.m; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    jac.col(i) = (spec.small_jump(t, xp, u) - spec.small_jump(t, xm, u)) / (2.0 * h);
    xp(i) = xm(i) = x(i);
  }
  return jac;
}

// ---------------------------------------------------------------------------
// FourierSeries

FourierSeries::FourierSeries(std::vector<double> coefficients, double theta)
    : coefficients_(std::move(coefficients)), omega_(kTwoPi / theta) {
  if (coefficients_.empty()) coefficients_.push_back(0.0);
  if (coefficients_.size() % 2 == 0) coefficients_.push_back(0.0);
}

double FourierSeries::operator()(double t) const {
  double value = coefficients_[0];
  for (std::size_t h = 1; 2 * h < coefficients_.size(); ++h) {
    const double phase = static_cast<double>(h) * omega_ * t;
    value += coefficients_[2 * h - 1] * std::cos(phase) + coefficients_[2 * h] * std::sin(phase);
  }
  return value;
}

double FourierSeries::derivative(double t) const {
  double value = 0.0;
  for (std::size_t h = 1; 2 * h < coefficients_.size(); ++h) {
    const double w = static_cast<double>(h) * omega_;
    value += w * (-coefficients_[2 * h - 1] * std::sin(w * t) + coefficients_[2 * h] * std::cos(w * t));
  }
  return value;
}

double FourierSeries::min_over_period(int samples) const {
  if (omega_ == 0.0) return coefficients_[0];
  const double period = kTwoPi / omega_;
  double lowest = (*this)(0.0);
  for (int i = 1; i < samples; ++i) lowest = std::min(lowest, (*this)(period * i / samples));
  return lowest;
}

// ---------------------------------------------------------------------------
// Params

double Params::number(const std::string& key, double fallback) const {
  const auto it = raw_.find(key);
  if (it == raw_.end()) return fallback;
  return parse_number(it->second, key);
}

std::vector<double> Params::list(const std::string& key, std::vector<double> fallback) const {
  const auto it = raw_.find(key);
  if (it == raw_.end()) return fallback;
  std::string text = it->second;
  std::replace(text.begin(), text.end(), ',', ' ');
  text.erase(std::remove(text.begin(), text.end(), '['), text.end());
  text.erase(std::remove(text.begin(), text.end(), ']'), text.end());
  std::istringstream in(text);
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_number(token, key));
  if (values.empty()) throw InvalidArgument("parameter '" + key + "' expects a list of numbers");
  return values;
}

std::string Params::string(const std::string& key, const std::string& fallback) const {
  const auto it = raw_.find(key);
  return it == raw_.end() ? fallback : it->second;
}

void Params::require_known(const std::vector<std::string>& allowed, const std::string& model) const {
  for (const auto& [key, value] : raw_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidArgument("unknown parameter 'model.params." + key + "' for model " + model);
    }
  }
}

// ---------------------------------------------------------------------------
// Builtins

ModelSpec lorenz_model(const LorenzParams& params, LevyMeasureSpec levy) {
  ModelSpec spec;
  spec.name = "lorenz";
  spec.theta = params.theta;
  spec.m = 3;
  spec.l = levy.dim;
  spec.levy = std::move(levy);
  const auto alpha = params.alpha;
  const auto beta = params.beta;
  const auto mu = params.mu;
  spec.drift = [=](double t, const Vec& x) -> Vec {
    const double a = alpha(t), b = beta(t), r = mu(t);
    Vec out(3);
    out(0) = -a * x(0) + a * x(1);
    out(1) = r * x(0) - x(1) - x(0) * x(2);
    out(2) = -b * x(2) + x(0) * x(1);
    return out;
  };
  spec.drift_jacobian = [=](double t, const Vec& x) -> Mat {
    const double a = alpha(t), b = beta(t), r = mu(t);
    Mat jac(3, 3);
    jac << -a, a, 0.0,
           r - x(2), -1.0, -x(0),
           x(1), x(0), -b;
    return jac;
  };
  attach_state_noise(spec, params.noise_eps, params.noise_perturbation, params.noise_modulation);
  attach_affine_jumps(spec, params.small_scale, params.large_scale);
  return spec;
}

ModelSpec builtin(const std::string& name, const Params& params, LevyMeasureSpec levy) {
  ModelSpec spec;
  if (name == "periodic_ou") {
    spec = periodic_ou(params, std::move(levy));
  } else if (name == "dissipative") {
    spec = dissipative(params, std::move(levy));
  } else if (name == "lorenz") {
    spec = lorenz_from_params(params, std::move(levy));
  } else if (name == "lemniscate") {
    spec = lemniscate_model(params, std::move(levy));
  } else if (name == "frozen") {
    spec = frozen(params, std::move(levy));
  } else if (name == "custom") {
    params.require_known({"file"}, "custom");
    const std::string path = params.string("file", "");
    if (path.empty()) throw InvalidArgument("model custom needs model.params.file");
    spec = to_model_spec(load_polynomial_model(path), std::move(levy));
  } else {
    throw InvalidArgument("unknown model name '" + name + "'");
  }
  spec.validate();
  return spec;
}

std::vector<std::string> builtin_names() {
  return {"periodic_ou", "dissipative", "lorenz", "lemniscate", "frozen", "custom"};
}

std::vector<std::string> builtin_param_names(const std::string& name) {
  if (name == "periodic_ou") return {"a", "c", "sigma", "theta", "dim", "small_scale", "large_scale"};
  if (name == "dissipative") {
    return {"kappa", "sigma", "forcing", "theta", "dim", "small_scale", "large_scale"};
  }
  if (name == "lorenz") {
    return {"alpha", "beta", "mu", "theta", "eps", "perturbation", "modulation", "small_scale",
            "large_scale"};
  }
  if (name == "lemniscate") {
    return {"theta", "eps", "perturbation", "modulation", "small_scale", "large_scale"};
  }
  if (name == "frozen") return {"dim", "theta", "large_scale"};
  if (name == "custom") return {"file"};
  return {};
}

namespace lemniscate {

double invariant(const Vec& x) {
  const double r2 = x(0) * x(0) + x(1) * x(1);
  return r2 * r2 - 4.0 * (x(0) * x(0) - x(1) * x(1));
}

Vec invariant_gradient(const Vec& x) {
  const double r2 = x(0) * x(0) + x(1) * x(1);
  Vec grad(2);
  grad(0) = 4.0 * x(0) * r2 - 8.0 * x(0);
  grad(1) = 4.0 * x(1) * r2 + 8.0 * x(1);
  return grad;
}

double potential(double i) { return i * i / (2.0 * std::pow(1.0 + i * i, 0.75)); }

double f(double i) { return i * (i * i + 4.0) / (4.0 * std::pow(1.0 + i * i, 1.75)); }

double g(double i) { return (i * i + 4.0) / (4.0 * std::pow(1.0 + i * i, 2.75)); }

Vec drift(const Vec& x) {
  const double i = invariant(x);
  const Vec grad = invariant_gradient(x);
  const double fi = f(i), gi = g(i);
  Vec b(2);
  b(0) = -fi * grad(0) - gi * grad(1);
  b(1) = -fi * grad(1) + gi * grad(0);
  return b;
}

}  // namespace lemniscate

// ---------------------------------------------------------------------------
// Truncation

TruncatedModel::TruncatedModel(ModelSpec base, double radius)
    : base_(std::move(base)), truncated_(base_), radius_(radius) {
  if (!(radius > 0.0)) throw InvalidArgument("truncate: radius must be positive");
  const ModelSpec& b = base_;
  const double n = radius_;
  auto project = [n](const Vec& x) -> Vec {
    const double r = x.norm();
    return r <= n ? x : Vec(x * (n / r));
  };
  truncated_.name = b.name + "@truncated";
  truncated_.drift = [f = b.drift, project](double t, const Vec& x) { return f(t, project(x)); };
  truncated_.diffusion = [f = b.diffusion, project](double t, const Vec& x) {
    return f(t, project(x));
  };
  if (b.small_jump) {
    truncated_.small_jump = [f = b.small_jump, project](double t, const Vec& x, const Vec& u) {
      return f(t, project(x), u);
    };
  }
  if (b.large_jump) {
    truncated_.large_jump = [f = b.large_jump, project](double t, const Vec& x, const Vec& u) {
      return f(t, project(x), u);
    };
  }
  if (b.small_jump_mean) {
    truncated_.small_jump_mean = [f = b.small_jump_mean, project](double t, const Vec& x) {
      return f(t, project(x));
    };
  }
  if (b.drift_jacobian) {
    truncated_.drift_jacobian = [f = b.drift_jacobian, project, n](double t, const Vec& x) -> Mat {
      return f(t, project(x)) * projection_jacobian(x, n);
    };
  }
  if (b.diffusion_partial) {
    truncated_.diffusion_partial = [f = b.diffusion_partial, project, n, m = b.m](
                                       double t, const Vec& x, int i) -> Mat {
      const Vec y = project(x);
      const Mat dp = projection_jacobian(x, n);
      Mat out = f(t, y, 0) * dp(0, i);
      for (int j = 1; j < m; ++j) out += f(t, y, j) * dp(j, i);
      return out;
    };
  } else {
    truncated_.diffusion_partial = nullptr;
  }
  if (b.small_jump_jacobian) {
    truncated_.small_jump_jacobian = [f = b.small_jump_jacobian, project, n](
                                         double t, const Vec& x, const Vec& u) -> Mat {
      return f(t, project(x), u) * projection_jacobian(x, n);
    };
  }
}

Vec TruncatedModel::project(const Vec& x) const {
  const double r = x.norm();
  return r <= radius_ ? x : Vec(x * (radius_ / r));
}

TruncatedModel truncate(const ModelSpec& spec, double radius) { return TruncatedModel(spec, radius); }

TruncatedModel truncate(const TruncatedModel& model, double radius) {
  if (radius >= model.radius()) return model;
  return TruncatedModel(model.base(), radius);
}

// ---------------------------------------------------------------------------
// Periodicity audit

PeriodicityReport validate_periodicity(const ModelSpec& spec, std::size_t n_samples, RngStream& rng) {
  PeriodicityReport report;
  auto track = [&](double a, double b, double t, const Vec& x, const char* what) {
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw NumericalError(std::string("validate_periodicity: non-finite ") + what + " at t = " +
                           std::to_string(t) + ", x = " + format_vec(x));
    }
    report.max_deviation = std::max(report.max_deviation, std::abs(a - b));
  };
  auto sample_u = [&]() -> Vec {
    if (spec.levy.has_small() && rng.uniform() < 0.5) {
      return sample_mark(spec.levy.small, spec.levy.dim, spec.levy.small_cutoff, rng);
    }
    if (spec.levy.has_large()) return sample_mark(spec.levy.large, spec.levy.dim, 0.0, rng);
    Vec u(spec.l);
    for (int j = 0; j < spec.l; ++j) u(j) = 4.0 * rng.uniform() - 2.0;
    return u;
  };
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double t = 10.0 * spec.theta * rng.uniform();
    Vec x(spec.m);
    for (int i = 0; i < spec.m; ++i) x(i) = 10.0 * rng.uniform() - 5.0;
    const Vec u = sample_u();
    const double shifted = t + spec.theta;

    const Vec b0 = spec.drift(t, x), b1 = spec.drift(shifted, x);
    for (int i = 0; i < spec.m; ++i) track(b0(i), b1(i), t, x, "drift");
    const Mat s0 = spec.diffusion(t, x), s1 = spec.diffusion(shifted, x);
    for (Eigen::Index i = 0; i < s0.size(); ++i) track(s0.data()[i], s1.data()[i], t, x, "diffusion");
    if (spec.small_jump) {
      const Vec h0 = spec.small_jump(t, x, u), h1 = spec.small_jump(shifted, x, u);
      for (int i = 0; i < spec.m; ++i) track(h0(i), h1(i), t, x, "small-jump coefficient");
    }
    if (spec.large_jump) {
      const Vec g0 = spec.large_jump(t, x, u), g1 = spec.large_jump(shifted, x, u);
      for (int i = 0; i < spec.m; ++i) track(g0(i), g1(i), t, x, "large-jump coefficient");
    }
  }
  report.pass = report.max_deviation <= 1e-12;
  return report;
}

}  // namespace psde
