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

#include "psde/certificates.hpp"

#include <cmath>

namespace psde {

LyapunovCertificateSpec dissipative_certificate() {
  LyapunovCertificateSpec cert;
  cert.name = "dissipative";
  cert.v = TestFunction::squared_norm(1.0);
  cert.w = [](double, const Vec& x) -> Vec { return 0.5 * x; };
  cert.q = [](double) { return 1.0; };
  cert.u = [](double, double r) { return r * r + 1.0; };
  return cert;
}

LyapunovCertificateSpec lorenz_certificate(std::function<double(double)> alpha,
                                           std::function<double(double)> alpha_prime,
                                           std::function<double(double)> mu,
                                           std::function<double(double)> mu_prime) {
  auto s = [alpha, mu](double t) { return alpha(t) + mu(t); };
  auto s_prime = [alpha_prime, mu_prime](double t) { return alpha_prime(t) + mu_prime(t); };
  LyapunovCertificateSpec cert;
  cert.name = "lorenz";
  cert.v.value = [s](double t, const Vec& x) {
    const double st = s(t);
    const double z = x(2) - st;
    return x(0) * x(0) + x(1) * x(1) + z * z + st * st + 1.0;
  };
  cert.v.time_derivative = [s, s_prime](double t, const Vec& x) {
    return 2.0 * s_prime(t) * (2.0 * s(t) - x(2));
  };
  cert.v.gradient = [s](double t, const Vec& x) -> Vec {
    return make_vec({2.0 * x(0), 2.0 * x(1), 2.0 * (x(2) - s(t))});
  };
  cert.v.hessian = [](double, const Vec&) -> Mat { return 2.0 * Mat::Identity(3, 3); };
  cert.w = [s](double t, const Vec& x) -> Vec { return make_vec({0.5 * x(0), 0.5 * x(1), 0.5 * (x(2) - s(t))}); };
  cert.q = [s](double t) {
    const double st = s(t);
    return st * st + 1.0;
  };
  cert.u = [](double, double r) { return 0.5 * r * r + 1.0; };
  return cert;
}

LyapunovCertificateSpec lemniscate_certificate(double q_const) {
  LyapunovCertificateSpec cert;
  cert.name = "lemniscate";
  cert.v.value = [](double, const Vec& x) { return lemniscate::potential(lemniscate::invariant(x)) + 64.0; };
  cert.v.time_derivative = [](double, const Vec&) { return 0.0; };
  cert.v.gradient = [](double, const Vec& x) -> Vec {
    return lemniscate::f(lemniscate::invariant(x)) * lemniscate::invariant_gradient(x);
  };
  cert.v.hessian = [](double, const Vec& x) -> Mat {
    const double i = lemniscate::invariant(x);
    const double p = 1.0 + i * i;
    const double f_prime =
        ((3.0 * i * i + 4.0) * p - (i * i * i + 4.0 * i) * 3.5 * i) / (4.0 * std::pow(p, 2.75));
    const Vec grad = lemniscate::invariant_gradient(x);
    Mat hess_i(2, 2);
    hess_i << 12.0 * x(0) * x(0) + 4.0 * x(1) * x(1) - 8.0, 8.0 * x(0) * x(1),
              8.0 * x(0) * x(1), 4.0 * x(0) * x(0) + 12.0 * x(1) * x(1) + 8.0;
    return f_prime * grad * grad.transpose() + lemniscate::f(i) * hess_i;
  };
  cert.w = [](double, const Vec& x) -> Vec { return x; };
  cert.q = [q_const](double) { return q_const; };
  const double scale = std::pow(2.0, 2.25);
  cert.u = [scale](double, double r) { return r * r / scale + 1.0; };
  return cert;
}

LyapunovCertificateSpec builtin_certificate(const std::string& model, const Params& params) {
  if (model == "dissipative") return dissipative_certificate();
  if (model == "lemniscate") return lemniscate_certificate();
  if (model == "lorenz") {
    const double theta = params.number("theta", 1.0);
    const FourierSeries alpha(params.list("alpha", {10.0}), theta);
    const FourierSeries mu(params.list("mu", {28.0}), theta);
    return lorenz_certificate(alpha, [alpha](double t) { return alpha.derivative(t); }, mu,
                              [mu](double t) { return mu.derivative(t); });
  }
  throw InvalidArgument("no Lyapunov certificate is available for model '" + model +
                        "' (available: dissipative, lorenz, lemniscate)");
}

}  // namespace psde
