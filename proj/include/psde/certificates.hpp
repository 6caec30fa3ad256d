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

#include <functional>
#include <string>

#include "psde/generator.hpp"
#include "psde/model.hpp"

namespace psde {

/// V = |x|^2 + 1, W = x / 2, q = 1, U(t, r) = r^2 + 1.
LyapunovCertificateSpec dissipative_certificate();

/// With s(t) = alpha(t) + mu(t):
/// V = x1^2 + x2^2 + (x3 - s)^2 + s^2 + 1, W = (x1, x2, x3 - s) / 2,
/// q = s^2 + 1, U(t, r) = r^2 / 2 + 1.
LyapunovCertificateSpec lorenz_certificate(std::function<double(double)> alpha,
                                           std::function<double(double)> alpha_prime,
                                           std::function<double(double)> mu,
                                           std::function<double(double)> mu_prime);

/// V = V(I(x)) + 2^6, W = x, q = q_const, U(t, r) = r^2 / 2^(9/4) + 1,
/// with analytic gradient and Hessian.
LyapunovCertificateSpec lemniscate_certificate(double q_const = 64.0);

/// Certificate for the builtin of the given name, built from the same model
/// parameters (Fourier lists for lorenz). Throws InvalidArgument for models
/// without a certificate.
LyapunovCertificateSpec builtin_certificate(const std::string& model, const Params& params);

}  // namespace psde
