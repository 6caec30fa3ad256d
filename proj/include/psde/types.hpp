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

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace psde {

/// Largest state, Brownian or mark dimension supported. Vectors and matrices
/// keep their storage inline up to this size so the stepping loops never
/// touch the heap.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxDim, kMaxDim>;

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Something went wrong numerically (non-finite values, singular matrices,
/// quadrature breakdown). Maps to CLI exit status 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Small-jump batch would exceed the configured per-step event budget.
class BudgetExceeded : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// State left the finite range (non-finite or norm above the blow-up bound).
class BlowUpError : public NumericalError {
 public:
  BlowUpError(double t, Vec x, const std::string& what)
      : NumericalError(what), time(t), state(std::move(x)) {}
  double time;
  Vec state;
};

/// sigma sigma^T is singular or too badly conditioned to invert.
class SingularDiffusion : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Formats a vector as "(a, b, c)" for error messages.
std::string format_vec(const Vec& v);

/// Builds a vector from an initializer list; convenient in tests and builtins.
inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double value : values) v(i++) = value;
  return v;
}

}  // namespace psde
