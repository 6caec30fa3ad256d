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

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "psde/model.hpp"

namespace psde {

/// coeff * T(t) * prod x_i^p_i * prod u_j^q_j, where T is 1, cos(h w t) or
/// sin(h w t) with w = 2 pi / theta.
struct PolyTerm {
  double coeff = 0.0;
  std::array<int, kMaxDim> x_pow{};
  std::array<int, kMaxDim> u_pow{};
  int harmonic = 0;
  bool sine = false;
};

using PolyExpr = std::vector<PolyTerm>;

/// Declarative model: every coefficient entry is a polynomial in (x, u) with
/// Fourier time modulation. See docs/model_format.md.
struct PolynomialModel {
  int m = 1;
  int k = 1;
  int l = 1;
  double theta = 1.0;
  std::vector<PolyExpr> drift;       // m entries
  std::vector<PolyExpr> diffusion;   // m * k entries, row-major
  std::vector<PolyExpr> small_jump;  // m entries or empty
  std::vector<PolyExpr> large_jump;  // m entries or empty

  double eval(const PolyExpr& expr, double t, const Vec& x, const Vec& u) const;
  /// d/dx_i of expr.
  double partial_x(const PolyExpr& expr, int i, double t, const Vec& x, const Vec& u) const;
};

/// Parses a single expression such as "-1 x1 ; 0.5 x2^2 cos1".
PolyExpr parse_poly_expr(const std::string& text, int m, int l, bool allow_u);

/// Parses a description file; errors name the offending line and key.
PolynomialModel parse_polynomial_model(std::istream& in);
PolynomialModel load_polynomial_model(const std::string& path);

ModelSpec to_model_spec(const PolynomialModel& poly, LevyMeasureSpec levy);

}  // namespace psde
