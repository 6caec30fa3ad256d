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

#include "psde/polynomial_model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

namespace psde {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw InvalidArgument("model file: bad integer '" + text + "' in " + context);
  }
}

PolyTerm parse_term(const std::string& text, int m, int l, bool allow_u) {
  std::istringstream in(text);
  std::string token;
  PolyTerm term;
  if (!(in >> token)) throw InvalidArgument("model file: empty term");
  try {
    std::size_t used = 0;
    term.coeff = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
  } catch (const std::exception&) {
    throw InvalidArgument("model file: term must start with a coefficient, got '" + token + "'");
  }
  while (in >> token) {
    std::string base = token;
    int power = 1;
    if (const auto caret = token.find('^'); caret != std::string::npos) {
      base = token.substr(0, caret);
      power = parse_int(token.substr(caret + 1), token);
      if (power < 0) throw InvalidArgument("model file: negative power in '" + token + "'");
    }
    if (base.rfind("cos", 0) == 0 || base.rfind("sin", 0) == 0) {
      if (term.harmonic != 0) throw InvalidArgument("model file: at most one time factor per term");
      term.sine = base[0] == 's';
      term.harmonic = parse_int(base.substr(3), token);
      if (term.harmonic < 1 || power != 1) {
        throw InvalidArgument("model file: time factor must be cos<k> or sin<k> with k >= 1");
      }
    } else if (base.size() > 1 && base[0] == 'x') {
      const int i = parse_int(base.substr(1), token);
      if (i < 1 || i > m) throw InvalidArgument("model file: state index out of range in '" + token + "'");
      term.x_pow[i - 1] += power;
    } else if (base.size() > 1 && base[0] == 'u') {
      if (!allow_u) throw InvalidArgument("model file: mark factor '" + token + "' outside a jump coefficient");
      const int j = parse_int(base.substr(1), token);
      if (j < 1 || j > l) throw InvalidArgument("model file: mark index out of range in '" + token + "'");
      term.u_pow[j - 1] += power;
    } else {
      throw InvalidArgument("model file: unknown factor '" + token + "'");
    }
  }
  return term;
}

double time_factor(const PolyTerm& term, double omega, double t) {
  if (term.harmonic == 0) return 1.0;
  const double phase = term.harmonic * omega * t;
  return term.sine ? std::sin(phase) : std::cos(phase);
}

double monomial(const std::array<int, kMaxDim>& powers, const Vec& v, int skip = -1) {
  double value = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const int p = powers[static_cast<std::size_t>(i)] - (i == skip ? 1 : 0);
    if (p > 0) value *= std::pow(v(i), p);
  }
  return value;
}

}  // namespace

PolyExpr parse_poly_expr(const std::string& text, int m, int l, bool allow_u) {
  PolyExpr expr;
  std::stringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ';')) {
    piece = trim(piece);
    if (!piece.empty()) expr.push_back(parse_term(piece, m, l, allow_u));
  }
  return expr;
}

double PolynomialModel::eval(const PolyExpr& expr, double t, const Vec& x, const Vec& u) const {
  const double omega = 2.0 * std::numbers::pi / theta;
  double value = 0.0;
  for (const auto& term : expr) {
    value += term.coeff * time_factor(term, omega, t) * monomial(term.x_pow, x) *
             (u.size() ? monomial(term.u_pow, u) : 1.0);
  }
  return value;
}

double PolynomialModel::partial_x(const PolyExpr& expr, int i, double t, const Vec& x,
                                  const Vec& u) const {
  const double omega = 2.0 * std::numbers::pi / theta;
  double value = 0.0;
  for (const auto& term : expr) {
    const int p = term.x_pow[static_cast<std::size_t>(i)];
    if (p == 0) continue;
    value += term.coeff * p * time_factor(term, omega, t) * monomial(term.x_pow, x, i) *
             (u.size() ? monomial(term.u_pow, u) : 1.0);
  }
  return value;
}

PolynomialModel parse_polynomial_model(std::istream& in) {
  std::map<std::string, std::pair<std::string, int>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("model file line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (entries.count(key)) {
      throw InvalidArgument("model file line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    entries[key] = {trim(line.substr(eq + 1)), line_no};
  }

  PolynomialModel poly;
  auto take_int = [&](const std::string& key, int fallback) {
    const auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    const int v = parse_int(it->second.first, key);
    entries.erase(it);
    return v;
  };
  poly.m = take_int("dim", 1);
  poly.k = take_int("brownian_dim", poly.m);
  poly.l = take_int("mark_dim", 1);
  if (const auto it = entries.find("theta"); it != entries.end()) {
    poly.theta = std::stod(it->second.first);
    entries.erase(it);
  }
  if (poly.m < 1 || poly.m > kMaxDim || poly.k < poly.m || poly.k > kMaxDim || poly.l < 1 ||
      poly.l > kMaxDim) {
    throw InvalidArgument("model file: dimensions out of range (need 1 <= dim <= brownian_dim <= 8)");
  }
  poly.drift.assign(static_cast<std::size_t>(poly.m), {});
  poly.diffusion.assign(static_cast<std::size_t>(poly.m * poly.k), {});

  for (const auto& [key, entry] : entries) {
    const auto& [value, where] = entry;
    const std::string context = "model file line " + std::to_string(where) + " ('" + key + "')";
    std::vector<std::string> parts;
    std::stringstream ks(key);
    std::string part;
    while (std::getline(ks, part, '.')) parts.push_back(part);
    auto index = [&](std::size_t pos, int bound) {
      if (pos >= parts.size()) throw InvalidArgument(context + ": missing index");
      const int v = parse_int(parts[pos], context);
      if (v < 1 || v > bound) throw InvalidArgument(context + ": index out of range");
      return static_cast<std::size_t>(v - 1);
    };
    try {
      if (parts[0] == "drift" && parts.size() == 2) {
        poly.drift[index(1, poly.m)] = parse_poly_expr(value, poly.m, poly.l, false);
      } else if (parts[0] == "diffusion" && parts.size() == 3) {
        const auto i = index(1, poly.m), j = index(2, poly.k);
        poly.diffusion[i * static_cast<std::size_t>(poly.k) + j] =
            parse_poly_expr(value, poly.m, poly.l, false);
      } else if ((parts[0] == "small_jump" || parts[0] == "large_jump") && parts.size() == 2) {
        auto& target = parts[0] == "small_jump" ? poly.small_jump : poly.large_jump;
        if (target.empty()) target.assign(static_cast<std::size_t>(poly.m), {});
        target[index(1, poly.m)] = parse_poly_expr(value, poly.m, poly.l, true);
      } else {
        throw InvalidArgument(context + ": unknown key");
      }
    } catch (const InvalidArgument& e) {
      const std::string what = e.what();
      if (what.rfind("model file line", 0) == 0) throw;
      throw InvalidArgument(context + ": " + what);
    }
  }
  return poly;
}

PolynomialModel load_polynomial_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file '" + path + "'");
  return parse_polynomial_model(in);
}

ModelSpec to_model_spec(const PolynomialModel& poly_in, LevyMeasureSpec levy) {
  auto poly = std::make_shared<const PolynomialModel>(poly_in);
  ModelSpec spec;
  spec.name = "custom";
  spec.theta = poly->theta;
  spec.m = poly->m;
  spec.k = poly->k;
  spec.l = poly->l;
  spec.levy = std::move(levy);
  const int m = poly->m, k = poly->k;
  const Vec no_mark;
  spec.drift = [poly, m, no_mark](double t, const Vec& x) -> Vec {
    Vec out(m);
    for (int i = 0; i < m; ++i) out(i) = poly->eval(poly->drift[static_cast<std::size_t>(i)], t, x, no_mark);
    return out;
  };
  spec.drift_jacobian = [poly, m, no_mark](double t, const Vec& x) -> Mat {
    Mat jac(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        jac(i, j) = poly->partial_x(poly->drift[static_cast<std::size_t>(i)], j, t, x, no_mark);
      }
    }
    return jac;
  };
  spec.diffusion = [poly, m, k, no_mark](double t, const Vec& x) -> Mat {
    Mat s(m, k);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) {
        s(i, j) = poly->eval(poly->diffusion[static_cast<std::size_t>(i * k + j)], t, x, no_mark);
      }
    }
    return s;
  };
  spec.diffusion_partial = [poly, m, k, no_mark](double t, const Vec& x, int d) -> Mat {
    Mat s(m, k);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) {
        s(i, j) = poly->partial_x(poly->diffusion[static_cast<std::size_t>(i * k + j)], d, t, x, no_mark);
      }
    }
    return s;
  };
  auto make_jump = [poly, m](const std::vector<PolyExpr>* exprs) -> JumpFn {
    return [poly, m, exprs](double t, const Vec& x, const Vec& u) -> Vec {
      Vec out(m);
      for (int i = 0; i < m; ++i) out(i) = poly->eval((*exprs)[static_cast<std::size_t>(i)], t, x, u);
      return out;
    };
  };
  if (!poly->small_jump.empty()) {
    spec.small_jump = make_jump(&poly->small_jump);
    spec.small_jump_jacobian = [poly, m](double t, const Vec& x, const Vec& u) -> Mat {
      Mat jac(m, m);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          jac(i, j) = poly->partial_x(poly->small_jump[static_cast<std::size_t>(i)], j, t, x, u);
        }
      }
      return jac;
    };
    bool affine = true;
    for (const auto& expr : poly->small_jump) {
      for (const auto& term : expr) {
        int degree = 0;
        for (int p : term.u_pow) degree += p;
        affine = affine && degree <= 1;
      }
    }
    spec.small_jump_affine_in_u = affine;
  }
  if (!poly->large_jump.empty()) spec.large_jump = make_jump(&poly->large_jump);
  return spec;
}

}  // namespace psde
