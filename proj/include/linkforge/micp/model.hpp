#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace linkforge::micp {

enum class Rel { LE, EQ, GE };

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;
  bool binary = false;
};

// Sparse coefficient row, pairs of (variable index, coefficient).
using LinTerm = std::vector<std::pair<int, double>>;

struct LinRow {
  LinTerm coefs;
  Rel rel = Rel::LE;
  double rhs = 0.0;
};

struct SosSet {
  int type = 1;  // 1 or 2
  std::vector<int> vars;
};

struct AffineRow {
  LinTerm coefs;
  double constant = 0.0;
};

// Convex constraint ||A x + b||^2 <= c^T x + e.
struct QuadCon {
  std::vector<AffineRow> terms;  // rows of (A, b)
  LinTerm rhs_lin;               // c
  double rhs_const = 0.0;        // e
};

// Minimize x^T Q x + c^T x + constant; Q stored as (i, j, coef) with i <= j,
// where coef multiplies x_i * x_j (so diagonal entries are the full square
// coefficients).
struct QuadObjective {
  std::vector<std::tuple<int, int, double>> quad;
  LinTerm lin;
  double constant = 0.0;
};

struct MicpModel {
  std::vector<Variable> variables;
  std::vector<LinRow> linear;
  std::vector<SosSet> sos;
  std::vector<QuadCon> quads;
  QuadObjective objective;

  int add_var(std::string name, double lb, double ub, bool binary = false) {
    variables.push_back({std::move(name), lb, ub, binary});
    return (int)variables.size() - 1;
  }
  void fix_var(int v, double value) {
    variables[v].lb = variables[v].ub = value;
  }
  int num_vars() const { return (int)variables.size(); }
};

inline double eval_term(const LinTerm& t, const std::vector<double>& x) {
  double s = 0.0;
  for (auto& [i, c] : t) s += c * x[i];
  return s;
}

inline double eval_affine(const AffineRow& r, const std::vector<double>& x) {
  return eval_term(r.coefs, x) + r.constant;
}

// f(x) = ||A x + b||^2 - c^T x - e; feasible iff f <= 0.
inline double eval_quad_violation(const QuadCon& q, const std::vector<double>& x) {
  double lhs = 0.0;
  for (const AffineRow& r : q.terms) {
    const double v = eval_affine(r, x);
    lhs += v * v;
  }
  return lhs - eval_term(q.rhs_lin, x) - q.rhs_const;
}

inline double eval_objective(const QuadObjective& o, const std::vector<double>& x) {
  double s = o.constant + eval_term(o.lin, x);
  for (auto& [i, j, c] : o.quad) s += c * x[i] * x[j];
  return s;
}

inline std::vector<double> objective_gradient(const QuadObjective& o,
                                              const std::vector<double>& x) {
  std::vector<double> g(x.size(), 0.0);
  for (auto& [i, c] : o.lin) g[i] += c;
  for (auto& [i, j, c] : o.quad) {
    if (i == j) {
      g[i] += 2 * c * x[i];
    } else {
      g[i] += c * x[j];
      g[j] += c * x[i];
    }
  }
  return g;
}

// SOS1: magnitude of the second-largest member. SOS2: smallest over the
// consecutive pairs of the largest magnitude outside that pair.
inline double sos_violation(const SosSet& s, const std::vector<double>& x) {
  std::vector<double> mags;
  mags.reserve(s.vars.size());
  for (int v : s.vars) mags.push_back(std::abs(x[v]));
  if (s.type == 1) {
    double best = 0.0, second = 0.0;
    for (double v : mags) {
      if (v > best) { second = best; best = v; }
      else second = std::max(second, v);
    }
    return second;
  }
  if (mags.size() <= 2) return 0.0;
  double worst = 1e300;
  for (size_t p = 0; p + 1 < mags.size(); ++p) {
    double outside = 0.0;
    for (size_t q = 0; q < mags.size(); ++q)
      if (q != p && q != p + 1) outside = std::max(outside, mags[q]);
    worst = std::min(worst, outside);
  }
  return worst;
}

// Worst violation per constraint class; a pure re-evaluation of the model
// data, independent of any solver bookkeeping.
struct AssignmentCheck {
  double bounds = 0.0;
  double linear = 0.0;
  double sos = 0.0;
  double quad = 0.0;
  double integrality = 0.0;
  double max_all() const {
    return std::max({bounds, linear, sos, quad, integrality});
  }
};

inline AssignmentCheck check_assignment(const MicpModel& m,
                                        const std::vector<double>& x,
                                        double zero_tol = 1e-6) {
  if (x.size() != m.variables.size())
    throw std::invalid_argument("check_assignment: dimension mismatch");
  AssignmentCheck r;
  for (size_t i = 0; i < x.size(); ++i) {
    const Variable& v = m.variables[i];
    r.bounds = std::max({r.bounds, v.lb - x[i], x[i] - v.ub});
    if (v.binary)
      r.integrality = std::max(r.integrality, std::abs(x[i] - std::round(x[i])));
  }
  for (const LinRow& row : m.linear) {
    const double lhs = eval_term(row.coefs, x);
    double viol = 0.0;
    switch (row.rel) {
      case Rel::LE: viol = lhs - row.rhs; break;
      case Rel::GE: viol = row.rhs - lhs; break;
      case Rel::EQ: viol = std::abs(lhs - row.rhs); break;
    }
    r.linear = std::max(r.linear, viol);
  }
  for (const SosSet& s : m.sos) r.sos = std::max(r.sos, sos_violation(s, x));
  for (const QuadCon& q : m.quads)
    r.quad = std::max(r.quad, eval_quad_violation(q, x));
  (void)zero_tol;
  return r;
}

}  // namespace linkforge::micp
