#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "linkforge/lp.hpp"
#include "linkforge/micp/model.hpp"

namespace linkforge::relax {

// Branching restrictions layered over the model: tightened variable bounds
// plus SOS members forced to zero (kept separate so the driver can reason
// about which sets are restricted).
struct BranchState {
  std::vector<std::pair<int, double>> lower;  // var -> raised lower bound
  std::vector<std::pair<int, double>> upper;  // var -> lowered upper bound
  std::vector<std::pair<int, int>> sos_zero;  // (sos set, member position) -> 0
};

enum class RelaxStatus { Optimal, Infeasible, BoundLimit };

struct RelaxResult {
  RelaxStatus status = RelaxStatus::BoundLimit;
  double bound = -std::numeric_limits<double>::infinity();
  std::vector<double> x;           // model variables at the LP optimum
  double max_quad_violation = 0.0;
  std::vector<uint8_t> warm;       // LP column statuses for reuse
  int pool_rows = 0;               // pool size the warm vector was captured at
  int cut_rounds = 0;
  int lp_iterations = 0;
};

// Globally valid linearizations accumulated across the tree. Rows are over
// model variables plus the epigraph variable at index model.num_vars().
struct CutPool {
  std::vector<micp::LinRow> rows;
};

// Gradient cut of f(x) = ||Ax+b||^2 - c.x - e at a violating point:
// grad.x <= grad.x0 - f(x0). Valid for every feasible point by convexity.
inline micp::LinRow add_supporting_cut(const micp::QuadCon& q,
                                       const std::vector<double>& x0) {
  std::vector<double> grad(x0.size(), 0.0);
  for (const micp::AffineRow& r : q.terms) {
    const double v = micp::eval_affine(r, x0);
    for (auto& [j, c] : r.coefs) grad[j] += 2 * v * c;
  }
  for (auto& [j, c] : q.rhs_lin) grad[j] -= c;
  const double f0 = micp::eval_quad_violation(q, x0);
  micp::LinRow cut;
  double rhs = -f0;
  for (size_t j = 0; j < grad.size(); ++j)
    if (grad[j] != 0.0) {
      cut.coefs.push_back({(int)j, grad[j]});
      rhs += grad[j] * x0[j];
    }
  cut.rel = micp::Rel::LE;
  cut.rhs = rhs;
  return cut;
}

// Epigraph cut z >= q(x0) + grad q(x0) . (x - x0), written as a LE row.
inline micp::LinRow objective_cut(const micp::QuadObjective& obj,
                                  const std::vector<double>& x0, int z_index) {
  const std::vector<double> g = micp::objective_gradient(obj, x0);
  const double q0 = micp::eval_objective(obj, x0);
  micp::LinRow cut;
  double rhs = -q0;
  for (size_t j = 0; j < g.size(); ++j)
    if (g[j] != 0.0) {
      cut.coefs.push_back({(int)j, g[j]});
      rhs += g[j] * x0[j];
    }
  cut.coefs.push_back({z_index, -1.0});
  cut.rel = micp::Rel::LE;
  cut.rhs = rhs;
  return cut;
}

namespace detail {

// crude interval range of the objective over the variable box; the epigraph
// variable needs a valid lower bound or the relaxation bound is wrong
inline std::pair<double, double> objective_range(const micp::MicpModel& m) {
  double lo = m.objective.constant, hi = m.objective.constant;
  auto span = [&](int j) { return std::pair{m.variables[j].lb, m.variables[j].ub}; };
  for (auto& [j, c] : m.objective.lin) {
    auto [l, u] = span(j);
    lo += std::min(c * l, c * u);
    hi += std::max(c * l, c * u);
  }
  for (auto& [i, j, c] : m.objective.quad) {
    auto [li, ui] = span(i);
    auto [lj, uj] = span(j);
    double worst = c * li * lj, best = worst;
    for (double a : {li, ui})
      for (double b : {lj, uj}) {
        worst = std::min(worst, c * a * b);
        best = std::max(best, c * a * b);
      }
    if (i == j && li < 0 && ui > 0) {
      worst = std::min(worst, 0.0);
      best = std::max(best, 0.0);
    }
    lo += worst;
    hi += best;
  }
  return {lo, hi};
}

// A purely diagonal convex objective (every quad term c x_j^2, c > 0) gets
// one epigraph variable per squared term; one-dimensional cuts converge like
// Newton's method instead of the slow multi-dimensional Kelley process.
inline bool diagonal_objective(const micp::QuadObjective& o) {
  for (auto& [i, j, c] : o.quad)
    if (i != j || c <= 0) return false;
  return true;
}

}  // namespace detail

// Kelley loop: LP over linear rows + accumulated cuts, adding supporting
// hyperplanes at the LP optimum until every quadratic is within tol. Each
// round's LP optimum is already a valid lower bound for the branch, so a cap
// hit still returns a usable bound. New cuts are appended to the shared pool.
inline RelaxResult solve_relaxation(const micp::MicpModel& model,
                                    const BranchState& branch, CutPool& pool,
                                    double tol = 1e-7, int max_rounds = 200,
                                    const RelaxResult* hint = nullptr) {
  const int n = model.num_vars();
  const bool diag = detail::diagonal_objective(model.objective);

  lp::LpProblem p;
  for (const micp::Variable& v : model.variables) p.add_var(v.lb, v.ub, 0.0);
  for (auto& [j, b] : branch.lower) p.lb[j] = std::max(p.lb[j], b);
  for (auto& [j, b] : branch.upper) p.ub[j] = std::min(p.ub[j], b);
  for (auto& [s, pos] : branch.sos_zero) {
    const int j = model.sos[s].vars[pos];
    p.lb[j] = std::max(p.lb[j], 0.0);
    p.ub[j] = std::min(p.ub[j], 0.0);
  }
  // epigraph variables; cut rows in the shared pool address these indices, so
  // the layout must be identical for every call on the same model
  double obj_const = 0.0;
  std::vector<int> epi;  // per objective quad term when diagonal, else one
  if (diag) {
    obj_const = model.objective.constant;
    for (auto& [j, c] : model.objective.lin) p.obj[j] += c;
    for (auto& [i, j, c] : model.objective.quad) {
      const double m2 = std::max(p.lb[i] * p.lb[i], p.ub[i] * p.ub[i]);
      epi.push_back(p.add_var(0.0, c * m2 + 1.0, 1.0));
    }
  } else {
    const auto [obj_lo, obj_hi] = detail::objective_range(model);
    epi.push_back(p.add_var(obj_lo - 1.0, obj_hi + 1.0, 1.0));
  }
  p.rows = model.linear;
  const int base_rows = (int)p.rows.size();
  for (const micp::LinRow& r : pool.rows) p.rows.push_back(r);

  RelaxResult res;
  std::vector<uint8_t> warm;
  bool have_warm = false;
  if (hint && !hint->warm.empty()) {
    // statuses cover vars + z + model slacks + pool slacks at capture time;
    // newer pool rows enter with their slack basic
    warm = hint->warm;
    const int expect = n + (int)epi.size() + base_rows + hint->pool_rows;
    if ((int)warm.size() == expect && hint->pool_rows <= (int)pool.rows.size()) {
      warm.resize(n + epi.size() + p.rows.size(), lp::kBasic);
      have_warm = true;
    }
  }

  lp::SimplexSolver solver(p);
  std::vector<micp::LinRow> fresh;
  for (int round = 0; round < max_rounds; ++round) {
    res.cut_rounds = round + 1;
    lp::LpResult lpres;
    if (round == 0) {
      lpres = solver.solve(have_warm ? &warm : nullptr);
    } else {
      solver.add_rows(fresh);
      lpres = solver.resolve();
    }
    fresh.clear();
    res.lp_iterations += lpres.iterations;
    if (lpres.status == lp::LpStatus::Infeasible) {
      res.status = RelaxStatus::Infeasible;
      res.bound = std::numeric_limits<double>::infinity();
      return res;
    }
    if (lpres.status != lp::LpStatus::Optimal) {
      res.status = RelaxStatus::BoundLimit;  // keep the last proven bound
      return res;
    }
    res.bound = lpres.objective + obj_const;
    res.x.assign(lpres.x.begin(), lpres.x.begin() + n);
#ifdef LF_RELAX_PARANOID
    for (int j = 0; j < n; ++j)
      if (lpres.x[j] < p.lb[j] - 1e-6 || lpres.x[j] > p.ub[j] + 1e-6) {
        std::fprintf(stderr,
                     "PARANOID: var %d x %.9g outside [%.9g, %.9g] round %d warm %d\n",
                     j, lpres.x[j], p.lb[j], p.ub[j], round, (int)have_warm);
        std::abort();
      }
#endif
    res.warm = lpres.col_status;
    res.pool_rows = (int)pool.rows.size();

    double worst = 0.0;
    for (const micp::QuadCon& q : model.quads) {
      const double v = micp::eval_quad_violation(q, res.x);
      worst = std::max(worst, v);
      if (v > tol) {
        micp::LinRow cut = add_supporting_cut(q, res.x);
        pool.rows.push_back(cut);
        fresh.push_back(std::move(cut));
      }
    }
    res.max_quad_violation = worst;
    if (diag) {
      for (size_t t = 0; t < epi.size(); ++t) {
        const int j = std::get<1>(model.objective.quad[t]);
        const double c = std::get<2>(model.objective.quad[t]);
        const double x0 = res.x[j];
        if (c * x0 * x0 - lpres.x[epi[t]] > tol) {
          // z_t >= c x0^2 + 2 c x0 (x_j - x0)
          micp::LinRow cut{{{j, 2 * c * x0}, {epi[t], -1.0}}, micp::Rel::LE,
                           c * x0 * x0};
          pool.rows.push_back(cut);
          fresh.push_back(std::move(cut));
        }
      }
    } else {
      const double gap =
          micp::eval_objective(model.objective, res.x) - lpres.x[epi[0]];
      if (gap > tol) {
        micp::LinRow cut = objective_cut(model.objective, res.x, epi[0]);
        pool.rows.push_back(cut);
        fresh.push_back(std::move(cut));
      }
    }
    if (fresh.empty()) {
      res.status = RelaxStatus::Optimal;
      return res;
    }
  }
  res.status = RelaxStatus::BoundLimit;
  return res;
}

}  // namespace linkforge::relax
