#pragma once

// Local continuous polish of a synthesized mechanism. The discrete structure
// (topology and motor direction) is frozen; the decision vector holds every
// used node's position at every timestep plus the motor center. An augmented-
// Lagrangian outer loop with Gauss-Newton inner steps drives the coupling
// residuals (constant rod lengths across the cycle, rigid motor-crank
// rotation, stationary anchors) to machine feasibility while minimizing the
// tracking error of the end-effector against the target curve.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "linkforge/design.hpp"
#include "linkforge/kin.hpp"
#include "linkforge/spec.hpp"

namespace linkforge::refine {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Continuous NLP with the discrete structure frozen. Variable layout:
// x = [p_i^d for d = 1..T, i over used nodes in index order] ++ [center],
// two entries (x, y) per position.
struct RefineProblem {
  Topology topology;           // frozen, including the direction flag
  ProblemSpec spec;
  std::vector<int> nodes;      // used node indices, ascending
  std::vector<int> slot;       // node index -> dense slot, -1 when unused

  int T() const { return spec.timesteps; }
  int num_vars() const { return 2 * (int)nodes.size() * T() + 2; }
  // First of the two coordinates of node i at timestep d (both 1-based).
  int pos_index(int i, int d) const {
    return 2 * ((d - 1) * (int)nodes.size() + slot[i]);
  }
  int center_index() const { return 2 * (int)nodes.size() * T(); }

  Vec2 pos(const Eigen::VectorXd& x, int i, int d) const {
    const int k = pos_index(i, d);
    return {x[k], x[k + 1]};
  }
  Vec2 center(const Eigen::VectorXd& x) const {
    return {x[center_index()], x[center_index() + 1]};
  }
};

inline RefineProblem make_refine_problem(const LinkageDesign& design,
                                         const ProblemSpec& spec) {
  RefineProblem p;
  p.topology = design.topology;
  p.spec = spec;
  p.slot.assign(p.topology.node_count + 1, -1);
  for (int i = 1; i <= p.topology.node_count; ++i)
    if (p.topology.used[i]) {
      p.slot[i] = (int)p.nodes.size();
      p.nodes.push_back(i);
    }
  return p;
}

// Stack trajectory positions and the motor center into a decision vector.
inline Eigen::VectorXd initial_point(const RefineProblem& p,
                                     const LinkageDesign& design,
                                     const Trajectory& traj) {
  if (traj.timesteps != p.T() || traj.nodes != p.topology.node_count)
    throw std::invalid_argument("refine: trajectory shape mismatch");
  Eigen::VectorXd x(p.num_vars());
  for (int d = 1; d <= p.T(); ++d)
    for (int i : p.nodes) {
      const Vec2 q = traj.at(d, i);
      x[p.pos_index(i, d)] = q.x;
      x[p.pos_index(i, d) + 1] = q.y;
    }
  x[p.center_index()] = design.motor.center.x;
  x[p.center_index() + 1] = design.motor.center.y;
  return x;
}

// Equality system. Residual blocks, in order:
//  - per movable node, per parent rod, per timestep d (cyclic):
//      |p_i^d - p_j^d|^2 - |p_i^{d+1} - p_j^{d+1}|^2   (rod length constant)
//  - per timestep d (cyclic), 2 rows:
//      (p_1^{d+1} - c) - R * (p_1^d - c)               (rigid crank rotation,
//    R the one-step rotation in the frozen motor direction)
//  - per fixed node, per timestep d = 1..T-1, 2 rows:
//      p_i^{d+1} - p_i^d                               (anchor immobility)
inline void residuals_and_jacobian(const RefineProblem& p,
                                   const Eigen::VectorXd& x,
                                   Eigen::VectorXd* residual, SpMat* jacobian) {
  const int T = p.T();
  const int K = p.topology.node_count;
  int rows = 0;
  for (int i = 2; i <= K; ++i)
    if (p.topology.movable(i)) rows += 2 * T;
  rows += 2 * T;
  for (int i = 2; i <= K; ++i)
    if (p.topology.used[i] && p.topology.fixed[i]) rows += 2 * (T - 1);

  Eigen::VectorXd r(rows);
  std::vector<Triplet> trip;
  trip.reserve((size_t)rows * 8);
  int row = 0;

  auto add = [&](int rr, int col, double v) { trip.emplace_back(rr, col, v); };
  auto add_vec = [&](int rr, int col, const Vec2& v) {
    add(rr, col, v.x);
    add(rr, col + 1, v.y);
  };

  for (int i = 2; i <= K; ++i) {
    if (!p.topology.movable(i)) continue;
    for (int j : {p.topology.parents[i].first, p.topology.parents[i].second}) {
      for (int d = 1; d <= T; ++d) {
        const int dn = d % T + 1;
        const Vec2 a = p.pos(x, i, d) - p.pos(x, j, d);
        const Vec2 b = p.pos(x, i, dn) - p.pos(x, j, dn);
        r[row] = norm2(a) - norm2(b);
        add_vec(row, p.pos_index(i, d), a * 2.0);
        add_vec(row, p.pos_index(j, d), a * -2.0);
        add_vec(row, p.pos_index(i, dn), b * -2.0);
        add_vec(row, p.pos_index(j, dn), b * 2.0);
        ++row;
      }
    }
  }

  {
    const double delta = 2 * M_PI / T;
    const double s = p.topology.clockwise ? 1.0 : -1.0;
    const double co = std::cos(delta), si = s * std::sin(delta);
    // u' = M u with u = (sin a, cos a) * R advancing by s*delta:
    //   ux' =  co*ux + si*uy,  uy' = -si*ux + co*uy.
    const Vec2 c = p.center(x);
    const int ci = p.center_index();
    for (int d = 1; d <= T; ++d) {
      const int dn = d % T + 1;
      const Vec2 u = p.pos(x, 1, d) - c;
      const Vec2 un = p.pos(x, 1, dn) - c;
      const Vec2 mu{co * u.x + si * u.y, -si * u.x + co * u.y};
      r[row] = un.x - mu.x;
      r[row + 1] = un.y - mu.y;
      add(row, p.pos_index(1, dn), 1.0);
      add_vec(row, p.pos_index(1, d), {-co, -si});
      add_vec(row, ci, {co - 1.0, si});
      add(row + 1, p.pos_index(1, dn) + 1, 1.0);
      add_vec(row + 1, p.pos_index(1, d), {si, -co});
      add_vec(row + 1, ci, {-si, co - 1.0});
      row += 2;
    }
  }

  for (int i = 2; i <= K; ++i) {
    if (!p.topology.used[i] || !p.topology.fixed[i]) continue;
    for (int d = 1; d < T; ++d) {
      const Vec2 a = p.pos(x, i, d), b = p.pos(x, i, d + 1);
      r[row] = b.x - a.x;
      r[row + 1] = b.y - a.y;
      add(row, p.pos_index(i, d + 1), 1.0);
      add(row, p.pos_index(i, d), -1.0);
      add(row + 1, p.pos_index(i, d + 1) + 1, 1.0);
      add(row + 1, p.pos_index(i, d) + 1, -1.0);
      row += 2;
    }
  }
  assert(row == rows);

  if (residual) *residual = std::move(r);
  if (jacobian) {
    jacobian->resize(rows, p.num_vars());
    jacobian->setFromTriplets(trip.begin(), trip.end());
  }
}

// Inequality system, all rows required nonnegative:
//  - per movable node, per parent rod, per timestep: |delta|^2 - l_min^2
//  - per timestep: |p_1^d - c|^2 - l_min^2            (crank radius)
//  - per movable node, per timestep: angle between parent rods - epsilon
//  - per used node except the end-effector, per timestep, per containment
//    polygon edge: signed inside-distance
//  - per used node, per timestep, per coordinate: B - coord and B + coord
inline void inequalities_and_jacobian(const RefineProblem& p,
                                      const Eigen::VectorXd& x,
                                      Eigen::VectorXd* values, SpMat* jacobian) {
  const int T = p.T();
  const int K = p.topology.node_count;
  const double lmin2 = p.spec.min_rod_length * p.spec.min_rod_length;
  const auto& poly = p.spec.constraints.containment_polygon;

  std::vector<double> vals;
  std::vector<Triplet> trip;
  auto add_vec = [&](int rr, int col, const Vec2& v) {
    trip.emplace_back(rr, col, v.x);
    trip.emplace_back(rr, col + 1, v.y);
  };

  for (int i = 2; i <= K; ++i) {
    if (!p.topology.movable(i)) continue;
    for (int j : {p.topology.parents[i].first, p.topology.parents[i].second})
      for (int d = 1; d <= T; ++d) {
        const Vec2 a = p.pos(x, i, d) - p.pos(x, j, d);
        const int rr = (int)vals.size();
        vals.push_back(norm2(a) - lmin2);
        add_vec(rr, p.pos_index(i, d), a * 2.0);
        add_vec(rr, p.pos_index(j, d), a * -2.0);
      }
  }

  for (int d = 1; d <= T; ++d) {
    const Vec2 u = p.pos(x, 1, d) - p.center(x);
    const int rr = (int)vals.size();
    vals.push_back(norm2(u) - lmin2);
    add_vec(rr, p.pos_index(1, d), u * 2.0);
    add_vec(rr, p.center_index(), u * -2.0);
  }

  for (int i = 2; i <= K; ++i) {
    if (!p.topology.movable(i)) continue;
    const auto [j1, j2] = p.topology.parents[i];
    for (int d = 1; d <= T; ++d) {
      const Vec2 pi = p.pos(x, i, d);
      const Vec2 d1 = p.pos(x, j1, d) - pi, d2 = p.pos(x, j2, d) - pi;
      const double c = cross(d1, d2), t = dot(d1, d2);
      const double q = std::max(c * c + t * t, 1e-300);
      const int rr = (int)vals.size();
      vals.push_back(std::atan2(c, t) - p.spec.min_angle);
      const Vec2 g1{(t * d2.y - c * d2.x) / q, (-t * d2.x - c * d2.y) / q};
      const Vec2 g2{(-t * d1.y - c * d1.x) / q, (t * d1.x - c * d1.y) / q};
      add_vec(rr, p.pos_index(j1, d), g1);
      add_vec(rr, p.pos_index(j2, d), g2);
      add_vec(rr, p.pos_index(i, d), (g1 + g2) * -1.0);
    }
  }

  if (!poly.empty()) {
    const int n = (int)poly.size();
    for (int i : p.nodes) {
      if (i == K) continue;  // end-effector exempt from containment
      for (int d = 1; d <= T; ++d) {
        const Vec2 q = p.pos(x, i, d);
        for (int e = 0; e < n; ++e) {
          const Vec2 a = poly[e], edge = poly[(e + 1) % n] - poly[e];
          const double len = norm(edge);
          if (len == 0) continue;
          const int rr = (int)vals.size();
          vals.push_back(cross(edge, q - a) / len);
          add_vec(rr, p.pos_index(i, d), Vec2{-edge.y, edge.x} / len);
        }
      }
    }
  }

  const double B = p.spec.workspace;
  for (int i : p.nodes)
    for (int d = 1; d <= T; ++d)
      for (int c = 0; c < 2; ++c) {
        const int col = p.pos_index(i, d) + c;
        vals.push_back(B - x[col]);
        trip.emplace_back((int)vals.size() - 1, col, -1.0);
        vals.push_back(B + x[col]);
        trip.emplace_back((int)vals.size() - 1, col, 1.0);
      }

  if (values) *values = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
  if (jacobian) {
    jacobian->resize((int)vals.size(), p.num_vars());
    jacobian->setFromTriplets(trip.begin(), trip.end());
  }
}

// Tracking rows: end-effector position minus target, two rows per timestep.
inline void objective_residuals(const RefineProblem& p, const Eigen::VectorXd& x,
                                Eigen::VectorXd* residual, SpMat* jacobian) {
  const int T = p.T();
  const int K = p.topology.node_count;
  Eigen::VectorXd r(2 * T);
  std::vector<Triplet> trip;
  for (int d = 1; d <= T; ++d) {
    const Vec2 q = p.pos(x, K, d);
    r[2 * (d - 1)] = q.x - p.spec.target[d - 1].x;
    r[2 * (d - 1) + 1] = q.y - p.spec.target[d - 1].y;
    trip.emplace_back(2 * (d - 1), p.pos_index(K, d), 1.0);
    trip.emplace_back(2 * (d - 1) + 1, p.pos_index(K, d) + 1, 1.0);
  }
  if (residual) *residual = std::move(r);
  if (jacobian) {
    jacobian->resize(2 * T, p.num_vars());
    jacobian->setFromTriplets(trip.begin(), trip.end());
  }
}

struct RefineParams {
  int max_outer = 50;
  int max_inner = 200;           // Gauss-Newton steps per outer round
  double initial_penalty = 100.0;
  double penalty_growth = 10.0;
  double penalty_cap = 1e8;
  double eq_tol = 1e-8;          // equality residual infinity-norm
  double ineq_tol = 1e-9;        // inequality violation
  double grad_tol = 1e-6;        // first-order stationarity
  // Optional (outer round, merit) trace; merit is non-increasing within a round.
  std::vector<std::pair<int, double>>* merit_trace = nullptr;
};

struct RefineReport {
  bool converged = false;
  double objective_before = 0.0, objective_after = 0.0;  // tracking + node cost
  double eq_residual_before = 0.0, eq_residual_after = 0.0;
  double ineq_violation_before = 0.0, ineq_violation_after = 0.0;
  double stationarity = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

struct RefineResult {
  LinkageDesign design;
  Trajectory trajectory;
  RefineReport report;
};

namespace detail {

// Scaled residual stack of the augmented Lagrangian at (lambda, nu, mu):
//   [ tracking ; (lambda + mu*h)/sqrt(mu) ; max(0, nu - mu*g)/sqrt(mu) ],
// so that the squared norm is the (twice-scaled) merit function.
struct AlStack {
  Eigen::VectorXd r;
  SpMat J;
  Eigen::VectorXd h;  // equality residuals at x
  Eigen::VectorXd g;  // inequality values at x
};

inline AlStack al_stack(const RefineProblem& p, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& lambda, const Eigen::VectorXd& nu,
                        double mu, bool want_jacobian) {
  AlStack s;
  Eigen::VectorXd r0;
  SpMat J0, Jh, Jg;
  objective_residuals(p, x, &r0, want_jacobian ? &J0 : nullptr);
  residuals_and_jacobian(p, x, &s.h, want_jacobian ? &Jh : nullptr);
  inequalities_and_jacobian(p, x, &s.g, want_jacobian ? &Jg : nullptr);

  const double rt = std::sqrt(mu);
  const int n0 = (int)r0.size(), ne = (int)s.h.size(), ni = (int)s.g.size();
  std::vector<int> active;
  for (int k = 0; k < ni; ++k)
    if (nu[k] - mu * s.g[k] > 0) active.push_back(k);

  s.r.resize(n0 + ne + (int)active.size());
  s.r.head(n0) = r0;
  s.r.segment(n0, ne) = (lambda + mu * s.h) / rt;
  for (int a = 0; a < (int)active.size(); ++a)
    s.r[n0 + ne + a] = (nu[active[a]] - mu * s.g[active[a]]) / rt;

  if (want_jacobian) {
    std::vector<Triplet> trip;
    trip.reserve(J0.nonZeros() + Jh.nonZeros() + Jg.nonZeros());
    for (int k = 0; k < J0.outerSize(); ++k)
      for (SpMat::InnerIterator it(J0, k); it; ++it)
        trip.emplace_back((int)it.row(), (int)it.col(), it.value());
    for (int k = 0; k < Jh.outerSize(); ++k)
      for (SpMat::InnerIterator it(Jh, k); it; ++it)
        trip.emplace_back(n0 + (int)it.row(), (int)it.col(), rt * it.value());
    std::vector<int> arow(ni, -1);
    for (int a = 0; a < (int)active.size(); ++a) arow[active[a]] = n0 + ne + a;
    for (int k = 0; k < Jg.outerSize(); ++k)
      for (SpMat::InnerIterator it(Jg, k); it; ++it)
        if (arow[it.row()] >= 0)
          trip.emplace_back(arow[it.row()], (int)it.col(), -rt * it.value());
    s.J.resize((int)s.r.size(), p.num_vars());
    s.J.setFromTriplets(trip.begin(), trip.end());
  }
  return s;
}

inline double max_ineq_violation(const Eigen::VectorXd& g) {
  double v = 0.0;
  for (int k = 0; k < (int)g.size(); ++k) v = std::max(v, -g[k]);
  return v;
}

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2 * M_PI);
  if (a <= -M_PI) a += 2 * M_PI;
  if (a > M_PI) a -= 2 * M_PI;
  return a;
}

// Rebuild a concrete design from the converged decision vector: rod lengths
// and anchor positions are cycle averages, the crank radius/phase come from
// the center and the first-timestep crank position.
inline LinkageDesign assemble_design(const RefineProblem& p,
                                     const Eigen::VectorXd& x) {
  const int T = p.T();
  const int K = p.topology.node_count;
  LinkageDesign d(K);
  d.topology = p.topology;

  for (int i = 2; i <= K; ++i) {
    if (!p.topology.used[i]) continue;
    if (p.topology.fixed[i]) {
      Vec2 mean{};
      for (int dd = 1; dd <= T; ++dd) mean += p.pos(x, i, dd);
      d.fixed_positions[i] = mean / T;
    } else {
      const auto [j1, j2] = p.topology.parents[i];
      double l1 = 0, l2 = 0;
      for (int dd = 1; dd <= T; ++dd) {
        l1 += dist(p.pos(x, i, dd), p.pos(x, j1, dd));
        l2 += dist(p.pos(x, i, dd), p.pos(x, j2, dd));
      }
      d.rod_lengths[i] = {l1 / T, l2 / T};
    }
  }

  d.motor.center = p.center(x);
  double radius = 0;
  for (int dd = 1; dd <= T; ++dd)
    radius += dist(p.pos(x, 1, dd), d.motor.center);
  d.motor.radius = radius / T;
  const Vec2 u = p.pos(x, 1, 1) - d.motor.center;
  const double sign = p.topology.clockwise ? 1.0 : -1.0;
  // Crank position at timestep 1 sits at angle sign*(2*pi/T) + phase.
  d.motor.phase = wrap_angle(std::atan2(u.x, u.y) - sign * 2 * M_PI / T);
  if (std::abs(d.motor.phase) < 1e-12) d.motor.phase = 0.0;
  return d;
}

inline Trajectory assemble_trajectory(const RefineProblem& p,
                                      const Eigen::VectorXd& x) {
  Trajectory t(p.T(), p.topology.node_count);
  for (int d = 1; d <= p.T(); ++d)
    for (int i : p.nodes) t.at(d, i) = p.pos(x, i, d);
  return t;
}

}  // namespace detail

inline RefineResult refine(const LinkageDesign& design, const Trajectory& traj,
                           const ProblemSpec& spec,
                           const RefineParams& params = {}) {
  const RefineProblem p = make_refine_problem(design, spec);
  const int n = p.num_vars();
  const int used_count = (int)p.nodes.size();
  Eigen::VectorXd x = initial_point(p, design, traj);

  Eigen::VectorXd h0, g0;
  residuals_and_jacobian(p, x, &h0, nullptr);
  inequalities_and_jacobian(p, x, &g0, nullptr);
  const int ne = (int)h0.size(), ni = (int)g0.size();

  RefineReport rep;
  rep.objective_before = trajectory_error(detail::assemble_trajectory(p, x),
                                          spec.target, spec.rod_weight, used_count);
  rep.eq_residual_before = ne ? h0.cwiseAbs().maxCoeff() : 0.0;
  rep.ineq_violation_before = detail::max_ineq_violation(g0);

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(ne);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(ni);
  double mu = params.initial_penalty;
  double prev_feas = std::numeric_limits<double>::infinity();

  // Squared-norm merit of the scaled stack at the current multipliers.
  auto merit_at = [&](const Eigen::VectorXd& xx) {
    return detail::al_stack(p, xx, lambda, nu, mu, false).r.squaredNorm();
  };

  double feas = 0.0;
  for (int outer = 1; outer <= params.max_outer; ++outer) {
    rep.outer_iterations = outer;
    double damp = 1e-10;

    for (int inner = 0; inner < params.max_inner; ++inner) {
      detail::AlStack s = detail::al_stack(p, x, lambda, nu, mu, true);
      const double merit = s.r.squaredNorm();
      const Eigen::VectorXd grad = 2.0 * (s.J.transpose() * s.r);
      if (grad.lpNorm<Eigen::Infinity>() <= 0.1 * params.grad_tol) break;

      ++rep.inner_iterations;
      bool stepped = false;
      while (!stepped && damp < 1e12) {
        SpMat I(n, n);
        I.setIdentity();
        const SpMat A = SpMat(s.J.transpose() * s.J) + damp * I;
        Eigen::SimplicialLDLT<SpMat> chol(A);
        if (chol.info() != Eigen::Success) {
          damp = std::max(damp * 100, 1e-8);
          continue;
        }
        const Eigen::VectorXd delta = chol.solve(-0.5 * grad);
        const double slope = grad.dot(delta);  // descent when negative
        if (!(slope < 0)) {
          damp = std::max(damp * 100, 1e-8);
          continue;
        }
        double alpha = 1.0;
        while (alpha >= 1e-12) {
          const double trial = merit_at(x + alpha * delta);
          if (trial <= merit + 1e-4 * alpha * slope) {
            x += alpha * delta;
            if (params.merit_trace) params.merit_trace->push_back({outer, trial});
            damp = std::max(damp / 10, 1e-10);
            stepped = true;
            break;
          }
          alpha /= 2;
        }
        if (!stepped) damp = std::max(damp * 100, 1e-8);
      }
      if (!stepped) break;  // no descent direction at any damping: stall
    }

    Eigen::VectorXd h, g;
    residuals_and_jacobian(p, x, &h, nullptr);
    inequalities_and_jacobian(p, x, &g, nullptr);
    lambda += mu * h;
    nu = (nu - mu * g).cwiseMax(0.0);
    feas = std::max(ne ? h.cwiseAbs().maxCoeff() : 0.0,
                    detail::max_ineq_violation(g));

    // Stationarity of the augmented Lagrangian at the updated multipliers.
    const detail::AlStack post = detail::al_stack(p, x, lambda, nu, mu, true);
    rep.stationarity = (2.0 * (post.J.transpose() * post.r)).lpNorm<Eigen::Infinity>();

    if (feas <= params.eq_tol && rep.stationarity <= params.grad_tol) {
      rep.converged = true;
      break;
    }
    if (feas > 0.25 * prev_feas)
      mu = std::min(mu * params.penalty_growth, params.penalty_cap);
    prev_feas = feas;
  }

  Eigen::VectorXd hf, gf;
  residuals_and_jacobian(p, x, &hf, nullptr);
  inequalities_and_jacobian(p, x, &gf, nullptr);
  rep.eq_residual_after = ne ? hf.cwiseAbs().maxCoeff() : 0.0;
  rep.ineq_violation_after = detail::max_ineq_violation(gf);
  rep.converged = rep.converged && rep.eq_residual_after <= params.eq_tol &&
                  rep.ineq_violation_after <= params.ineq_tol;

  RefineResult out;
  out.design = detail::assemble_design(p, x);
  out.trajectory = detail::assemble_trajectory(p, x);
  out.report = rep;
  out.report.objective_after = trajectory_error(out.trajectory, spec.target,
                                                spec.rod_weight, used_count);
  assert(out.design.topology == design.topology);
  return out;
}

}  // namespace linkforge::refine
