#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkforge/design.hpp"
#include "linkforge/spec.hpp"

namespace linkforge {

struct SimulationError : std::runtime_error {
  double angle;
  int node;
  SimulationError(const std::string& what, double t, int i)
      : std::runtime_error(what + " at angle " + std::to_string(t) + " (node n" +
                           std::to_string(i) + ")"),
        angle(t), node(i) {}
};

// Snapshot of the mechanism at one motor angle.
struct KinematicState {
  double angle = 0.0;
  std::vector<Vec2> positions;    // slot per node, 1-based
  std::vector<double> cross_sign; // cross(d1, d2) at construction, movable nodes
};

inline Vec2 motor_position(const LinkageDesign& design, double t) {
  const double sign = design.topology.clockwise ? 1.0 : -1.0;
  const double a = sign * t + design.motor.phase;
  return {std::sin(a) * design.motor.radius + design.motor.center.x,
          std::cos(a) * design.motor.radius + design.motor.center.y};
}

// Place every node at motor angle t, processing nodes in index order. Each
// movable node sits on the circle-circle intersection of its parents, on the
// branch with cross(parent1 - n, parent2 - n) > 0.
inline KinematicState propagate(const LinkageDesign& design, double t,
                                double min_cross_sin = 1e-9) {
  const Topology& topo = design.topology;
  const int K = topo.node_count;
  KinematicState st;
  st.angle = t;
  st.positions.assign(K + 1, Vec2{});
  st.cross_sign.assign(K + 1, 0.0);
  st.positions[1] = motor_position(design, t);

  for (int i = 2; i <= K; ++i) {
    if (!topo.used[i]) continue;
    if (topo.fixed[i]) {
      st.positions[i] = design.fixed_positions[i];
      continue;
    }
    auto [j1, j2] = topo.parents[i];
    const Vec2 p1 = st.positions[j1], p2 = st.positions[j2];
    const auto [L1, L2] = design.rod_lengths[i];
    const double d = dist(p1, p2);
    if (d > L1 + L2 - 1e-9 || d < std::abs(L1 - L2) + 1e-9)
      throw SimulationError("mechanism glitch", t, i);
    const double a = (L1 * L1 - L2 * L2 + d * d) / (2 * d);
    const double h2 = L1 * L1 - a * a;
    const double h = std::sqrt(std::max(0.0, h2));
    const Vec2 u = (p2 - p1) / d;
    const Vec2 base = p1 + u * a;
    const Vec2 perp{-u.y, u.x};
    // Candidate n = base +- h*perp; pick the positive-cross branch.
    const Vec2 na = base + perp * h, nb = base - perp * h;
    const double ca = cross(p1 - na, p2 - na);
    const Vec2 n = ca > 0 ? na : nb;
    const double c = ca > 0 ? ca : cross(p1 - nb, p2 - nb);
    if (!(c > min_cross_sin * L1 * L2))
      throw SimulationError("singular configuration", t, i);
    st.positions[i] = n;
    st.cross_sign[i] = c;
  }
  return st;
}

// Uniform sweep over one motor revolution, angles 2*pi*d/T for d = 1..T.
inline Trajectory simulate_cycle(const LinkageDesign& design, int T_samples) {
  const int K = design.topology.node_count;
  Trajectory traj(T_samples, K);
  for (int d = 1; d <= T_samples; ++d) {
    KinematicState st = propagate(design, 2 * M_PI * d / T_samples);
    for (int i = 1; i <= K; ++i) traj.at(d, i) = st.positions[i];
  }
  return traj;
}

struct VerifyReport {
  bool simulated = false;          // false when propagate threw
  std::string failure;             // glitch/singularity message, if any
  double max_equidist_residual = 0.0;  // |dist - rod length|, over pairs and steps
  double min_angle = 0.0;              // min CCW parent separation, movable nodes
  double min_rod_length = 0.0;
  double max_containment_violation = 0.0;
  double max_workspace_violation = 0.0;
  bool pass = false;
};

namespace detail {

inline double polygon_violation(const std::vector<Vec2>& poly, const Vec2& p) {
  if (poly.empty()) return 0.0;
  double worst = 0.0;
  const int n = (int)poly.size();
  for (int e = 0; e < n; ++e) {
    const Vec2 a = poly[e], b = poly[(e + 1) % n];
    const Vec2 edge = b - a;
    const double len = norm(edge);
    if (len == 0) continue;
    // CCW polygon: inside means cross(edge, p - a) >= 0.
    worst = std::max(worst, -cross(edge, p - a) / len);
  }
  return worst;
}

inline void score_state(const LinkageDesign& design, const ProblemSpec& spec,
                        const std::vector<Vec2>& pos, VerifyReport& r) {
  const Topology& topo = design.topology;
  const int K = topo.node_count;
  for (int i = 1; i <= K; ++i) {
    if (!topo.used[i]) continue;
    const Vec2 p = pos[i];
    r.max_workspace_violation = std::max({r.max_workspace_violation,
                                          std::abs(p.x) - spec.workspace,
                                          std::abs(p.y) - spec.workspace});
    if (i < K)
      r.max_containment_violation =
          std::max(r.max_containment_violation,
                   polygon_violation(spec.constraints.containment_polygon, p));
    if (i >= 2 && topo.movable(i)) {
      auto [j1, j2] = topo.parents[i];
      const Vec2 d1 = pos[j1] - p, d2 = pos[j2] - p;
      r.min_angle = std::min(r.min_angle, ccw_angle(d1, d2));
      const auto [L1, L2] = design.rod_lengths[i];
      r.max_equidist_residual = std::max({r.max_equidist_residual,
                                          std::abs(norm(d1) - L1),
                                          std::abs(norm(d2) - L2)});
    }
  }
}

inline void finish_report(const LinkageDesign& design, const ProblemSpec& spec,
                          VerifyReport& r) {
  const Topology& topo = design.topology;
  r.min_rod_length = design.motor.radius;
  for (int i = 2; i <= topo.node_count; ++i)
    if (topo.movable(i))
      r.min_rod_length = std::min({r.min_rod_length, design.rod_lengths[i].first,
                                   design.rod_lengths[i].second});
  r.pass = r.simulated && r.min_angle >= spec.min_angle &&
           r.min_rod_length >= spec.min_rod_length &&
           r.max_containment_violation <= 1e-9 &&
           r.max_workspace_violation <= 1e-9;
}

}  // namespace detail

// Simulate at spec.timesteps angles and score the design against the spec
// thresholds. Failures are reported, never thrown.
inline VerifyReport verify_design(const LinkageDesign& design, const ProblemSpec& spec) {
  VerifyReport r;
  r.min_angle = M_PI;
  try {
    for (int d = 1; d <= spec.timesteps; ++d) {
      KinematicState st = propagate(design, 2 * M_PI * d / spec.timesteps);
      detail::score_state(design, spec, st.positions, r);
    }
    r.simulated = true;
  } catch (const SimulationError& e) {
    r.failure = e.what();
  }
  detail::finish_report(design, spec, r);
  return r;
}

// Score an externally produced trajectory (e.g. an unrefined MICP solution)
// instead of re-simulating; the equidistance residual then measures rod-length
// drift across timesteps.
inline VerifyReport verify_trajectory(const LinkageDesign& design,
                                      const Trajectory& traj,
                                      const ProblemSpec& spec) {
  VerifyReport r;
  r.min_angle = M_PI;
  r.simulated = true;
  std::vector<Vec2> pos(design.node_count() + 1);
  for (int d = 1; d <= traj.timesteps; ++d) {
    for (int i = 1; i <= design.node_count(); ++i) pos[i] = traj.at(d, i);
    detail::score_state(design, spec, pos, r);
  }
  detail::finish_report(design, spec, r);
  return r;
}

// Eq-16-style tracking objective. In alignment mode the best value over all
// cyclic shifts and both traversal directions is returned; the annealing
// baseline needs this because its designs carry no phase anchoring.
inline double trajectory_error(const Trajectory& traj, const std::vector<Vec2>& target,
                               double w, int used_count, bool align = false) {
  const int T = traj.timesteps;
  if ((int)target.size() != T)
    throw std::invalid_argument("trajectory_error: length mismatch");
  const int K = traj.nodes;
  auto score = [&](int shift, bool reversed) {
    double e = 0.0;
    for (int d = 1; d <= T; ++d) {
      int src = reversed ? (T - d + 1 + shift - 1) % T + 1 : (d - 1 + shift) % T + 1;
      const Vec2 diff = traj.at(src, K) - target[d - 1];
      e += norm2(diff);
    }
    return e;
  };
  double best = score(0, false);
  if (align) {
    for (int shift = 0; shift < T; ++shift)
      for (bool rev : {false, true})
        best = std::min(best, score(shift, rev));
  }
  return best + w * used_count;
}

}  // namespace linkforge
