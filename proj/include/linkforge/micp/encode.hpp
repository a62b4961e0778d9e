#pragma once

#include <stdexcept>
#include <vector>

#include "linkforge/design.hpp"
#include "linkforge/kin.hpp"
#include "linkforge/micp/build.hpp"

namespace linkforge::micp {

// Map a concrete mechanism and its simulated trajectory onto a full variable
// assignment of the MICP. Used as a feasibility fixture: the result satisfies
// every linear/SOS/integrality constraint exactly and every quadratic
// constraint up to the chordal over-estimation slack.
inline std::vector<double> encode_design(const LinkageDesign& design,
                                         const Trajectory& traj,
                                         const ProblemSpec& spec,
                                         const MicpModel& model,
                                         const VariableLayout& L) {
  const Topology& topo = design.topology;
  const int K = L.K, T = L.T;
  if (topo.node_count != K || traj.timesteps != T)
    throw std::invalid_argument("encode_design: size mismatch with layout");
  std::vector<double> x(model.num_vars(), 0.0);

  // parking spot for unused nodes; must sit inside any containment region
  Vec2 park{0, 0};
  const auto& poly = spec.constraints.containment_polygon;
  if (!poly.empty()) {
    for (const Vec2& p : poly) park += p;
    park = park / (double)poly.size();
  }

  for (int i = 1; i <= K; ++i) {
    x[L.U(i)] = topo.used[i] ? 1.0 : 0.0;
    x[L.F(i)] = (topo.used[i] && !topo.fixed[i]) ? 0.0 : 1.0;  // unused => fixed
  }
  x[L.D()] = topo.clockwise ? 1.0 : 0.0;
  x[L.XC()] = design.motor.center.x;
  x[L.YC()] = design.motor.center.y;

  // connectivity selectors
  for (int i = 2; i <= K; ++i) {
    if (topo.movable(i)) {
      auto [j1, j2] = topo.parents[i];
      x[L.C1(j1, i)] = 1.0;
      x[L.C2(j2, i)] = 1.0;
      x[L.C(j1, i)] += 1.0;
      x[L.C(j2, i)] += 1.0;
    } else {
      x[L.C0(1, i)] = x[L.C0(2, i)] = 1.0;
    }
  }

  // forward flow: route each used node's unit flux to the lowest
  // edge-connected higher node; validity guarantees one exists.
  {
    std::vector<double> outflow(K + 1, 0.0);
    for (int i = 1; i < K; ++i) {
      if (!topo.used[i]) continue;
      double flux = 1.0 + outflow[i];
      int dest = -1;
      for (int k = i + 1; k <= K && dest < 0; ++k)
        if (topo.movable(k) &&
            (topo.parents[k].first == i || topo.parents[k].second == i))
          dest = k;
      if (dest < 0) throw std::invalid_argument("encode_design: invalid topology (forward)");
      x[L.Qf(i, dest)] = flux;
      outflow[dest] += flux;
    }
  }
  // reverse flow: each movable node's unit flux descends through a movable
  // parent toward node 1.
  {
    std::vector<double> inflow(K + 1, 0.0);
    for (int i = K; i >= 2; --i) {
      if (!topo.movable(i)) continue;
      double flux = 1.0 + inflow[i];
      auto [j1, j2] = topo.parents[i];
      int dest = (j1 == 1 || topo.movable(j1)) ? j1 : j2;
      if (!(dest == 1 || topo.movable(dest)))
        throw std::invalid_argument("encode_design: invalid topology (reverse)");
      x[L.Rf(dest, i)] = flux;
      inflow[dest] += flux;
    }
  }

  // positions
  for (int i = 1; i <= K; ++i)
    for (int d = 1; d <= T; ++d) {
      const Vec2 p = topo.used[i] ? traj.at(d, i) : park;
      x[L.X(i, d)] = p.x;
      x[L.Y(i, d)] = p.y;
    }

  // relative positions, PWL weights, sector selectors
  const double B = spec.workspace;
  PwlGrid grid(B, L.S);
  SectorTable sectors(L.S, spec.min_angle);
  auto fill_pwl = [&](int var, int lam_base, int tilde) {
    const double v = x[var];
    const int S = grid.size();
    int s = 0;
    while (s + 2 < S && grid.breakpoints[s + 1] < v) ++s;
    const double a = grid.breakpoints[s], b = grid.breakpoints[s + 1];
    const double t = (v - a) / (b - a);
    x[lam_base + s] = 1 - t;
    x[lam_base + s + 1] += t;
    x[tilde] = (1 - t) * grid.squares[s] + t * grid.squares[s + 1];
  };

  for (int d = 1; d <= T; ++d) {
    for (int i = 1; i <= K; ++i) {
      Vec2 d1{0, 0}, d2{0, 0};
      if (i == 1) {
        d1 = d2 = Vec2{x[L.X(1, d)] - x[L.XC()], x[L.Y(1, d)] - x[L.YC()]};
      } else if (topo.movable(i)) {
        auto [j1, j2] = topo.parents[i];
        d1 = Vec2{x[L.X(j1, d)] - x[L.X(i, d)], x[L.Y(j1, d)] - x[L.Y(i, d)]};
        d2 = Vec2{x[L.X(j2, d)] - x[L.X(i, d)], x[L.Y(j2, d)] - x[L.Y(i, d)]};
        if (std::abs(d1.x) > B || std::abs(d1.y) > B || std::abs(d2.x) > B ||
            std::abs(d2.y) > B)
          throw std::invalid_argument("encode_design: rod component exceeds B");
      }
      x[L.DX(1, i, d)] = d1.x;
      x[L.DY(1, i, d)] = d1.y;
      x[L.DX(2, i, d)] = d2.x;
      x[L.DY(2, i, d)] = d2.y;
      for (int k = 1; k <= 2; ++k) {
        fill_pwl(L.DX(k, i, d), L.lam_dx_base[k][i][d], L.TDX(k, i, d));
        fill_pwl(L.DY(k, i, d), L.lam_dy_base[k][i][d], L.TDY(k, i, d));
      }
      if (i >= 2) {
        int l;
        if (topo.movable(i)) {
          l = sectors.find_sector(d1, d2);
          if (l < 0)
            throw std::invalid_argument(
                "encode_design: no sector admits the parent pair (separation "
                "margin too small)");
        } else {
          l = 0;  // exempt via the F_i big-M; any selector works
        }
        x[L.Gamma(l + 1, i, d)] = 1.0;
      }
    }
  }
  return x;
}

inline std::vector<double> encode_design(const LinkageDesign& design,
                                         const ProblemSpec& spec,
                                         const MicpModel& model,
                                         const VariableLayout& layout) {
  return encode_design(design, simulate_cycle(design, spec.timesteps), spec,
                       model, layout);
}

}  // namespace linkforge::micp
