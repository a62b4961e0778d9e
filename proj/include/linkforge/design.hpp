#pragma once

#include <utility>
#include <vector>

#include "linkforge/geom.hpp"
#include "linkforge/topology.hpp"

namespace linkforge {

// Motor crank: node 1 moves on a circle of radius R about (X_C, Y_C). The
// phase offset anchors timestep 1 of a trajectory to a point on the circle;
// presets use phase 0.
struct MotorParams {
  Vec2 center{0.0, 0.0};
  double radius = 0.0;
  double phase = 0.0;
};

// Topology plus the geometry that makes it a concrete mechanism.
struct LinkageDesign {
  Topology topology;
  std::vector<std::pair<double, double>> rod_lengths;  // (L1_i, L2_i), slot per node
  std::vector<Vec2> fixed_positions;                   // valid where topology.fixed
  MotorParams motor;

  explicit LinkageDesign(int K = 0)
      : topology(K), rod_lengths(K + 1, {0.0, 0.0}), fixed_positions(K + 1) {}

  int node_count() const { return topology.node_count; }
};

// Per-timestep positions of all nodes; row d corresponds to motor angle
// 2*pi*d/T, d = 1..T.
struct Trajectory {
  int timesteps = 0;  // T
  int nodes = 0;      // K
  std::vector<Vec2> positions;

  Trajectory() = default;
  Trajectory(int T, int K) : timesteps(T), nodes(K), positions((size_t)T * K) {}

  Vec2& at(int d, int i) { return positions[(size_t)(d - 1) * nodes + (i - 1)]; }
  const Vec2& at(int d, int i) const {
    return positions[(size_t)(d - 1) * nodes + (i - 1)];
  }
};

}  // namespace linkforge
