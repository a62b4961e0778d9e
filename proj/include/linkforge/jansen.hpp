#pragma once

#include "linkforge/design.hpp"

namespace linkforge {

// Canonical 7-node fixture: Theo Jansen's published leg proportions
// (a=38, b=41.5, c=39.3, d=40.1, e=55.8, f=39.4, g=36.7, h=65.7, i=49,
// j=50, k=61.9, l=7.8, m=15), uniformly scaled and shifted so the whole
// cycle stays inside [-0.8, 0.8]^2 for a unit workspace. Parent pairs are
// ordered for the positive-cross construction branch.
inline LinkageDesign jansen_preset() {
  constexpr double s = 0.012;    // uniform scale
  constexpr double ox = 41.0;    // shift applied before scaling
  constexpr double oy = 38.0;
  auto pt = [](double x, double y) { return Vec2{(x + ox) * s, (y + oy) * s}; };

  LinkageDesign d(7);
  Topology& t = d.topology;
  for (int i = 1; i <= 7; ++i) t.used[i] = 1;
  t.fixed[2] = 1;
  t.clockwise = false;

  t.parents[3] = {1, 2}; d.rod_lengths[3] = {50.0 * s, 41.5 * s};
  t.parents[5] = {1, 2}; d.rod_lengths[5] = {61.9 * s, 39.3 * s};
  t.parents[4] = {3, 2}; d.rod_lengths[4] = {55.8 * s, 40.1 * s};
  t.parents[6] = {5, 4}; d.rod_lengths[6] = {36.7 * s, 39.4 * s};
  t.parents[7] = {5, 6}; d.rod_lengths[7] = {49.0 * s, 65.7 * s};

  d.fixed_positions[2] = pt(-38.0, -7.8);
  d.motor.center = pt(0.0, 0.0);
  d.motor.radius = 15.0 * s;
  return d;
}

}  // namespace linkforge
