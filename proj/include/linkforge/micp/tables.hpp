#pragma once

#include <cmath>
#include <vector>

#include "linkforge/geom.hpp"

namespace linkforge::micp {

// Uniform breakpoint grid for the chordal over-estimator of alpha^2 on [-B, B].
struct PwlGrid {
  std::vector<double> breakpoints;  // alpha_1 = -B .. alpha_S = B
  std::vector<double> squares;      // alpha_s^2

  PwlGrid() = default;
  PwlGrid(double B, int S) {
    breakpoints.resize(S);
    squares.resize(S);
    for (int s = 0; s < S; ++s) {
      breakpoints[s] = -B + 2.0 * B * s / (S - 1);
      squares[s] = breakpoints[s] * breakpoints[s];
    }
    breakpoints.front() = -B;
    breakpoints.back() = B;
  }

  int size() const { return (int)breakpoints.size(); }

  // Chord value of alpha^2 at v; equals the tilde variable the SOS2 weights
  // produce when v lies inside segment [s, s+1].
  double chord(double v) const {
    const int S = size();
    int s = 0;
    while (s + 2 < S && breakpoints[s + 1] < v) ++s;
    const double a = breakpoints[s], b = breakpoints[s + 1];
    const double t = (v - a) / (b - a);
    return (1 - t) * squares[s] + t * squares[s + 1];
  }
};

// Double cover of the plane of directions with 2S sectors of width 2*pi/S,
// consecutive sectors offset by pi/S. A direction d1 at angle phi lies in
// sector l iff <d1_lo, d1> >= 0 and <d1_hi, d1> <= 0; the partner vector d2
// is then confined to the wedge [theta_l + 2*pi/S + eps, theta_l + pi], which
// keeps the CCW angle from d1 to d2 inside [eps, pi].
struct SectorTable {
  struct Sector {
    Vec2 d1_lo, d1_hi;  // boundary normals for the d1 membership test
    Vec2 d2_lo, d2_hi;  // eps-rotated / pi-rotated normals bounding d2
  };
  std::vector<Sector> sectors;
  double width = 0.0;

  SectorTable() = default;
  SectorTable(int S, double eps) {
    width = 2 * M_PI / S;
    sectors.resize(2 * S);
    auto normal = [](double theta) { return Vec2{-std::sin(theta), std::cos(theta)}; };
    for (int l = 0; l < 2 * S; ++l) {
      const double theta = l * M_PI / S;
      sectors[l].d1_lo = normal(theta);
      sectors[l].d1_hi = normal(theta + width);
      sectors[l].d2_lo = rotate(sectors[l].d1_hi, eps);   // = normal(theta + width + eps)
      sectors[l].d2_hi = rotate(sectors[l].d1_lo, M_PI);  // = normal(theta + pi)
    }
  }

  int count() const { return (int)sectors.size(); }

  bool contains_d1(int l, const Vec2& d1) const {
    return dot(sectors[l].d1_lo, d1) >= 0 && dot(sectors[l].d1_hi, d1) <= 0;
  }
  bool admits(int l, const Vec2& d1, const Vec2& d2) const {
    return contains_d1(l, d1) && dot(sectors[l].d2_lo, d2) >= 0 &&
           dot(sectors[l].d2_hi, d2) <= 0;
  }
  // First sector admitting the pair, or -1.
  int find_sector(const Vec2& d1, const Vec2& d2) const {
    for (int l = 0; l < count(); ++l)
      if (admits(l, d1, d2)) return l;
    return -1;
  }
};

}  // namespace linkforge::micp
