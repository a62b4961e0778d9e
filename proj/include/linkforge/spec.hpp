#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "linkforge/geom.hpp"

namespace linkforge {

// Optional user-side restrictions on the synthesized structure.
struct UserConstraints {
  std::optional<Vec2> motor_center;
  std::vector<std::pair<int, Vec2>> fixed_nodes;  // node index (1-based) -> pinned position
  std::vector<Vec2> containment_polygon;          // convex, CCW; applies to all nodes except the end-effector
  bool empty() const {
    return !motor_center && fixed_nodes.empty() && containment_polygon.empty();
  }
};

// Full problem input: target samples plus all scalar parameters.
struct ProblemSpec {
  std::vector<Vec2> target;      // T samples of the desired end-effector curve
  int max_nodes = 5;             // K
  int resolution = 9;            // S, breakpoints per piecewise-linear bound and sector count
  int timesteps = 10;            // T
  double workspace = 1.0;        // B, positions confined to [-B,B]^2
  double min_rod_length = 0.1;   // l_min
  double min_angle = 0.1;        // epsilon, radians
  double rod_weight = 0.01;      // w
  double mip_gap = 1e-6;
  double time_limit_s = 3600.0;
  std::uint64_t seed = 0;
  UserConstraints constraints;
};

inline std::vector<std::string> validate_spec(const ProblemSpec& s) {
  std::vector<std::string> bad;
  const double B = s.workspace;
  if (s.max_nodes < 3) bad.push_back("K must be >= 3");
  if (s.resolution < 3) bad.push_back("S must be >= 3");
  if (s.timesteps < 3) bad.push_back("T must be >= 3");
  if (!(B > 0)) bad.push_back("workspace half-width must be positive");
  if (!(s.min_rod_length > 0 && s.min_rod_length < 2 * B))
    bad.push_back("l_min must lie in (0, 2B)");
  if (s.resolution >= 3 && !(s.min_angle > 0 && s.min_angle < M_PI / s.resolution))
    bad.push_back("epsilon must lie in (0, pi/S)");
  if (s.rod_weight < 0) bad.push_back("rod weight must be nonnegative");
  if ((int)s.target.size() != s.timesteps)
    bad.push_back("target must have exactly T points");
  for (const Vec2& p : s.target)
    if (std::abs(p.x) > B || std::abs(p.y) > B) {
      bad.push_back("target point outside [-B,B]^2");
      break;
    }
  for (const Vec2& p : s.constraints.containment_polygon)
    if (std::abs(p.x) > B || std::abs(p.y) > B) {
      bad.push_back("containment polygon vertex outside [-B,B]^2");
      break;
    }
  for (auto& [i, p] : s.constraints.fixed_nodes)
    if (i < 2 || i > s.max_nodes) {
      bad.push_back("fixed-node constraint index out of range");
      break;
    }
  return bad;
}

// Affine map applied to user input: normalized = user * scale + offset.
struct Normalization {
  double scale = 1.0;
  Vec2 offset{0.0, 0.0};
  Vec2 apply(const Vec2& p) const { return p * scale + offset; }
  Vec2 invert(const Vec2& p) const { return (p - offset) / scale; }
  bool identity() const { return scale == 1.0 && offset.x == 0.0 && offset.y == 0.0; }
};

// Fit target samples into [-0.8B, 0.8B]^2. Inputs already inside that box are
// left untouched so that fixture round-trips stay exact.
inline Normalization fit_normalization(const std::vector<Vec2>& target, double B) {
  Normalization n;
  if (target.empty()) return n;
  double xmin = target[0].x, xmax = xmin, ymin = target[0].y, ymax = ymin;
  for (const Vec2& p : target) {
    xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
  }
  const double box = 0.8 * B;
  if (xmin >= -box && xmax <= box && ymin >= -box && ymax <= box) return n;
  const Vec2 c{(xmin + xmax) / 2, (ymin + ymax) / 2};
  const double half = std::max((xmax - xmin) / 2, (ymax - ymin) / 2);
  n.scale = half > 0 ? box / half : 1.0;
  n.offset = c * -n.scale;
  return n;
}

}  // namespace linkforge
