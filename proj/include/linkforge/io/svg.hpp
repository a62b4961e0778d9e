#pragma once

// Deterministic SVG rendering of a mechanism and its curves: rod segments at
// every sampled frame (faint), the highlighted first frame, anchors, the motor
// circle, the end-effector curve in blue and the target curve in yellow.
// All numbers are printed with a fixed format so identical inputs produce
// byte-identical output.

#include <cstdio>
#include <string>
#include <vector>

#include "linkforge/design.hpp"

namespace linkforge::io {

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);  // normalize -0
  return buf;
}

}  // namespace detail

inline std::string render_svg(const LinkageDesign& design, const Trajectory& traj,
                              const std::vector<Vec2>& target) {
  const Topology& t = design.topology;
  const int K = t.node_count;
  const int T = traj.timesteps;
  auto F = detail::fmt;

  // Bounds over everything drawn, with a margin.
  double xmin = design.motor.center.x - design.motor.radius;
  double xmax = design.motor.center.x + design.motor.radius;
  double ymin = design.motor.center.y - design.motor.radius;
  double ymax = design.motor.center.y + design.motor.radius;
  auto grow = [&](const Vec2& p) {
    xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
  };
  for (int d = 1; d <= T; ++d)
    for (int i = 1; i <= K; ++i)
      if (t.used[i]) grow(traj.at(d, i));
  for (const Vec2& p : target) grow(p);
  const double margin = 0.1 * std::max(xmax - xmin, ymax - ymin) + 1e-6;
  xmin -= margin; xmax += margin; ymin -= margin; ymax += margin;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + F(xmin) + " " +
         F(-ymax) + " " + F(xmax - xmin) + " " + F(ymax - ymin) + "\">\n";
  // Flip y so mathematical coordinates point up.
  svg += "<g transform=\"scale(1,-1)\" stroke-linecap=\"round\">\n";
  const std::string sw = F((xmax - xmin) / 220.0);
  const std::string swf = F((xmax - xmin) / 500.0);

  auto line = [&](const Vec2& a, const Vec2& b, const std::string& cls,
                  const std::string& style) {
    svg += "<line class=\"" + cls + "\" x1=\"" + F(a.x) + "\" y1=\"" + F(a.y) +
           "\" x2=\"" + F(b.x) + "\" y2=\"" + F(b.y) + "\" " + style + "/>\n";
  };

  // Faint rods at every frame, then the first frame highlighted.
  for (int pass = 0; pass < 2; ++pass) {
    const bool faint = pass == 0;
    const std::string style = faint
        ? "stroke=\"#b0b0b0\" stroke-opacity=\"0.25\" stroke-width=\"" + swf + "\""
        : "stroke=\"#303030\" stroke-width=\"" + sw + "\"";
    for (int d = faint ? 1 : 1; d <= (faint ? T : 1); ++d)
      for (int i = 2; i <= K; ++i) {
        if (!t.movable(i)) continue;
        line(traj.at(d, i), traj.at(d, t.parents[i].first), "rod", style);
        line(traj.at(d, i), traj.at(d, t.parents[i].second), "rod", style);
      }
  }

  // Motor circle and crank.
  svg += "<circle class=\"motor\" cx=\"" + F(design.motor.center.x) + "\" cy=\"" +
         F(design.motor.center.y) + "\" r=\"" + F(design.motor.radius) +
         "\" fill=\"none\" stroke=\"#808080\" stroke-dasharray=\"" + sw +
         "\" stroke-width=\"" + swf + "\"/>\n";
  if (T > 0)
    line(design.motor.center, traj.at(1, 1), "crank",
         "stroke=\"#303030\" stroke-width=\"" + sw + "\"");

  // Anchors.
  for (int i = 2; i <= K; ++i)
    if (t.used[i] && t.fixed[i])
      svg += "<circle class=\"anchor\" cx=\"" + F(design.fixed_positions[i].x) +
             "\" cy=\"" + F(design.fixed_positions[i].y) + "\" r=\"" +
             F(1.5 * design.motor.radius / 8 + 1e-9) +
             "\" fill=\"#303030\"/>\n";

  auto path = [&](const std::vector<Vec2>& pts, const std::string& cls,
                  const std::string& color) {
    if (pts.empty()) return;
    std::string d = "M " + F(pts[0].x) + " " + F(pts[0].y);
    for (size_t k = 1; k < pts.size(); ++k)
      d += " L " + F(pts[k].x) + " " + F(pts[k].y);
    d += " Z";
    svg += "<path class=\"" + cls + "\" d=\"" + d + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"" + sw + "\"/>\n";
  };

  std::vector<Vec2> coupler;
  for (int d = 1; d <= T; ++d) coupler.push_back(traj.at(d, K));
  path(target, "target", "#e6b800");   // target curve: yellow
  path(coupler, "coupler", "#1f5fd0"); // end-effector curve: blue

  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace linkforge::io
