#pragma once

// JSON file formats: the problem input (target curve plus scalar parameters)
// and the design output (structure, geometry, trajectory, solve metadata).
// Parsing is strict: unknown keys are rejected, shapes and ranges checked.
// Serialization uses nlohmann's shortest round-trip doubles so files are
// byte-stable across runs.

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

#include "linkforge/design.hpp"
#include "linkforge/spec.hpp"

namespace linkforge::io {

using json = nlohmann::ordered_json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                           const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const std::string& k : allowed) ok = ok || it.key() == k;
    if (!ok) throw SchemaError(where + ": unknown key '" + it.key() + "'");
  }
}

inline Vec2 as_vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json vec2_json(const Vec2& v) { return json::array({v.x, v.y}); }

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem file

inline ProblemSpec parse_problem(const json& j) {
  detail::reject_unknown(j,
                         {"target", "K", "S", "T", "B", "l_min", "epsilon", "w",
                          "mip_gap", "time_limit_s", "seed", "constraints"},
                         "problem");
  ProblemSpec s;
  if (!j.contains("target") || !j.at("target").is_array())
    throw SchemaError("problem: 'target' must be an array of [x, y] points");
  for (size_t k = 0; k < j.at("target").size(); ++k)
    s.target.push_back(detail::as_vec2(j.at("target")[k],
                                       "problem.target[" + std::to_string(k) + "]"));
  s.max_nodes = detail::get_or(j, "K", s.max_nodes, "problem");
  s.resolution = detail::get_or(j, "S", s.resolution, "problem");
  s.timesteps = j.contains("T") ? detail::get_or(j, "T", 0, "problem")
                                : (int)s.target.size();
  s.workspace = detail::get_or(j, "B", s.workspace, "problem");
  s.min_rod_length = detail::get_or(j, "l_min", s.min_rod_length, "problem");
  s.min_angle = detail::get_or(j, "epsilon", s.min_angle, "problem");
  s.rod_weight = detail::get_or(j, "w", s.rod_weight, "problem");
  s.mip_gap = detail::get_or(j, "mip_gap", s.mip_gap, "problem");
  s.time_limit_s = detail::get_or(j, "time_limit_s", s.time_limit_s, "problem");
  s.seed = detail::get_or(j, "seed", s.seed, "problem");

  if (j.contains("constraints")) {
    const json& c = j.at("constraints");
    detail::reject_unknown(
        c, {"motor_center", "fixed_nodes", "containment_polygon"},
        "problem.constraints");
    if (c.contains("motor_center"))
      s.constraints.motor_center =
          detail::as_vec2(c.at("motor_center"), "problem.constraints.motor_center");
    if (c.contains("fixed_nodes")) {
      if (!c.at("fixed_nodes").is_array())
        throw SchemaError("problem.constraints.fixed_nodes: expected an array");
      for (const json& f : c.at("fixed_nodes")) {
        detail::reject_unknown(f, {"index", "position"},
                               "problem.constraints.fixed_nodes[]");
        if (!f.contains("index") || !f.contains("position"))
          throw SchemaError(
              "problem.constraints.fixed_nodes[]: need 'index' and 'position'");
        s.constraints.fixed_nodes.push_back(
            {f.at("index").get<int>(),
             detail::as_vec2(f.at("position"),
                             "problem.constraints.fixed_nodes[].position")});
      }
    }
    if (c.contains("containment_polygon"))
      for (const json& p : c.at("containment_polygon"))
        s.constraints.containment_polygon.push_back(
            detail::as_vec2(p, "problem.constraints.containment_polygon[]"));
  }
  return s;
}

inline json problem_to_json(const ProblemSpec& s) {
  json j;
  j["target"] = json::array();
  for (const Vec2& p : s.target) j["target"].push_back(detail::vec2_json(p));
  j["K"] = s.max_nodes;
  j["S"] = s.resolution;
  j["T"] = s.timesteps;
  j["B"] = s.workspace;
  j["l_min"] = s.min_rod_length;
  j["epsilon"] = s.min_angle;
  j["w"] = s.rod_weight;
  j["mip_gap"] = s.mip_gap;
  j["time_limit_s"] = s.time_limit_s;
  j["seed"] = s.seed;
  if (!s.constraints.empty()) {
    json c;
    if (s.constraints.motor_center)
      c["motor_center"] = detail::vec2_json(*s.constraints.motor_center);
    if (!s.constraints.fixed_nodes.empty()) {
      c["fixed_nodes"] = json::array();
      for (const auto& [i, p] : s.constraints.fixed_nodes)
        c["fixed_nodes"].push_back(
            {{"index", i}, {"position", detail::vec2_json(p)}});
    }
    if (!s.constraints.containment_polygon.empty()) {
      c["containment_polygon"] = json::array();
      for (const Vec2& p : s.constraints.containment_polygon)
        c["containment_polygon"].push_back(detail::vec2_json(p));
    }
    j["constraints"] = std::move(c);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Design file

struct DesignDoc {
  LinkageDesign design;
  Trajectory trajectory;
  std::string status = "optimal";  // optimal | limit | unsolved
  bool refined = false;
  double objective = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;
  long nodes_explored = 0;
  Normalization normalization;
};

inline json design_to_json(const DesignDoc& doc) {
  const Topology& t = doc.design.topology;
  const int K = t.node_count;
  json j;
  j["nodes"] = json::array();
  for (int i = 1; i <= K; ++i) {
    if (!t.used[i]) continue;
    json n;
    n["index"] = i;
    n["role"] = i == 1 ? "motor"
                : t.fixed[i] ? "fixed"
                : i == K ? "end_effector"
                         : "movable";
    if (t.has_parents(i)) {
      n["parents"] = json::array({t.parents[i].first, t.parents[i].second});
      n["rod_lengths"] = json::array({doc.design.rod_lengths[i].first,
                                      doc.design.rod_lengths[i].second});
    }
    if (t.fixed[i])
      n["position"] = detail::vec2_json(doc.design.fixed_positions[i]);
    j["nodes"].push_back(std::move(n));
  }
  j["motor"] = {{"center", detail::vec2_json(doc.design.motor.center)},
                {"radius", doc.design.motor.radius},
                {"phase", doc.design.motor.phase},
                {"direction", t.clockwise ? "cw" : "ccw"}};
  j["trajectory"] = json::array();
  for (int d = 1; d <= doc.trajectory.timesteps; ++d) {
    json row = json::array();
    for (int i = 1; i <= K; ++i)
      if (t.used[i]) row.push_back(detail::vec2_json(doc.trajectory.at(d, i)));
    j["trajectory"].push_back(std::move(row));
  }
  j["status"] = doc.status;
  j["refined"] = doc.refined;
  j["objective"] = doc.objective;
  j["lower_bound"] = doc.lower_bound;
  j["gap"] = doc.gap;
  j["stats"] = {{"nodes_explored", doc.nodes_explored}};
  j["normalization"] = {{"scale", doc.normalization.scale},
                        {"offset", detail::vec2_json(doc.normalization.offset)}};
  return j;
}

inline DesignDoc parse_design(const json& j) {
  detail::reject_unknown(j,
                         {"nodes", "motor", "trajectory", "status", "refined",
                          "objective", "lower_bound", "gap", "stats",
                          "normalization"},
                         "design");
  if (!j.contains("nodes") || !j.at("nodes").is_array() || j.at("nodes").empty())
    throw SchemaError("design: 'nodes' must be a non-empty array");

  int K = 0;
  for (const json& n : j.at("nodes")) K = std::max(K, n.at("index").get<int>());

  DesignDoc doc;
  doc.design = LinkageDesign(K);
  Topology& t = doc.design.topology;
  std::vector<int> listed;
  for (const json& n : j.at("nodes")) {
    detail::reject_unknown(
        n, {"index", "role", "parents", "rod_lengths", "position"},
        "design.nodes[]");
    const int i = n.at("index").get<int>();
    if (i < 1 || i > K) throw SchemaError("design: node index out of range");
    if (t.used[i]) throw SchemaError("design: duplicate node index");
    t.used[i] = 1;
    listed.push_back(i);
    const std::string role = n.at("role").get<std::string>();
    if (role == "fixed") {
      t.fixed[i] = 1;
      doc.design.fixed_positions[i] =
          detail::as_vec2(n.at("position"), "design.nodes[].position");
    } else if (role == "motor") {
      if (i != 1) throw SchemaError("design: the motor must be node 1");
    } else if (role == "movable" || role == "end_effector") {
      if ((role == "end_effector") != (i == K))
        throw SchemaError("design: the end-effector must be the highest node");
      if (!n.contains("parents") || !n.contains("rod_lengths"))
        throw SchemaError("design: jointed nodes need parents and rod_lengths");
      t.parents[i] = {n.at("parents")[0].get<int>(),
                      n.at("parents")[1].get<int>()};
      doc.design.rod_lengths[i] = {n.at("rod_lengths")[0].get<double>(),
                                   n.at("rod_lengths")[1].get<double>()};
    } else {
      throw SchemaError("design: unknown role '" + role + "'");
    }
  }

  const json& m = j.at("motor");
  detail::reject_unknown(m, {"center", "radius", "phase", "direction"},
                         "design.motor");
  doc.design.motor.center = detail::as_vec2(m.at("center"), "design.motor.center");
  doc.design.motor.radius = m.at("radius").get<double>();
  doc.design.motor.phase = detail::get_or(m, "phase", 0.0, "design.motor");
  const std::string dir = m.at("direction").get<std::string>();
  if (dir != "cw" && dir != "ccw")
    throw SchemaError("design.motor.direction must be 'cw' or 'ccw'");
  t.clockwise = dir == "cw";

  if (j.contains("trajectory")) {
    const json& tr = j.at("trajectory");
    if (!tr.is_array()) throw SchemaError("design.trajectory must be an array");
    doc.trajectory = Trajectory((int)tr.size(), K);
    for (int d = 1; d <= (int)tr.size(); ++d) {
      const json& row = tr[d - 1];
      if (row.size() != listed.size())
        throw SchemaError("design.trajectory row has the wrong node count");
      for (size_t k = 0; k < listed.size(); ++k)
        doc.trajectory.at(d, listed[k]) = detail::as_vec2(
            row[k], "design.trajectory[" + std::to_string(d - 1) + "]");
    }
  }

  doc.status = detail::get_or(j, "status", std::string("optimal"), "design");
  doc.refined = detail::get_or(j, "refined", false, "design");
  doc.objective = detail::get_or(j, "objective", 0.0, "design");
  doc.lower_bound = detail::get_or(j, "lower_bound", 0.0, "design");
  doc.gap = detail::get_or(j, "gap", 0.0, "design");
  if (j.contains("stats")) {
    detail::reject_unknown(j.at("stats"), {"nodes_explored"}, "design.stats");
    doc.nodes_explored =
        detail::get_or(j.at("stats"), "nodes_explored", 0L, "design.stats");
  }
  if (j.contains("normalization")) {
    detail::reject_unknown(j.at("normalization"), {"scale", "offset"},
                           "design.normalization");
    doc.normalization.scale =
        detail::get_or(j.at("normalization"), "scale", 1.0, "design.normalization");
    if (j.at("normalization").contains("offset"))
      doc.normalization.offset = detail::as_vec2(
          j.at("normalization").at("offset"), "design.normalization.offset");
  }
  return doc;
}

}  // namespace linkforge::io
