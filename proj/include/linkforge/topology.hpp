#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace linkforge {

// Discrete half of a linkage: which nodes exist, which are anchored, and the
// ordered parent pair of every movable node. Node indices are 1-based; node 1
// is the motor, the highest used node is the end-effector. Parent order
// matters: swapping (j1, j2) mirrors the construction triangle.
struct Topology {
  int node_count = 0;                        // K
  std::vector<std::uint8_t> used;            // U_i, size K+1, slot 0 unused
  std::vector<std::uint8_t> fixed;           // F_i
  std::vector<std::pair<int, int>> parents;  // (j1_i, j2_i); (0,0) when none
  bool clockwise = false;                    // motor direction flag D

  explicit Topology(int K = 0)
      : node_count(K), used(K + 1, 0), fixed(K + 1, 0), parents(K + 1, {0, 0}) {}

  bool has_parents(int i) const { return parents[i].first != 0; }
  bool movable(int i) const { return used[i] && !fixed[i]; }

  bool operator==(const Topology& o) const {
    return node_count == o.node_count && used == o.used && fixed == o.fixed &&
           parents == o.parents && clockwise == o.clockwise;
  }
  bool operator<(const Topology& o) const {
    return std::tie(used, fixed, parents) < std::tie(o.used, o.fixed, o.parents);
  }
};

inline std::vector<std::string> validate_topology(const Topology& t, int K) {
  std::vector<std::string> v;
  if (t.node_count != K || (int)t.used.size() != K + 1) {
    v.push_back("topology does not have K entries");
    return v;
  }
  auto node = [](int i) { return "n" + std::to_string(i); };

  if (!t.used[1]) v.push_back("motor node n1 must be used");
  if (!t.used[K]) v.push_back("end-effector node must be used");
  if (t.fixed[1]) v.push_back("motor node n1 must be movable");
  for (int i = 1; i <= K; ++i)
    if (t.fixed[i] && !t.used[i]) v.push_back(node(i) + " fixed but unused");

  // Parent rules: exactly the movable nodes i >= 2 carry an ordered pair of
  // distinct, used, lower-indexed parents.
  for (int i = 1; i <= K; ++i) {
    auto [j1, j2] = t.parents[i];
    const bool wants = i >= 2 && t.used[i] && !t.fixed[i];
    if (!wants) {
      if (j1 != 0 || j2 != 0) v.push_back(node(i) + " must have no parents");
      continue;
    }
    if (j1 == 0 || j2 == 0) { v.push_back(node(i) + " underconnected"); continue; }
    if (j1 == j2) v.push_back(node(i) + " has duplicate parents");
    for (int j : {j1, j2}) {
      if (j < 1 || j >= i) v.push_back(node(i) + " parent index not lower");
      else if (!t.used[j]) v.push_back(node(i) + " parent " + node(j) + " unused");
    }
  }
  if (!v.empty()) return v;

  // Forward reachability: every used node reaches node K along parent edges
  // traversed toward increasing indices.
  {
    std::vector<std::uint8_t> reaches(K + 1, 0);
    reaches[K] = 1;
    for (int i = K - 1; i >= 1; --i) {
      if (!t.used[i]) continue;
      for (int k = i + 1; k <= K; ++k)
        if (t.has_parents(k) && reaches[k] &&
            (t.parents[k].first == i || t.parents[k].second == i)) {
          reaches[i] = 1;
          break;
        }
    }
    for (int i = 1; i <= K; ++i)
      if (t.used[i] && !reaches[i]) v.push_back(node(i) + " cannot reach node K");
  }

  // Reverse reachability: every movable node descends to node 1 along parent
  // edges whose lower endpoint is itself movable.
  {
    std::vector<std::uint8_t> descends(K + 1, 0);
    descends[1] = 1;
    for (int i = 2; i <= K; ++i) {
      if (!t.movable(i)) continue;
      auto [j1, j2] = t.parents[i];
      if ((t.movable(j1) && descends[j1]) || (t.movable(j2) && descends[j2]) ||
          j1 == 1 || j2 == 1)
        descends[i] = 1;
    }
    for (int i = 2; i <= K; ++i)
      if (t.movable(i) && !descends[i])
        v.push_back(node(i) + " has no movable chain to node 1");
  }
  return v;
}

// Exhaustive oracle over all label-distinct topologies (direction flag
// excluded). Deterministic lexicographic order in (used, fixed, parents).
inline std::vector<Topology> enumerate_topologies(int K) {
  if (K > 6) throw std::invalid_argument("enumerate_topologies: K > 6 refused");
  if (K < 3) throw std::invalid_argument("enumerate_topologies: K < 3");
  std::vector<Topology> out;
  Topology t(K);
  t.used[1] = 1;

  // Nodes 2..K each take one of three states; movable nodes additionally take
  // every ordered distinct parent pair. Validation filters the rest.
  auto rec = [&](auto&& self, int i) -> void {
    if (i > K) {
      if (validate_topology(t, K).empty()) out.push_back(t);
      return;
    }
    auto with_state = [&](bool used, bool fixed) {
      t.used[i] = used;
      t.fixed[i] = fixed;
      if (used && !fixed && i >= 2) {
        for (int j1 = 1; j1 < i; ++j1)
          for (int j2 = 1; j2 < i; ++j2) {
            if (j1 == j2) continue;
            t.parents[i] = {j1, j2};
            self(self, i + 1);
          }
        t.parents[i] = {0, 0};
      } else {
        self(self, i + 1);
      }
    };
    if (i < K) with_state(false, false);  // unused sorts first: used=0
    with_state(true, false);
    with_state(true, true);
    t.used[i] = t.fixed[i] = 0;
  };
  rec(rec, 2);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace linkforge
