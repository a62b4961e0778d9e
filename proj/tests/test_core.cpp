#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "linkforge/jansen.hpp"
#include "linkforge/kin.hpp"
#include "linkforge/topology.hpp"

using namespace linkforge;

namespace {

Topology jansen_topology() {
  Topology t(7);
  for (int i = 1; i <= 7; ++i) t.used[i] = 1;
  t.fixed[2] = 1;
  t.parents[3] = {2, 1};
  t.parents[5] = {2, 1};
  t.parents[4] = {3, 2};
  t.parents[6] = {5, 4};
  t.parents[7] = {6, 5};
  return t;
}

// Independent exhaustive search over the raw assignment space, shared with the
// sampled-agreement property below. Nothing here reuses enumerate_topologies.
bool brute_force_valid(const Topology& t) {
  return validate_topology(t, t.node_count).empty();
}

}  // namespace

TEST_CASE("jansen topology validates") {
  CHECK(validate_topology(jansen_topology(), 7).empty());
}

TEST_CASE("duplicate parents and underconnection flagged") {
  Topology t(3);
  t.used[1] = t.used[3] = 1;
  t.parents[3] = {1, 1};
  auto v = validate_topology(t, 3);
  REQUIRE_FALSE(v.empty());
  bool dup = false, under = false;
  for (auto& s : v) {
    if (s.find("duplicate") != std::string::npos) dup = true;
    if (s.find("parent") != std::string::npos || s.find("underconnected") != std::string::npos)
      under = true;
  }
  CHECK(dup);
  CHECK(under);
}

TEST_CASE("dead-end fixed node cannot reach node K") {
  Topology t(4);
  t.used[1] = t.used[2] = t.used[3] = t.used[4] = 1;
  t.fixed[2] = t.fixed[3] = 1;
  t.parents[4] = {1, 2};
  auto v = validate_topology(t, 4);
  REQUIRE_FALSE(v.empty());
  bool found = false;
  for (auto& s : v)
    if (s.find("n3 cannot reach node K") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("enumerate_topologies small counts") {
  CHECK(enumerate_topologies(3).size() == 2);
  CHECK(enumerate_topologies(4).size() == 12);
  CHECK_THROWS(enumerate_topologies(7));
}

TEST_CASE("K=3 with n2 unused admits nothing") {
  for (const Topology& t : enumerate_topologies(3)) CHECK(t.used[2] == 1);
}

TEST_CASE("enumeration is duplicate-free, deterministic, and valid") {
  auto a = enumerate_topologies(5);
  auto b = enumerate_topologies(5);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  std::set<std::tuple<std::vector<std::uint8_t>, std::vector<std::uint8_t>,
                      std::vector<std::pair<int, int>>>> seen;
  for (const Topology& t : a) {
    CHECK(validate_topology(t, 5).empty());
    CHECK(seen.insert({t.used, t.fixed, t.parents}).second);
  }
}

TEST_CASE("sampled agreement with the raw assignment space") {
  const int K = 4;
  auto enumerated = enumerate_topologies(K);
  std::set<std::tuple<std::vector<std::uint8_t>, std::vector<std::uint8_t>,
                      std::vector<std::pair<int, int>>>> listed;
  for (const Topology& t : enumerated) listed.insert({t.used, t.fixed, t.parents});

  std::mt19937 rng(7);
  int hits = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    Topology t(K);
    for (int i = 1; i <= K; ++i) {
      t.used[i] = rng() % 2;
      t.fixed[i] = rng() % 2;
      if (rng() % 2) t.parents[i] = {(int)(rng() % K) , (int)(rng() % K)};
    }
    t.used[1] = 1;  // keep some mass on plausible assignments
    const bool valid = brute_force_valid(t);
    const bool in_list = listed.count({t.used, t.fixed, t.parents}) > 0;
    CHECK(valid == in_list);
    if (valid) ++hits;
  }
  CHECK(hits > 0);
}

TEST_CASE("reverse reachability forces a movable end-effector") {
  for (int K = 3; K <= 5; ++K)
    for (const Topology& t : enumerate_topologies(K)) {
      bool any_other_used = false;
      for (int i = 2; i < K; ++i) any_other_used |= (t.used[i] != 0);
      if (any_other_used || t.used[K]) CHECK(t.fixed[K] == 0);
    }
}

TEST_CASE("jansen preset is a working mechanism") {
  LinkageDesign d = jansen_preset();
  CHECK(validate_topology(d.topology, 7).empty());
  CHECK(d.motor.radius >= 0.1);

  ProblemSpec spec;
  spec.max_nodes = 7;
  spec.timesteps = 64;
  spec.target.assign(64, Vec2{0, 0});
  CHECK(verify_design(d, spec).pass);

  Trajectory traj = simulate_cycle(d, 64);
  // closed coupler curve: a full cycle returns to the start
  KinematicState wrap = propagate(d, 2 * M_PI + 2 * M_PI / 64);
  CHECK(dist(wrap.positions[7], traj.at(1, 7)) < 1e-9);
  for (int dd = 1; dd <= 64; ++dd) {
    int nx = dd % 64 + 1;
    CHECK(dist(traj.at(dd, 7), traj.at(nx, 7)) < 0.5);  // cyclic continuity
    CHECK(traj.at(dd, 2) == traj.at(1, 2));             // fixed rows constant
  }
}
