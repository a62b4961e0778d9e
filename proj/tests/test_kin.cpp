#include <catch2/catch_amalgamated.hpp>

#include "linkforge/jansen.hpp"
#include "linkforge/kin.hpp"

using namespace linkforge;

namespace {

LinkageDesign single_node_rig(Vec2 p1, Vec2 p2, double L1, double L2) {
  // Degenerate 3-node rig: a "motor" of radius L so that node 1 sits at p1 at
  // t = 0, a fixed node at p2, and one movable node hung off both.
  LinkageDesign d(3);
  Topology& t = d.topology;
  t.used[1] = t.used[2] = t.used[3] = 1;
  t.fixed[2] = 1;
  t.parents[3] = {1, 2};
  d.rod_lengths[3] = {L1, L2};
  d.fixed_positions[2] = p2;
  d.motor.center = {p1.x, p1.y - 1.0};
  d.motor.radius = 1.0;
  return d;
}

}  // namespace

TEST_CASE("motor position follows the circular curve") {
  LinkageDesign d(3);
  d.motor.center = {0.25, -0.5};
  d.motor.radius = 0.3;
  CHECK(dist(motor_position(d, 0), {0.25, -0.2}) < 1e-15);
  CHECK(dist(motor_position(d, M_PI / 2), {0.25 - 0.3, -0.5}) < 1e-15);
  d.topology.clockwise = true;
  CHECK(dist(motor_position(d, 0), {0.25, -0.2}) < 1e-15);
  CHECK(dist(motor_position(d, M_PI / 2), {0.55, -0.5}) < 1e-15);
  CHECK(dist(motor_position(d, 0), motor_position(d, 2 * M_PI)) < 1e-12);
}

TEST_CASE("propagate picks the positive-cross intersection") {
  LinkageDesign d = single_node_rig({0, 0}, {1, 0}, 1.0, 1.0);
  KinematicState st = propagate(d, 0);
  CHECK(dist(st.positions[3], {0.5, std::sqrt(3.0) / 2}) < 1e-12);
  CHECK(st.cross_sign[3] > 0);
}

TEST_CASE("disjoint parent circles glitch") {
  LinkageDesign d = single_node_rig({0, 0}, {3, 0}, 1.0, 1.0);
  CHECK_THROWS_AS(propagate(d, 0), SimulationError);
}

TEST_CASE("nested parent circles glitch") {
  LinkageDesign d = single_node_rig({0, 0}, {0.1, 0}, 1.0, 0.2);
  CHECK_THROWS_AS(propagate(d, 0), SimulationError);
}

TEST_CASE("jansen rod residuals are tiny") {
  LinkageDesign d = jansen_preset();
  for (double t : {0.0, 0.7, 2.1, 5.5}) {
    KinematicState st = propagate(d, t);
    for (int i = 3; i <= 7; ++i) {
      auto [j1, j2] = d.topology.parents[i];
      auto [L1, L2] = d.rod_lengths[i];
      CHECK(std::abs(dist(st.positions[i], st.positions[j1]) - L1) < 1e-12);
      CHECK(std::abs(dist(st.positions[i], st.positions[j2]) - L2) < 1e-12);
      CHECK(st.cross_sign[i] > 0);
    }
  }
}

TEST_CASE("simulate_cycle drift and periodicity") {
  LinkageDesign d = jansen_preset();
  Trajectory traj = simulate_cycle(d, 64);
  double drift = 0;
  for (int dd = 1; dd <= 64; ++dd)
    for (int i = 3; i <= 7; ++i) {
      if (!d.topology.movable(i)) continue;
      auto [j1, j2] = d.topology.parents[i];
      auto [L1, L2] = d.rod_lengths[i];
      drift = std::max(drift, std::abs(dist(traj.at(dd, i), traj.at(dd, j1)) - L1));
      drift = std::max(drift, std::abs(dist(traj.at(dd, i), traj.at(dd, j2)) - L2));
    }
  CHECK(drift <= 1e-9);
  for (int dd = 1; dd <= 8; ++dd) {
    KinematicState a = propagate(d, 2 * M_PI * dd / 64);
    KinematicState b = propagate(d, 2 * M_PI * dd / 64 + 2 * M_PI);
    for (int i = 1; i <= 7; ++i) CHECK(dist(a.positions[i], b.positions[i]) < 1e-9);
  }
}

TEST_CASE("verify_design catches threshold violations") {
  ProblemSpec spec;
  spec.max_nodes = 7;
  spec.timesteps = 32;
  spec.target.assign(32, Vec2{0, 0});

  LinkageDesign good = jansen_preset();
  CHECK(verify_design(good, spec).pass);

  LinkageDesign short_rod = jansen_preset();
  short_rod.motor.radius = spec.min_rod_length * 0.9;
  VerifyReport r = verify_design(short_rod, spec);
  CHECK_FALSE(r.pass);
  CHECK(r.min_rod_length < spec.min_rod_length);
}

TEST_CASE("colinear double rod flagged as angular failure") {
  // Parents 1 unit apart, rods 0.5/1.5: the node lands on the segment line.
  LinkageDesign d = single_node_rig({0, 0}, {1, 0}, 1.5001, 0.5001);
  ProblemSpec spec;
  spec.max_nodes = 3;
  spec.timesteps = 3;
  spec.target.assign(3, Vec2{0, 0});
  VerifyReport r = verify_design(d, spec);
  CHECK_FALSE(r.pass);
}

TEST_CASE("trajectory_error basics") {
  Trajectory traj(4, 2);
  std::vector<Vec2> target = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int d = 1; d <= 4; ++d) traj.at(d, 2) = target[d - 1];
  CHECK(trajectory_error(traj, target, 0.0, 2) == 0.0);
  CHECK(trajectory_error(traj, target, 0.5, 2) == 1.0);

  traj.at(3, 2) = {1.1, 1.0};
  CHECK(std::abs(trajectory_error(traj, target, 0.0, 2) - 0.01) < 1e-15);

  // alignment mode: rotating the target by one index costs nothing
  Trajectory shifted(4, 2);
  for (int d = 1; d <= 4; ++d) shifted.at(d, 2) = target[d % 4];
  CHECK(trajectory_error(shifted, target, 0.0, 2, true) < 1e-15);
  CHECK(trajectory_error(shifted, target, 0.0, 2) > 0.5);

  Trajectory bad(3, 2);
  CHECK_THROWS(trajectory_error(bad, target, 0.0, 2));
}
