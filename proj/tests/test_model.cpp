#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "linkforge/jansen.hpp"
#include "linkforge/kin.hpp"
#include "linkforge/micp/build.hpp"
#include "linkforge/micp/encode.hpp"

using namespace linkforge;
using namespace linkforge::micp;

namespace {

ProblemSpec circle_spec(int K, int S, int T) {
  ProblemSpec s;
  s.max_nodes = K;
  s.resolution = S;
  s.timesteps = T;
  for (int d = 1; d <= T; ++d) {
    const double a = 2 * M_PI * d / T;
    s.target.push_back({0.4 * std::cos(a), 0.4 * std::sin(a)});
  }
  return s;
}

ProblemSpec jansen_spec(int S) {
  const LinkageDesign jansen = jansen_preset();
  const int T = 12;
  ProblemSpec s;
  s.max_nodes = 7;
  s.resolution = S;
  s.timesteps = T;
  // the fixture's tightest joint angle is ~0.18 rad; the sector inner
  // approximation only represents angles above roughly eps + pi/S, so the
  // encode test needs a fine resolution and a small separation margin
  s.min_angle = 0.02;
  const Trajectory traj = simulate_cycle(jansen, T);
  for (int d = 1; d <= T; ++d) s.target.push_back(traj.at(d, 7));
  return s;
}

}  // namespace

TEST_CASE("model sizes match the hand-derived closed forms") {
  // vars: 2K + 5P + 2(K-1) + 2KT + 4KT + 2ST(K-1) + 4KT(1+S) + 3, P = K(K-1)/2
  // rows: K + [3P+3(K-1)] + [P+K-1] + [2P+K-1] + [8PT+4T] + 12KT + 2KT
  //       + (K-1)T(8S+1)
  // sos:  2(K-1) + 4KT + (K-1)T;  quads: 5KT + 2(T-1)
  struct Case { int K, S, T, vars, rows, sos, quads; };
  for (const Case c : {Case{3, 3, 4, 340, 511, 60, 66},
                       Case{4, 5, 4, 647, 979, 82, 86}}) {
    auto [model, layout] = build_model(circle_spec(c.K, c.S, c.T));
    CAPTURE(c.K, c.S, c.T);
    CHECK(model.num_vars() == c.vars);
    CHECK((int)model.linear.size() == c.rows);
    CHECK((int)model.sos.size() == c.sos);
    CHECK((int)model.quads.size() == c.quads);
    CHECK(layout.K == c.K);
    // spot checks on the layout
    CHECK(model.variables[layout.U(1)].name == "U_1");
    CHECK(model.variables[layout.U(1)].lb == 1.0);  // motor node forced on
    CHECK(model.variables[layout.F(1)].ub == 0.0);
    CHECK(model.variables[layout.C1(1, 2)].name == "C1_1_2");
    CHECK(model.variables[layout.Gamma(1, 2, 1)].name == "gam_1_2_1");
    CHECK(model.variables[layout.D()].binary);
  }
}

TEST_CASE("squared-length chord over-estimates with the advertised gap") {
  PwlGrid g5(1.0, 5);
  CHECK(g5.chord(0.5) == Catch::Approx(0.25).margin(1e-15));   // breakpoint, exact
  CHECK(g5.chord(0.25) == Catch::Approx(0.125).margin(1e-15)); // midpoint, gap 1/16
  CHECK(g5.chord(0.25) - 0.0625 == Catch::Approx(0.0625).margin(1e-15));
  CHECK(g5.chord(-1.0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(g5.chord(1.0) == Catch::Approx(1.0).margin(1e-15));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int S : {3, 5, 9, 17}) {
    PwlGrid g(1.0, S);
    const double gap = 1.0 / ((S - 1.0) * (S - 1.0));
    for (int n = 0; n < 10000; ++n) {
      const double v = uni(rng);
      const double c = g.chord(v);
      REQUIRE(c >= v * v - 1e-12);
      REQUIRE(c <= v * v + gap + 1e-12);
    }
  }
}

TEST_CASE("sectors are sound and cover the guaranteed wedge") {
  const int S = 9;
  const double eps = 0.1, width = 2 * M_PI / S;
  SectorTable tab(S, eps);
  REQUIRE(tab.count() == 2 * S);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  std::uniform_real_distribution<double> len(0.05, 1.4);
  for (int n = 0; n < 20000; ++n) {
    const double a1 = ang(rng), a2 = ang(rng);
    const Vec2 d1 = rotate({len(rng), 0}, a1), d2 = rotate({len(rng), 0}, a2);
    double phi = ccw_angle(d1, d2);
    if (phi < 0) phi += 2 * M_PI;  // [0, 2pi)
    const int l = tab.find_sector(d1, d2);
    if (l >= 0) {
      // soundness: any admitted pair keeps the CCW angle inside [eps, pi]
      REQUIRE(phi >= eps - 1e-9);
      REQUIRE(phi <= M_PI + 1e-9);
    }
    if (phi >= eps + width + 1e-9 && phi <= M_PI - width - 1e-9)
      REQUIRE(l >= 0);  // coverage: the inner wedge always has a sector
  }
}

TEST_CASE("assignment checker flags each violation class") {
  auto [model, layout] = build_model(circle_spec(3, 3, 4));
  std::vector<double> zero(model.num_vars(), 0.0);
  AssignmentCheck c = check_assignment(model, zero);
  CHECK(c.bounds == Catch::Approx(1.0));  // U_1 is fixed to 1
  CHECK(c.linear >= 1.0);                 // state and sum rows unsatisfied
  CHECK(c.sos == 0.0);
  CHECK(c.integrality == 0.0);

  // SOS metrics on a toy model
  MicpModel m;
  for (int i = 0; i < 4; ++i) m.add_var("v" + std::to_string(i), 0, 1);
  m.sos.push_back({1, {0, 1, 2}});
  CHECK(check_assignment(m, {0.9, 0.2, 0.0, 0.0}).sos == Catch::Approx(0.2));
  CHECK(check_assignment(m, {0.0, 0.7, 0.0, 0.3}).sos == 0.0);
  m.sos[0] = {2, {0, 1, 2, 3}};
  CHECK(check_assignment(m, {0.0, 0.4, 0.6, 0.0}).sos == 0.0);   // consecutive
  CHECK(check_assignment(m, {0.4, 0.0, 0.6, 0.0}).sos == Catch::Approx(0.4));
}

TEST_CASE("encoded mechanism satisfies the full constraint system") {
  for (int S : {40, 64}) {
    const ProblemSpec spec = jansen_spec(S);
    auto [model, layout] = build_model(spec);
    const LinkageDesign jansen = jansen_preset();
    const std::vector<double> x = encode_design(jansen, spec, model, layout);

    AssignmentCheck c = check_assignment(model, x);
    CAPTURE(S);
    CHECK(c.bounds <= 1e-9);
    CHECK(c.linear <= 1e-9);
    CHECK(c.sos <= 1e-12);
    CHECK(c.integrality == 0.0);
    CHECK(c.quad <= 1e-9);  // chord slack only loosens the quadratic rows

    // target equals the simulated coupler curve, so only the rod count remains
    const double obj = eval_objective(model.objective, x);
    CHECK(obj == Catch::Approx(7 * spec.rod_weight).margin(1e-9));
  }
}

TEST_CASE("user constraints are wired into the model") {
  ProblemSpec s = circle_spec(4, 3, 4);
  s.constraints.motor_center = Vec2{0.1, -0.2};
  s.constraints.fixed_nodes = {{2, Vec2{0.3, 0.3}}};
  s.constraints.containment_polygon = {{-0.9, -0.9}, {0.9, -0.9}, {0.9, 0.9}, {-0.9, 0.9}};
  auto [model, layout] = build_model(s);
  CHECK(model.variables[layout.XC()].lb == 0.1);
  CHECK(model.variables[layout.XC()].ub == 0.1);
  CHECK(model.variables[layout.F(2)].lb == 1.0);
  CHECK(model.variables[layout.X(2, 3)].lb == 0.3);
  // 4 edges, 3 constrained nodes, 4 timesteps
  auto [plain, pl] = build_model(circle_spec(4, 3, 4));
  CHECK(model.linear.size() == plain.linear.size() + 4 * 3 * 4);

  SECTION("rejects a concave containment polygon") {
    s.constraints.containment_polygon = {{0, 0}, {1, 0}, {0.1, 0.1}, {0, 1}};
    CHECK_THROWS_AS(build_model(s), std::invalid_argument);
  }
  SECTION("rejects a clockwise polygon") {
    s.constraints.containment_polygon = {{-0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}, {0.5, -0.5}};
    CHECK_THROWS_AS(build_model(s), std::invalid_argument);
  }
}

TEST_CASE("degenerate specs are rejected with messages") {
  ProblemSpec s = circle_spec(4, 3, 4);
  s.timesteps = 2;
  s.target.resize(2);
  CHECK_THROWS_AS(build_model(s), std::invalid_argument);
  s = circle_spec(4, 3, 4);
  s.min_angle = 2.0;  // >= pi/S
  CHECK_THROWS_AS(build_model(s), std::invalid_argument);
  s = circle_spec(2, 3, 4);
  CHECK_THROWS_AS(build_model(s), std::invalid_argument);
}
