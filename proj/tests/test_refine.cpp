#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "linkforge/bb.hpp"
#include "linkforge/jansen.hpp"
#include "linkforge/kin.hpp"
#include "linkforge/micp/encode.hpp"
#include "linkforge/refine.hpp"

using namespace linkforge;
using refine::SpMat;

namespace {

ProblemSpec jansen_spec(int T = 12) {
  ProblemSpec s;
  s.max_nodes = 7;
  s.timesteps = T;
  s.constraints.containment_polygon = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  const Trajectory t = simulate_cycle(jansen_preset(), T);
  for (int d = 1; d <= T; ++d) s.target.push_back(t.at(d, 7));
  return s;
}

// Smallest usable mechanism: motor (1), anchor (2), end-effector (3).
struct Toy {
  ProblemSpec spec;
  LinkageDesign design{3};
  Trajectory traj;
};

Toy make_toy() {
  Toy t;
  t.spec.max_nodes = 3;
  t.spec.resolution = 4;
  t.spec.timesteps = 3;
  t.spec.min_angle = 0.1;
  t.spec.min_rod_length = 0.1;
  t.design.topology.used = {0, 1, 1, 1};
  t.design.topology.fixed = {0, 0, 1, 0};
  t.design.topology.parents[3] = {1, 2};
  t.design.fixed_positions[2] = {0.7, 0.0};
  t.design.rod_lengths[3] = {0.55, 0.6};
  t.design.motor.radius = 0.25;
  t.traj = simulate_cycle(t.design, t.spec.timesteps);
  for (int d = 1; d <= t.spec.timesteps; ++d)
    t.spec.target.push_back(t.traj.at(d, 3));
  return t;
}

template <typename F>
double max_fd_mismatch(const refine::RefineProblem& p, const Eigen::VectorXd& x,
                       F eval) {
  Eigen::VectorXd r;
  SpMat J;
  eval(p, x, &r, &J);
  const Eigen::MatrixXd Jd = Eigen::MatrixXd(J);
  double worst = 0;
  const double h = 1e-6;
  for (int c = 0; c < p.num_vars(); ++c) {
    Eigen::VectorXd xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    Eigen::VectorXd rp, rm;
    eval(p, xp, &rp, nullptr);
    eval(p, xm, &rm, nullptr);
    for (int row = 0; row < r.size(); ++row) {
      const double fd = (rp[row] - rm[row]) / (2 * h);
      const double denom = std::max({1.0, std::abs(Jd(row, c)), std::abs(fd)});
      worst = std::max(worst, std::abs(fd - Jd(row, c)) / denom);
    }
  }
  return worst;
}

double max_traj_gap(const Trajectory& a, const Trajectory& b, const Topology& t) {
  double worst = 0;
  for (int d = 1; d <= a.timesteps; ++d)
    for (int i = 1; i <= t.node_count; ++i)
      if (t.used[i]) worst = std::max(worst, norm(a.at(d, i) - b.at(d, i)));
  return worst;
}

}  // namespace

TEST_CASE("coupling residuals vanish on an exactly simulated mechanism") {
  const LinkageDesign d = jansen_preset();
  const ProblemSpec spec = jansen_spec();
  const Trajectory traj = simulate_cycle(d, spec.timesteps);
  const refine::RefineProblem p = refine::make_refine_problem(d, spec);
  Eigen::VectorXd r;
  refine::residuals_and_jacobian(p, refine::initial_point(p, d, traj), &r, nullptr);
  REQUIRE(r.size() > 0);
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rod-constancy residual matches hand arithmetic after a point move") {
  Toy toy = make_toy();
  const refine::RefineProblem p = refine::make_refine_problem(toy.design, toy.spec);

  Trajectory moved = toy.traj;
  moved.at(1, 3) += Vec2{0.01, -0.02};
  Eigen::VectorXd r;
  refine::residuals_and_jacobian(
      p, refine::initial_point(p, toy.design, moved), &r, nullptr);

  // Node 3 is the only jointed node: first T rows follow its first parent
  // (the motor), the next T its second parent (the anchor), timesteps cyclic.
  const int T = toy.spec.timesteps;
  for (int d = 1; d <= T; ++d) {
    const int dn = d % T + 1;
    const double expect1 = norm2(moved.at(d, 3) - moved.at(d, 1)) -
                           norm2(moved.at(dn, 3) - moved.at(dn, 1));
    const double expect2 = norm2(moved.at(d, 3) - moved.at(d, 2)) -
                           norm2(moved.at(dn, 3) - moved.at(dn, 2));
    CHECK(r[d - 1] == Catch::Approx(expect1).margin(1e-15));
    CHECK(r[T + d - 1] == Catch::Approx(expect2).margin(1e-15));
  }
}

TEST_CASE("analytic jacobians match central finite differences") {
  const LinkageDesign d = jansen_preset();
  const ProblemSpec spec = jansen_spec();
  const Trajectory traj = simulate_cycle(d, spec.timesteps);
  const refine::RefineProblem p = refine::make_refine_problem(d, spec);
  const Eigen::VectorXd x0 = refine::initial_point(p, d, traj);

  std::mt19937_64 rng(20260824);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd x = x0;
    for (int c = 0; c < x.size(); ++c) x[c] += noise(rng);
    CHECK(max_fd_mismatch(p, x, refine::residuals_and_jacobian) <= 1e-6);
    CHECK(max_fd_mismatch(p, x, refine::inequalities_and_jacobian) <= 1e-6);
    CHECK(max_fd_mismatch(p, x, refine::objective_residuals) <= 1e-6);
  }
}

TEST_CASE("an exactly feasible optimum is a fixed point") {
  const LinkageDesign d = jansen_preset();
  const ProblemSpec spec = jansen_spec();
  const Trajectory traj = simulate_cycle(d, spec.timesteps);

  const refine::RefineResult res = refine::refine(d, traj, spec);
  CHECK(res.report.converged);
  CHECK(res.report.eq_residual_after <= 1e-10);
  CHECK(max_traj_gap(res.trajectory, traj, d.topology) <= 1e-10);
  CHECK(res.design.motor.radius == Catch::Approx(d.motor.radius).margin(1e-10));
  CHECK(res.design.motor.phase == Catch::Approx(d.motor.phase).margin(1e-10));
  for (int i = 3; i <= 7; ++i) {
    CHECK(res.design.rod_lengths[i].first ==
          Catch::Approx(d.rod_lengths[i].first).margin(1e-10));
    CHECK(res.design.rod_lengths[i].second ==
          Catch::Approx(d.rod_lengths[i].second).margin(1e-10));
  }
  CHECK(res.report.objective_after ==
        Catch::Approx(res.report.objective_before).margin(1e-10));
}

TEST_CASE("perturbed fixture is restored to exact feasibility") {
  const LinkageDesign d = jansen_preset();
  const ProblemSpec spec = jansen_spec();
  const Trajectory traj = simulate_cycle(d, spec.timesteps);

  Trajectory pert = traj;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (Vec2& q : pert.positions) q += Vec2{u(rng), u(rng)};

  std::vector<std::pair<int, double>> merits;
  refine::RefineParams params;
  params.merit_trace = &merits;
  const refine::RefineResult res = refine::refine(d, pert, spec, params);

  CHECK(res.report.converged);
  CHECK(res.report.eq_residual_after <= 1e-8);
  CHECK(res.report.ineq_violation_after <= 1e-9);
  CHECK(res.report.stationarity <= 1e-6);
  CHECK(res.design.topology == d.topology);

  // Accepted steps never increase the merit within an outer round.
  REQUIRE(!merits.empty());
  for (size_t k = 1; k < merits.size(); ++k)
    if (merits[k].first == merits[k - 1].first)
      CHECK(merits[k].second <= merits[k - 1].second + 1e-12);

  const VerifyReport v = verify_design(res.design, spec);
  CHECK(v.simulated);
  CHECK(v.pass);
  CHECK(max_traj_gap(simulate_cycle(res.design, spec.timesteps), res.trajectory,
                     d.topology) <= 1e-8);
}

TEST_CASE("synthesized toy output refines to an exactly simulable design") {
  Toy toy = make_toy();
  auto [model, layout] = micp::build_model(toy.spec);
  bb::BbParams bp;
  bp.time_limit_s = 60;
  const bb::BbResult full = bb::solve_micp(model, bp);
  REQUIRE(full.incumbent);

  auto [design, traj] = bb::extract_design(full.incumbent->x, layout, toy.spec);
  const refine::RefineResult res = refine::refine(design, traj, toy.spec);

  CHECK(res.report.converged);
  CHECK(res.report.eq_residual_after <= 1e-8);
  CHECK(res.design.topology == design.topology);
  const VerifyReport v = verify_design(res.design, toy.spec);
  CHECK(v.simulated);
  CHECK(v.pass);
  CHECK(max_traj_gap(simulate_cycle(res.design, toy.spec.timesteps),
                     res.trajectory, design.topology) <= 1e-8);
}
