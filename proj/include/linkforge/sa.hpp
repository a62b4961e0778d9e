#pragma once

// Stochastic local-search baseline. A single Metropolis chain walks over
// concrete designs (geometry perturbations, node addition, node removal),
// keeps only candidates that simulate cleanly over the full cycle, and scores
// them with the alignment-mode tracking error (chain designs carry no phase
// anchoring). Used as the comparison baseline for the exact pipeline.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "linkforge/design.hpp"
#include "linkforge/kin.hpp"
#include "linkforge/spec.hpp"

namespace linkforge::sa {

struct SaConfig {
  long iterations = 1'000'000;
  double initial_temperature = -1.0;  // negative: initial objective / 10
  double cooling = 0.999;             // geometric factor, applied per 10^3 steps
  double w_geometric = 0.8;           // move-kind weights, must sum to 1
  double w_add = 0.1;
  double w_remove = 0.1;
  double move_sigma = 0.02;           // Gaussian scale of geometry perturbations
  int retry_cap = 1000;               // validity retries per move and at init
  std::uint64_t seed = 0;
};

enum class MoveKind { Geometric, Add, Remove };

struct SaResult {
  LinkageDesign best;
  double best_objective = 0.0;
  // Best-so-far objective sampled every 10^3 iterations (iteration, value).
  std::vector<std::pair<long, double>> trace;
};

inline void write_trace_csv(std::ostream& os,
                            const std::vector<std::pair<long, double>>& trace) {
  os << "iteration,best_objective\n";
  for (const auto& [it, obj] : trace) os << it << ',' << obj << '\n';
}

// Metropolis rule: always accept improvements, accept a worsening delta with
// probability exp(-delta/temperature). Zero temperature degenerates to greedy.
inline bool accept_move(double delta, double temperature, std::mt19937_64& rng) {
  if (delta <= 0) return true;
  if (temperature <= 0) return false;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < std::exp(-delta / temperature);
}

inline int used_count(const Topology& t) {
  int c = 0;
  for (int i = 1; i <= t.node_count; ++i) c += t.used[i] ? 1 : 0;
  return c;
}

// Alignment-mode tracking objective; +inf when the mechanism glitches.
inline double sa_objective(const LinkageDesign& d, const ProblemSpec& spec) {
  try {
    const Trajectory t = simulate_cycle(d, spec.timesteps);
    return trajectory_error(t, spec.target, spec.rod_weight,
                            used_count(d.topology), /*align=*/true);
  } catch (const SimulationError&) {
    return std::numeric_limits<double>::infinity();
  }
}

// One proposal of the given kind. Returns nothing when the kind is not
// applicable (removal at the minimal size, addition at the node cap);
// candidates are *not* validity-checked here — the chain retries until
// verify_design passes.
inline std::optional<LinkageDesign> random_move(const LinkageDesign& design,
                                                const ProblemSpec& spec,
                                                MoveKind kind,
                                                std::mt19937_64& rng,
                                                double sigma = 0.02) {
  const Topology& t = design.topology;
  const int K = t.node_count;
  std::normal_distribution<double> noise(0.0, sigma);

  switch (kind) {
    case MoveKind::Geometric: {
      LinkageDesign d = design;
      // Every tunable scalar, equally likely: rod lengths, anchor
      // coordinates, motor radius and center coordinates.
      std::vector<double*> slots;
      for (int i = 2; i <= K; ++i) {
        if (!t.used[i]) continue;
        if (t.fixed[i]) {
          slots.push_back(&d.fixed_positions[i].x);
          slots.push_back(&d.fixed_positions[i].y);
        } else {
          slots.push_back(&d.rod_lengths[i].first);
          slots.push_back(&d.rod_lengths[i].second);
        }
      }
      slots.push_back(&d.motor.radius);
      slots.push_back(&d.motor.center.x);
      slots.push_back(&d.motor.center.y);
      std::uniform_int_distribution<size_t> pick(0, slots.size() - 1);
      *slots[pick(rng)] += noise(rng);
      return d;
    }

    case MoveKind::Add: {
      if (K >= spec.max_nodes) return std::nullopt;
      LinkageDesign d(K + 1);
      d.topology.clockwise = t.clockwise;
      d.motor = design.motor;
      for (int i = 1; i <= K; ++i) {
        d.topology.used[i] = t.used[i];
        d.topology.fixed[i] = t.fixed[i];
        d.topology.parents[i] = t.parents[i];
        d.rod_lengths[i] = design.rod_lengths[i];
        d.fixed_positions[i] = design.fixed_positions[i];
      }
      std::vector<int> used;
      for (int i = 1; i <= K; ++i)
        if (t.used[i]) used.push_back(i);
      std::uniform_int_distribution<size_t> pick(0, used.size() - 1);
      const int j1 = used[pick(rng)];
      int j2 = j1;
      while (j2 == j1) j2 = used[pick(rng)];
      d.topology.used[K + 1] = 1;
      d.topology.parents[K + 1] = {j1, j2};
      std::uniform_real_distribution<double> len(spec.min_rod_length,
                                                 spec.workspace);
      d.rod_lengths[K + 1] = {len(rng), len(rng)};
      return d;
    }

    case MoveKind::Remove: {
      // Drop the end-effector; the chain's previous movable node takes over.
      // Trailing anchors above it fed only the removed node, so they go too.
      int m = 0;
      for (int i = K - 1; i >= 2; --i)
        if (t.movable(i)) { m = i; break; }
      if (m < 3) return std::nullopt;  // below the minimal three-node chain
      LinkageDesign d(m);
      d.topology.clockwise = t.clockwise;
      d.motor = design.motor;
      for (int i = 1; i <= m; ++i) {
        d.topology.used[i] = t.used[i];
        d.topology.fixed[i] = t.fixed[i];
        d.topology.parents[i] = t.parents[i];
        d.rod_lengths[i] = design.rod_lengths[i];
        d.fixed_positions[i] = design.fixed_positions[i];
      }
      return d;
    }
  }
  return std::nullopt;
}

namespace detail {

inline bool is_valid(const LinkageDesign& d, const ProblemSpec& spec) {
  if (!validate_topology(d.topology, d.topology.node_count).empty()) return false;
  return verify_design(d, spec).pass;
}

// Minimal three-node chain (motor, anchor, jointed end-effector) with random
// geometry; retried until it simulates cleanly.
inline LinkageDesign random_initial(const ProblemSpec& spec,
                                    std::mt19937_64& rng, int retry_cap) {
  std::uniform_real_distribution<double> box(-0.8 * spec.workspace,
                                             0.8 * spec.workspace);
  std::uniform_real_distribution<double> len(spec.min_rod_length,
                                             spec.workspace);
  std::uniform_real_distribution<double> rad(
      spec.min_rod_length, std::max(spec.min_rod_length, 0.4 * spec.workspace));
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    LinkageDesign d(3);
    d.topology.used = {0, 1, 1, 1};
    d.topology.fixed = {0, 0, 1, 0};
    d.topology.parents[3] = {1, 2};
    d.topology.clockwise = (rng() & 1) != 0;
    d.motor.center = spec.constraints.motor_center
                         ? *spec.constraints.motor_center
                         : Vec2{box(rng), box(rng)};
    d.motor.radius = rad(rng);
    d.fixed_positions[2] = {box(rng), box(rng)};
    d.rod_lengths[3] = {len(rng), len(rng)};
    if (is_valid(d, spec)) return d;
  }
  throw std::runtime_error("annealing: no valid initial design within retry cap");
}

}  // namespace detail

// Runs one chain. When `initial` is given it must already be valid and seeds
// the chain; otherwise a minimal random design is drawn.
inline SaResult sa_search(const ProblemSpec& spec, const SaConfig& config,
                          const LinkageDesign* initial = nullptr) {
  if (!(config.cooling > 0 && config.cooling < 1))
    throw std::invalid_argument("annealing: cooling factor must lie in (0,1)");
  if (std::abs(config.w_geometric + config.w_add + config.w_remove - 1.0) > 1e-9)
    throw std::invalid_argument("annealing: move weights must sum to 1");

  std::mt19937_64 rng(config.seed);
  if (initial && !detail::is_valid(*initial, spec))
    throw std::invalid_argument("annealing: supplied initial design is invalid");
  LinkageDesign cur =
      initial ? *initial : detail::random_initial(spec, rng, config.retry_cap);
  double cur_obj = sa_objective(cur, spec);

  SaResult res;
  res.best = cur;
  res.best_objective = cur_obj;
  double temp = config.initial_temperature >= 0 ? config.initial_temperature
                                                : cur_obj / 10.0;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto pick_kind = [&]() {
    const double r = u01(rng);
    if (r < config.w_geometric) return MoveKind::Geometric;
    if (r < config.w_geometric + config.w_add) return MoveKind::Add;
    return MoveKind::Remove;
  };

  for (long it = 1; it <= config.iterations; ++it) {
    std::optional<LinkageDesign> candidate;
    for (int retry = 0; retry < config.retry_cap && !candidate; ++retry) {
      std::optional<LinkageDesign> mv =
          random_move(cur, spec, pick_kind(), rng, config.move_sigma);
      if (mv && detail::is_valid(*mv, spec)) candidate = std::move(mv);
    }
    if (candidate) {
      const double obj = sa_objective(*candidate, spec);
      if (accept_move(obj - cur_obj, temp, rng)) {
        cur = std::move(*candidate);
        cur_obj = obj;
        if (cur_obj < res.best_objective) {
          res.best = cur;
          res.best_objective = cur_obj;
        }
      }
    }
    if (it % 1000 == 0) {
      temp *= config.cooling;
      res.trace.push_back({it, res.best_objective});
    }
  }
  return res;
}

}  // namespace linkforge::sa
