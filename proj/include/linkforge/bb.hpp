#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <thread>
#include <vector>

#include "linkforge/design.hpp"
#include "linkforge/micp/build.hpp"
#include "linkforge/relax.hpp"

namespace linkforge::bb {

struct BbParams {
  double mip_gap = 1e-6;          // absolute-plus-relative: gap <= g*max(1,|inc|)
  long node_limit = -1;           // < 0: unlimited
  double time_limit_s = 3600.0;
  double cut_tol = 1e-7;
  int max_cut_rounds = 200;
  int workers = 1;                // > 1: batch-parallel relaxation solves
                                  // (search order no longer bit-deterministic)
  std::uint64_t seed = 0;         // recorded for reproducibility bookkeeping
  std::ostream* debug = nullptr;  // per-node trace lines when set
};

enum class BbStatus { Optimal, Infeasible, NodeLimit, TimeLimit };

struct Incumbent {
  std::vector<double> x;
  double objective = std::numeric_limits<double>::infinity();
  micp::AssignmentCheck check;
  long found_at_node = 0;
  double found_at_seconds = 0.0;
};

struct LogEntry {
  long node_count = 0;
  double lower_bound = 0.0;
  double incumbent = std::numeric_limits<double>::infinity();
};

struct BbResult {
  BbStatus status = BbStatus::Infeasible;
  std::optional<Incumbent> incumbent;
  double lower_bound = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  long nodes_explored = 0;
  std::vector<LogEntry> log;
};

inline void write_convergence_csv(std::ostream& out,
                                  const std::vector<LogEntry>& log) {
  out << "node_count,lower_bound,incumbent_objective\n";
  for (const LogEntry& e : log) {
    out << e.node_count << ',' << e.lower_bound << ',';
    if (std::isfinite(e.incumbent)) out << e.incumbent;
    out << '\n';
  }
}

// One open subproblem. bound is the best proven lower bound (inherited from
// the parent until its own relaxation is solved).
struct BbNode {
  relax::BranchState branch;
  double bound = -std::numeric_limits<double>::infinity();
  int depth = 0;
  long id = 0;
  std::shared_ptr<const relax::RelaxResult> hint;  // parent relaxation
};

// What to branch on: a fractional binary, or the position split of an SOS set.
// Children semantics (member positions are 0-based):
//   binary:  down child fixes var to 0, up child to 1
//   SOS1 at split p: left zeroes positions > p, right zeroes positions <= p
//   SOS2 at split p: left zeroes positions > p, right zeroes positions < p
//   (both SOS2 children keep the shared breakpoint p)
struct BranchDecision {
  int binary_var = -1;
  int sos_index = -1;
  int split = 0;
};

inline double fractionality(double v) { return std::abs(v - std::round(v)); }

inline BranchDecision select_branch(const micp::MicpModel& model,
                                    const std::vector<double>& x,
                                    double tol = 1e-7) {
  BranchDecision d;
  double best = tol;
  for (int j = 0; j < model.num_vars(); ++j) {
    if (!model.variables[j].binary) continue;
    const double f = fractionality(x[j]);
    if (f > best) {
      best = f;
      d.binary_var = j;
    }
  }
  if (d.binary_var >= 0) return d;

  best = tol;
  for (int s = 0; s < (int)model.sos.size(); ++s) {
    const double v = micp::sos_violation(model.sos[s], x);
    if (v > best) {
      best = v;
      d.sos_index = s;
    }
  }
  if (d.sos_index < 0)
    throw std::logic_error("select_branch: assignment is integral and SOS-feasible");

  const micp::SosSet& set = model.sos[d.sos_index];
  const int n = (int)set.vars.size();
  // support extent; a violated set has nonzeros spanning more than the type
  // allows, so the clamps below always leave room for a separating split
  int a = 0, b = n - 1;
  while (a < n && std::abs(x[set.vars[a]]) <= tol) ++a;
  while (b >= 0 && std::abs(x[set.vars[b]]) <= tol) --b;
  if (set.type == 1) {
    // split at the weight median so both children lose comparable mass, but
    // keep at least one nonzero on each side or a child changes nothing
    double total = 0.0;
    for (int v : set.vars) total += std::abs(x[v]);
    double acc = 0.0;
    int p = 0;
    while (p < n - 2 && acc + std::abs(x[set.vars[p]]) < total / 2)
      acc += std::abs(x[set.vars[p++]]);
    d.split = std::clamp(p, a, b - 1);
  } else {
    // window split at the most-weighted interior breakpoint, strictly inside
    // the support so both children drop a nonzero
    int p = a + 1;
    for (int q = p + 1; q < b; ++q)
      if (std::abs(x[set.vars[q]]) > std::abs(x[set.vars[p]])) p = q;
    d.split = p;
  }
  return d;
}

namespace detail {

inline std::pair<relax::BranchState, relax::BranchState> branch_children(
    const relax::BranchState& base, const BranchDecision& d,
    const micp::MicpModel& model) {
  relax::BranchState lo = base, hi = base;
  if (d.binary_var >= 0) {
    lo.upper.push_back({d.binary_var, 0.0});
    hi.lower.push_back({d.binary_var, 1.0});
    return {lo, hi};
  }
  const micp::SosSet& set = model.sos[d.sos_index];
  const int n = (int)set.vars.size();
  for (int p = d.split + 1; p < n; ++p) lo.sos_zero.push_back({d.sos_index, p});
  const int drop_to = set.type == 1 ? d.split + 1 : d.split;
  for (int p = 0; p < drop_to; ++p) hi.sos_zero.push_back({d.sos_index, p});
  return {lo, hi};
}

// Candidate supports for pinning set s at point x, best first: positions by
// weight for SOS1, window starts by distance to the weight-averaged position
// for SOS2 (members are ordered along the quantity they interpolate, so that
// window keeps the interpolated value representable; raw weights are often
// uninformative when the LP parks mass on both extremes). Supports the branch
// state already forced to zero are excluded.
inline std::vector<int> sos_pin_candidates(const micp::MicpModel& model, int s,
                                           const std::vector<double>& x,
                                           const relax::BranchState& b) {
  const micp::SosSet& set = model.sos[s];
  const int n = (int)set.vars.size();
  std::vector<char> zeroed(n, 0);
  for (auto& [zs, zp] : b.sos_zero)
    if (zs == s) zeroed[zp] = 1;
  std::vector<std::pair<double, int>> scored;  // (score, support), low is better
  if (set.type == 1) {
    for (int p = 0; p < n; ++p)
      if (!zeroed[p]) scored.push_back({-std::abs(x[set.vars[p]]), p});
  } else {
    double mass = 0.0, avg = 0.0;
    for (int p = 0; p < n; ++p) {
      const double w = std::abs(x[set.vars[p]]);
      mass += w;
      avg += w * p;
    }
    const double target = mass > 0 ? avg / mass : 0.5 * (n - 1);
    for (int p = 0; p + 1 < n; ++p)
      if (!zeroed[p] && !zeroed[p + 1])
        scored.push_back({std::abs(p + 0.5 - target), p});
  }
  std::sort(scored.begin(), scored.end());
  std::vector<int> out;
  for (auto& [sc, p] : scored) out.push_back(p);
  return out;
}

// Zero every member of set s outside the chosen support (a single position
// for SOS1, the pair {keep, keep+1} for SOS2).
inline void apply_sos_pin(const micp::MicpModel& model, int s, int keep,
                          relax::BranchState& b) {
  const micp::SosSet& set = model.sos[s];
  const int n = (int)set.vars.size();
  for (int p = 0; p < n; ++p) {
    if (p == keep) continue;
    if (set.type == 2 && p == keep + 1) continue;
    b.sos_zero.push_back({s, p});
  }
}

inline void pin_sos_set(const micp::MicpModel& model, int s,
                        const std::vector<double>& x, relax::BranchState& b) {
  const std::vector<int> cand = sos_pin_candidates(model, s, x, b);
  apply_sos_pin(model, s, cand.empty() ? 0 : cand.front(), b);
}

inline void pin_binaries(const micp::MicpModel& model,
                         const std::vector<double>& x, relax::BranchState& b) {
  for (int j = 0; j < model.num_vars(); ++j)
    if (model.variables[j].binary) {
      const double v = std::round(x[j]);
      b.lower.push_back({j, v});
      b.upper.push_back({j, v});
    }
}

// Restriction that pins the relaxation to the integral assignment seen at x:
// binaries to their rounded values, every SOS set to its dominant support.
// Solving it yields a point that meets integrality and SOS exactly.
inline relax::BranchState pin_assignment(const micp::MicpModel& model,
                                         const relax::BranchState& base,
                                         const std::vector<double>& x) {
  relax::BranchState b = base;
  pin_binaries(model, x, b);
  for (int s = 0; s < (int)model.sos.size(); ++s) pin_sos_set(model, s, x, b);
  return b;
}

struct NodeOrder {
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;                                // FIFO tie-break
  }
};

}  // namespace detail

// Best-bound branch-and-bound with depth-first plunging until the first
// incumbent. root_branch restricts the whole search (used to pin a topology).
inline BbResult solve_micp(const micp::MicpModel& model, const BbParams& params,
                           const relax::BranchState& root_branch = {}) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  BbResult res;
  relax::CutPool pool;
  std::priority_queue<BbNode, std::vector<BbNode>, detail::NodeOrder> open;
  std::vector<BbNode> plunge;  // depth-first stack, active before an incumbent
  long next_id = 0;
  double min_pruned = std::numeric_limits<double>::infinity();
  double inc_obj = std::numeric_limits<double>::infinity();

  open.push({root_branch, -std::numeric_limits<double>::infinity(), 0,
             next_id++, nullptr});

  auto gap_abs = [&] { return params.mip_gap * std::max(1.0, std::abs(inc_obj)); };
  // valid global lower bound: every region not in the open set was either
  // pruned at its bound or belongs to the incumbent
  auto global_lb = [&] {
    double lb = std::min(min_pruned, inc_obj);
    if (!open.empty()) lb = std::min(lb, open.top().bound);
    for (const BbNode& n : plunge) lb = std::min(lb, n.bound);
    return lb;
  };
  auto log_state = [&] {
    const LogEntry e{res.nodes_explored, global_lb(), inc_obj};
    if (res.log.empty() || e.lower_bound != res.log.back().lower_bound ||
        e.incumbent != res.log.back().incumbent)
      res.log.push_back(e);
  };

  // Rounding heuristic and integral-node closer: pin the point's dominant
  // support and re-solve; a feasible pinned solve is an exact assignment.
  auto attempt_pin = [&](const relax::BranchState& base,
                         const relax::RelaxResult& rr) {
    relax::RelaxResult pinned = relax::solve_relaxation(
        model, detail::pin_assignment(model, base, rr.x), pool, params.cut_tol,
        params.max_cut_rounds, &rr);
    if (params.debug)
      *params.debug << "  pin status " << (int)pinned.status << " bound "
                    << pinned.bound << " rounds " << pinned.cut_rounds
                    << " qviol " << pinned.max_quad_violation << "\n";
    if (pinned.status != relax::RelaxStatus::Optimal) return false;
    const double obj = micp::eval_objective(model.objective, pinned.x);
    if (obj < inc_obj) {
      Incumbent inc;
      inc.x = pinned.x;
      inc.objective = obj;
      inc.check = micp::check_assignment(model, pinned.x);
      inc.found_at_node = res.nodes_explored;
      inc.found_at_seconds = elapsed();
      res.incumbent = std::move(inc);
      inc_obj = obj;
    }
    return true;
  };

  // Staged rounding for fractional points: fix the binaries, then repeatedly
  // pin only the most-violated SOS set to its dominant support and re-solve,
  // so each pin adapts to the previous restriction instead of rounding every
  // set at once (which is almost always mutually inconsistent).
  auto dive_pin = [&](const relax::BranchState& base,
                      const relax::RelaxResult& rr) {
    int budget = 3 * (int)model.sos.size() + 20;  // LP solves, incl. backtracks
    // Depth-first over per-set support choices, guided by the child bounds:
    // the LP point is degenerate about many supports (near-ties), so both
    // plausible windows are solved and the one degrading the bound least is
    // taken first. Infeasible picks backtrack chronologically.
    std::function<bool(const relax::BranchState&, const relax::RelaxResult&,
                       int)>
        go = [&](const relax::BranchState& b, const relax::RelaxResult& r,
                 int depth) -> bool {
      if (elapsed() > params.time_limit_s) return false;
      // Pin selection sets (type 1) before interpolation weights (type 2):
      // until the structural one-hots are decided, the big-M rows leave the
      // interpolated quantities decoupled and their weight profiles carry no
      // information about a feasible support.
      int worst = -1;
      double wv = 1e-7;
      int worst_type = 3;
      for (int s = 0; s < (int)model.sos.size(); ++s) {
        const double v = micp::sos_violation(model.sos[s], r.x);
        const int t = model.sos[s].type;
        if (v > 1e-7 && (t < worst_type || (t == worst_type && v > wv))) {
          wv = v;
          worst = s;
          worst_type = t;
        }
      }
      if (worst < 0) return attempt_pin(b, r);  // close exactly
      std::vector<int> cand = detail::sos_pin_candidates(model, worst, r.x, b);
      if (cand.size() > 2) cand.resize(2);
      std::vector<std::pair<relax::BranchState, relax::RelaxResult>> kids;
      for (int keep : cand) {
        if (budget-- <= 0) return false;
        relax::BranchState next = b;
        detail::apply_sos_pin(model, worst, keep, next);
        relax::RelaxResult sol = relax::solve_relaxation(
            model, next, pool, params.cut_tol, params.max_cut_rounds, &r);
        if (sol.status == relax::RelaxStatus::Optimal) {
          kids.emplace_back(std::move(next), std::move(sol));
          // a pin that costs nothing is certainly right; skip the sibling
          if (kids.back().second.bound <= r.bound + 1e-9) break;
        } else if (params.debug) {
          *params.debug << "  dp depth " << depth << " keep " << keep
                        << " status " << (int)sol.status << "\n";
        }
      }
      std::sort(kids.begin(), kids.end(), [](const auto& a, const auto& c) {
        return a.second.bound < c.second.bound;
      });
      for (auto& [kb, kr] : kids)
        if (go(kb, kr, depth + 1)) return true;
      return false;
    };
    relax::BranchState b = base;
    detail::pin_binaries(model, rr.x, b);
    relax::RelaxResult r0 = relax::solve_relaxation(
        model, b, pool, params.cut_tol, params.max_cut_rounds, &rr);
    const bool ok =
        r0.status == relax::RelaxStatus::Optimal && go(b, r0, 0);
    if (params.debug && !ok)
      *params.debug << "  dive_pin failed, budget left " << budget << "\n";
    return ok;
  };

  auto finish = [&](BbStatus st) {
    res.status = st;
    res.lower_bound = global_lb();
    if (res.incumbent) res.gap = inc_obj - res.lower_bound;
    log_state();
    return res;
  };

  // Everything after a node's relaxation solve: prune, close integral points,
  // run the rounding heuristic, branch. Mutates shared search state only from
  // the main thread.
  auto process = [&](BbNode& node, relax::RelaxResult rr, bool dived) {
    if (params.debug)
      *params.debug << "node " << node.id << " depth " << node.depth
                    << (dived ? " dive" : " best") << " pre " << node.bound
                    << " stack " << plunge.size() << " heap " << open.size()
                    << " top " << (open.empty() ? -1.0 : open.top().bound)
                    << " relax " << (int)rr.status << " bound " << rr.bound
                    << " rounds " << rr.cut_rounds << " iters "
                    << rr.lp_iterations << " zeros " << node.branch.sos_zero.size()
                    << " lows " << node.branch.lower.size() << " ups "
                    << node.branch.upper.size() << " t " << elapsed() << "\n";
    if (rr.status == relax::RelaxStatus::Infeasible) {
      log_state();
      return;
    }
    node.bound = std::max(node.bound, rr.bound);
    if (res.incumbent && node.bound >= inc_obj - gap_abs()) {
      min_pruned = std::min(min_pruned, node.bound);
      log_state();
      return;
    }

    bool integral = rr.status == relax::RelaxStatus::Optimal;
    if (integral) {
      for (int j = 0; integral && j < model.num_vars(); ++j)
        if (model.variables[j].binary && fractionality(rr.x[j]) > 1e-7)
          integral = false;
      for (size_t s = 0; integral && s < model.sos.size(); ++s)
        if (micp::sos_violation(model.sos[s], rr.x) > 1e-7) integral = false;
    }
    if (integral) {
      // re-solve with the assignment pinned so the point is exactly integral;
      // if that works the node is solved: nothing below it can beat its own
      // bound by more than the cut slack
      if (attempt_pin(node.branch, rr)) {
        log_state();
        return;
      }
      // pinning infeasible (support guess off); fall through and branch
    } else if (rr.status == relax::RelaxStatus::Optimal &&
               (!res.incumbent || res.nodes_explored % 500 == 0)) {
      // rounding heuristic on fractional nodes: often lands a first incumbent
      // long before the dive reaches an integral relaxation on its own. Only
      // worthwhile once the binaries are decided; rounding fractional ones
      // almost always yields an invalid structure
      bool bins_integral = true;
      for (int j = 0; bins_integral && j < model.num_vars(); ++j)
        if (model.variables[j].binary && fractionality(rr.x[j]) > 1e-7)
          bins_integral = false;
      if (bins_integral) dive_pin(node.branch, rr);
    }

    BranchDecision dec;
    try {
      dec = select_branch(model, rr.x);
    } catch (const std::logic_error&) {
      // integral point whose pinned solve failed has nothing to branch on
      min_pruned = std::min(min_pruned, node.bound);
      log_state();
      return;
    }
    if (params.debug) {
      *params.debug << "  branch";
      if (dec.binary_var >= 0)
        *params.debug << " bin " << dec.binary_var << " ("
                      << model.variables[dec.binary_var].name << ") x "
                      << rr.x[dec.binary_var] << "\n";
      else
        *params.debug << " sos " << dec.sos_index << " split " << dec.split
                      << " viol "
                      << micp::sos_violation(model.sos[dec.sos_index], rr.x)
                      << "\n";
    }
    auto [lo, hi] = detail::branch_children(node.branch, dec, model);
    auto hint = std::make_shared<relax::RelaxResult>(std::move(rr));
    BbNode a{std::move(lo), node.bound, node.depth + 1, next_id++, hint};
    BbNode b{std::move(hi), node.bound, node.depth + 1, next_id++, hint};
    if (!res.incumbent) {
      // plunge into the child on the fractional point's side of the split;
      // the top of the stack is explored first
      bool take_hi = true;
      if (dec.binary_var >= 0) {
        take_hi = hint->x[dec.binary_var] >= 0.5;
      } else {
        const micp::SosSet& set = model.sos[dec.sos_index];
        int heavy = 0;
        for (int p = 1; p < (int)set.vars.size(); ++p)
          if (std::abs(hint->x[set.vars[p]]) >
              std::abs(hint->x[set.vars[heavy]]))
            heavy = p;
        take_hi = heavy > dec.split;
      }
      // single-path plunge: only the preferred child stays on the stack; the
      // sibling goes to the heap so a dead-ended dive resumes from best bound
      // instead of exhaustively searching the abandoned subtree
      open.push(std::move(take_hi ? a : b));
      plunge.push_back(std::move(take_hi ? b : a));
    } else {
      open.push(std::move(a));
      open.push(std::move(b));
    }
    log_state();
  };

  while (!open.empty() || !plunge.empty()) {
    if (res.incumbent && inc_obj - global_lb() <= gap_abs())
      return finish(BbStatus::Optimal);
    if (params.node_limit >= 0 && res.nodes_explored >= params.node_limit)
      return finish(BbStatus::NodeLimit);
    if (elapsed() > params.time_limit_s)
      return finish(BbStatus::TimeLimit);

    // Batch-parallel best-bound phase: solve several open nodes' relaxations
    // concurrently on thread-local cut-pool copies, merge the new cuts, then
    // fold the results into the tree sequentially. Off the plunge path only;
    // result values stay valid but the visit order is machine-dependent.
    if (params.workers > 1 && plunge.empty() && !open.empty()) {
      std::vector<BbNode> batch;
      while ((int)batch.size() < params.workers && !open.empty()) {
        BbNode n = open.top();
        open.pop();
        if (res.incumbent && n.bound >= inc_obj - gap_abs()) {
          min_pruned = std::min(min_pruned, n.bound);
          continue;
        }
        batch.push_back(std::move(n));
      }
      if (batch.empty()) continue;
      std::vector<relax::RelaxResult> rrs(batch.size());
      std::vector<relax::CutPool> pools(batch.size(), pool);
      std::vector<std::thread> threads;
      threads.reserve(batch.size());
      for (size_t k = 0; k < batch.size(); ++k)
        threads.emplace_back([&, k] {
          rrs[k] = relax::solve_relaxation(model, batch[k].branch, pools[k],
                                           params.cut_tol, params.max_cut_rounds,
                                           batch[k].hint.get());
        });
      for (std::thread& th : threads) th.join();
      const size_t shared_rows = pool.rows.size();
      for (const relax::CutPool& local : pools)
        for (size_t r = shared_rows; r < local.rows.size(); ++r)
          pool.rows.push_back(local.rows[r]);
      for (size_t k = 0; k < batch.size(); ++k) {
        ++res.nodes_explored;
        process(batch[k], std::move(rrs[k]), false);
      }
      continue;
    }

    BbNode node;
    const double best_open =
        open.empty() ? std::numeric_limits<double>::infinity() : open.top().bound;
    const bool dive_ok =
        !plunge.empty() && !res.incumbent &&
        plunge.back().bound <= best_open + 0.2 * (1.0 + std::abs(best_open));
    if (!plunge.empty() && !res.incumbent && !dive_ok) {
      // the dive wandered into a region much worse than the best open node;
      // park the whole stack and restart the dive from the best bound
      while (!plunge.empty()) {
        open.push(std::move(plunge.back()));
        plunge.pop_back();
      }
    }
    if (dive_ok) {
      node = std::move(plunge.back());
      plunge.pop_back();
    } else {
      while (!plunge.empty()) {  // incumbent found: drain the stack into the heap
        open.push(std::move(plunge.back()));
        plunge.pop_back();
      }
      node = open.top();
      open.pop();
    }
    if (res.incumbent && node.bound >= inc_obj - gap_abs()) {
      min_pruned = std::min(min_pruned, node.bound);
      continue;
    }

    ++res.nodes_explored;
    relax::RelaxResult rr = relax::solve_relaxation(
        model, node.branch, pool, params.cut_tol, params.max_cut_rounds,
        node.hint.get());
    process(node, std::move(rr), dive_ok);
  }
  if (!res.incumbent) return finish(BbStatus::Infeasible);
  // tree exhausted: the incumbent is optimal up to the pruning threshold
  return finish(BbStatus::Optimal);
}

// Root restriction pinning the discrete structure to a given topology (motor
// direction left free). Used by the exhaustive-enumeration oracle.
inline relax::BranchState topology_branch(const micp::VariableLayout& L,
                                          const Topology& t) {
  relax::BranchState b;
  auto fix = [&](int var, double v) {
    b.lower.push_back({var, v});
    b.upper.push_back({var, v});
  };
  const int K = L.K;
  for (int i = 1; i <= K; ++i) {
    fix(L.U(i), t.used[i] ? 1.0 : 0.0);
    fix(L.F(i), t.movable(i) ? 0.0 : 1.0);  // unused nodes count as parked/fixed
  }
  for (int i = 2; i <= K; ++i) {
    const auto [j1, j2] = t.parents[i];
    for (int d = 1; d <= 2; ++d) {
      const int pj = d == 1 ? j1 : j2;
      fix(L.C0(d, i), pj == 0 ? 1.0 : 0.0);
      for (int j = 1; j < i; ++j) fix(L.Ck(d, j, i), j == pj ? 1.0 : 0.0);
    }
  }
  return b;
}

// Read the mechanism out of an integral assignment. Unused nodes are dropped
// and indices compacted; parents come from the one-hot connectivity slots.
inline std::pair<LinkageDesign, Trajectory> extract_design(
    const std::vector<double>& x, const micp::VariableLayout& L,
    const ProblemSpec& spec) {
  const int K = L.K, T = L.T;
  auto on = [&](int var) { return x[var] > 0.5; };

  std::vector<int> remap(K + 1, 0);
  int kp = 0;
  for (int i = 1; i <= K; ++i)
    if (on(L.U(i))) remap[i] = ++kp;

  // one-hot read of a connectivity side; two live members signal a solver bug
  auto parent_of = [&](int d, int i) {
    int found = 0;  // 0 encodes the "no parent" slot
    int live = on(L.C0(d, i)) ? 1 : 0;
    for (int j = 1; j < i; ++j)
      if (x[L.Ck(d, j, i)] > 1e-6) {
        ++live;
        found = j;
      }
    if (live != 1)
      throw std::runtime_error("extract_design: ambiguous parent selection at node " +
                               std::to_string(i));
    return found;
  };

  LinkageDesign des(kp);
  Topology& topo = des.topology;
  topo.clockwise = on(L.D());
  for (int i = 1; i <= K; ++i) {
    if (!remap[i]) continue;
    const int m = remap[i];
    topo.used[m] = 1;
    topo.fixed[m] = on(L.F(i));
    if (i >= 2 && !on(L.F(i))) {
      const int j1 = parent_of(1, i), j2 = parent_of(2, i);
      if (j1 == 0 || j2 == 0 || !remap[j1] || !remap[j2])
        throw std::runtime_error("extract_design: movable node " +
                                 std::to_string(i) + " lacks two used parents");
      topo.parents[m] = {remap[j1], remap[j2]};
      des.rod_lengths[m] = {std::hypot(x[L.DX(1, i, 1)], x[L.DY(1, i, 1)]),
                            std::hypot(x[L.DX(2, i, 1)], x[L.DY(2, i, 1)])};
    }
    if (on(L.F(i))) des.fixed_positions[m] = {x[L.X(i, 1)], x[L.Y(i, 1)]};
  }

  des.motor.center = {x[L.XC()], x[L.YC()]};
  const double mx = x[L.DX(1, 1, 1)], my = x[L.DY(1, 1, 1)];
  des.motor.radius = std::hypot(mx, my);
  // timestep 1 sits at motor angle 2*pi/T; the offset vector is R(sin a, cos a)
  const double sign = topo.clockwise ? 1.0 : -1.0;
  des.motor.phase = std::atan2(mx, my) - sign * 2 * M_PI / T;

  Trajectory traj(T, kp);
  for (int d = 1; d <= T; ++d)
    for (int i = 1; i <= K; ++i)
      if (remap[i]) traj.at(d, remap[i]) = {x[L.X(i, d)], x[L.Y(i, d)]};
  (void)spec;
  return {std::move(des), std::move(traj)};
}

}  // namespace linkforge::bb
