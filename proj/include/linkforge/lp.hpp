#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "linkforge/micp/model.hpp"

namespace linkforge::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

// minimize obj . x subject to the sparse rows and variable bounds
struct LpProblem {
  int num_vars = 0;
  std::vector<double> lb, ub, obj;
  std::vector<micp::LinRow> rows;

  int add_var(double l, double u, double c) {
    lb.push_back(l);
    ub.push_back(u);
    obj.push_back(c);
    return num_vars++;
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

// Column states; Basic entries carry their basis row implicitly.
enum ColState : uint8_t { kAtLower = 0, kAtUpper = 1, kBasic = 2, kFreeZero = 3 };

struct LpResult {
  LpStatus status = LpStatus::IterLimit;
  double objective = 0.0;
  std::vector<double> x;               // structural values
  std::vector<uint8_t> col_status;     // warm-start handle (structurals + slacks)
  int iterations = 0;
};

// Bounded-variable revised primal simplex with an LU-factorized basis.
// Slack columns turn every row into an equality; phase 1 minimizes the sum of
// basic infeasibilities (composite method, no artificial columns), phase 2 the
// true objective. Dantzig pricing with a Bland fallback on stalls.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LpProblem& p) : n_(p.num_vars), m_((int)p.rows.size()) {
    N_ = n_ + m_;
    lb_ = p.lb;
    ub_ = p.ub;
    cost_ = p.obj;
    lb_.resize(N_);
    ub_.resize(N_);
    cost_.resize(N_, 0.0);
    cols_.resize(N_);
    rhs_.resize(m_);
    for (int j = 0; j < n_; ++j) cols_[j].reserve(4);
    for (int r = 0; r < m_; ++r) {
      const micp::LinRow& row = p.rows[r];
      for (auto& [j, c] : row.coefs)
        if (c != 0.0) cols_[j].push_back({r, c});
      const int s = n_ + r;
      cols_[s] = {{r, 1.0}};
      switch (row.rel) {
        case micp::Rel::LE: lb_[s] = 0; ub_[s] = kInf; break;
        case micp::Rel::GE: lb_[s] = -kInf; ub_[s] = 0; break;
        case micp::Rel::EQ: lb_[s] = 0; ub_[s] = 0; break;
      }
      rhs_[r] = row.rhs;
    }
  }

  LpResult solve(const std::vector<uint8_t>* warm = nullptr, int max_iter = 0) {
    LpResult res;
    if (!init_basis(warm)) {  // inconsistent fixed bounds
      res.status = LpStatus::Infeasible;
      return res;
    }
    return run_both_phases(max_iter);
  }

  // Append rows to an already-solved instance, keeping the factorization via a
  // block inverse update; the new slacks enter the basis. Call resolve() next.
  void add_rows(const std::vector<micp::LinRow>& rows) {
    const int k = (int)rows.size();
    if (k == 0) return;
    const int m_old = m_;
    for (int i = 0; i < k; ++i) {
      const micp::LinRow& row = rows[i];
      const int r = m_old + i;
      for (auto& [j, c] : row.coefs)
        if (c != 0.0) {
          if (j >= n_) throw std::invalid_argument("add_rows: slack reference");
          cols_[j].push_back({r, c});
        }
      rhs_.push_back(row.rhs);
      const int s = (int)cols_.size();
      cols_.push_back({{r, 1.0}});
      cost_.push_back(0.0);
      switch (row.rel) {
        case micp::Rel::LE: lb_.push_back(0); ub_.push_back(kInf); break;
        case micp::Rel::GE: lb_.push_back(-kInf); ub_.push_back(0); break;
        case micp::Rel::EQ: lb_.push_back(0); ub_.push_back(0); break;
      }
      basic_.push_back(s);
      state_.push_back(kBasic);
      double lhs = 0.0;
      for (auto& [j, c] : row.coefs) lhs += c * val_[j];
      val_.push_back(row.rhs - lhs);  // slack value keeping the equality exact
    }
    m_ += k;
    N_ += k;
    // enlarged basis is block-triangular over the old one; on numerical
    // failure fall back to the always-valid slack basis
    if (!refactorize(true)) reset_basis();
  }

  // continue after add_rows or bound edits; assumes state_/basic_/binv_ valid
  LpResult resolve(int max_iter = 0) {
    compute_basics();
    return run_both_phases(max_iter);
  }

  double& lower_bound(int j) { return lb_[j]; }
  double& upper_bound(int j) { return ub_[j]; }

 private:
  LpResult run_both_phases(int max_iter) {
    if (max_iter <= 0) max_iter = 200 * (N_ + 10);
    LpResult res;
    int iters = 0;
    LpStatus s2 = LpStatus::IterLimit;
    // phase 2 can erode feasibility through degenerate exits of basics the
    // phase-1 tolerance left slightly off their bounds, so feasibility is
    // re-verified on a fresh factorization before Optimal is believed
    for (int attempt = 0; attempt < 5; ++attempt) {
      try {
        const LpStatus s1 = run_phase(true, max_iter, iters);
        if (s1 == LpStatus::Infeasible || s1 == LpStatus::IterLimit) {
          res.status = s1;
          res.iterations = iters;
          return res;
        }
        s2 = run_phase(false, max_iter, iters);
        if (s2 != LpStatus::Optimal) break;
        refactorize();
        compute_basics();
        if (max_violation() <= 10 * kPhase1Tol) break;
        s2 = LpStatus::IterLimit;  // exhausted attempts: don't claim optimality
      } catch (const SingularBasis&) {
        reset_basis();
        s2 = LpStatus::IterLimit;
      }
    }
    res.status = s2;
    res.iterations = iters;
#ifdef LF_LP_PARANOID
    if (s2 == LpStatus::Optimal)
      for (int j = 0; j < N_; ++j)
        if (val_[j] < lb_[j] - 1e-4 || val_[j] > ub_[j] + 1e-4) {
          bool isbasic = false;
          for (int r = 0; r < m_; ++r) isbasic |= basic_[r] == j;
          std::fprintf(stderr,
                       "LP PARANOID: col %d val %.9g lb %.9g ub %.9g state %d "
                       "basic %d infeas %.3g m %d\n",
                       j, val_[j], lb_[j], ub_[j], (int)state_[j], (int)isbasic,
                       infeasibility(), m_);
          std::abort();
        }
#endif
    if (s2 == LpStatus::Optimal || s2 == LpStatus::IterLimit) {
      res.x.assign(val_.begin(), val_.begin() + n_);
      res.objective = 0.0;
      for (int j = 0; j < n_; ++j) res.objective += cost_[j] * val_[j];
      res.col_status = state_;
    }
    return res;
  }

 private:
  int n_, m_, N_;
  std::vector<double> lb_, ub_, cost_, rhs_, val_;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<int> basic_;            // column in each basis row
  std::vector<uint8_t> state_;        // per column

  // Basis factorization: B = (base LU) updated by elementary eta matrices,
  // B^{-1} = E_k ... E_1 (LU)^{-1} with E = I + g e_r^T. The basis is very
  // sparse (a handful of nonzeros per column), so a sparse LU keeps both the
  // refresh and the solves near-linear in the nonzero count.
  // mutable: SparseLU::transpose() is non-const even for read-only solves
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  struct Eta {
    int r;
    Eigen::VectorXd g;
  };
  std::vector<Eta> etas_;
  int pivots_since_refactor_ = 0;

  // w = B^{-1} v
  Eigen::VectorXd ftran(const Eigen::VectorXd& v) const {
    if (m_ == 0) return {};
    Eigen::VectorXd w = lu_.solve(v);
    for (const Eta& e : etas_) {
      const double wr = w[e.r];
      if (wr != 0.0) w += e.g * wr;
    }
    return w;
  }

  // y = B^{-T} c
  Eigen::VectorXd btran(Eigen::VectorXd c) const {
    if (m_ == 0) return {};
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it)
      c[it->r] += it->g.dot(c);
    return lu_.transpose().solve(c);
  }

  static constexpr double kFeasTol = 1e-9;
  static constexpr double kPhase1Tol = 1e-8;   // per-basic, relative
  static constexpr double kCostTol = 1e-9;
  static constexpr double kPivTol = 1e-8;

  double bound_start(int j) const {
    if (std::isfinite(lb_[j]) && std::isfinite(ub_[j]))
      return std::abs(lb_[j]) <= std::abs(ub_[j]) ? lb_[j] : ub_[j];
    if (std::isfinite(lb_[j])) return lb_[j];
    if (std::isfinite(ub_[j])) return ub_[j];
    return 0.0;
  }

  bool init_basis(const std::vector<uint8_t>* warm) {
    for (int j = 0; j < N_; ++j)
      if (lb_[j] > ub_[j] + kFeasTol) return false;
    state_.assign(N_, kAtLower);
    basic_.assign(m_, -1);
    bool warm_ok = false;
    if (warm && (int)warm->size() == N_) {
      state_ = *warm;
      std::vector<int> basics;
      for (int j = 0; j < N_; ++j)
        if (state_[j] == kBasic) basics.push_back(j);
      if ((int)basics.size() == m_) {
        basic_ = basics;
        warm_ok = refactorize(true);
      }
    }
    if (warm_ok) {
      set_nonbasic_values();
      compute_basics();
    } else {
      reset_basis();
    }
    return true;
  }

  void set_nonbasic_values() {
    val_.assign(N_, 0.0);
    for (int j = 0; j < N_; ++j) {
      switch (state_[j]) {
        case kAtLower: val_[j] = std::isfinite(lb_[j]) ? lb_[j] : bound_start(j); break;
        case kAtUpper: val_[j] = std::isfinite(ub_[j]) ? ub_[j] : bound_start(j); break;
        case kFreeZero: val_[j] = 0.0; break;
        case kBasic: break;
      }
      // repair states pointing at an absent bound
      if (state_[j] == kAtLower && !std::isfinite(lb_[j]))
        state_[j] = std::isfinite(ub_[j]) ? kAtUpper : kFreeZero;
      if (state_[j] == kAtUpper && !std::isfinite(ub_[j]))
        state_[j] = std::isfinite(lb_[j]) ? kAtLower : kFreeZero;
    }
  }

  // thrown when the current basis is numerically singular; recovery is a
  // restart from the all-slack basis, handled in run_both_phases
  struct SingularBasis {};

  bool refactorize(bool tolerate_failure = false) {
    etas_.clear();
    pivots_since_refactor_ = 0;
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> trips;
    for (int r = 0; r < m_; ++r)
      for (auto& [row, c] : cols_[basic_[r]]) trips.push_back({row, r, c});
    Eigen::SparseMatrix<double> B(m_, m_);
    B.setFromTriplets(trips.begin(), trips.end());
    lu_.compute(B);
    if (lu_.info() != Eigen::Success) {
      if (tolerate_failure) return false;
      throw SingularBasis{};
    }
    // probe solve detects a badly conditioned basis the factorization missed
    const Eigen::VectorXd probe = B * Eigen::VectorXd::Ones(m_);
    const double resid = (B * lu_.solve(probe) - probe).cwiseAbs().maxCoeff() /
                         (1.0 + probe.cwiseAbs().maxCoeff());
    if (!std::isfinite(resid) || resid > 1e-6) {
      if (tolerate_failure) return false;
      throw SingularBasis{};
    }
    return true;
  }

  // all-slack basis with structurals parked at their nearest bound; always a
  // valid starting point, used initially and as the singularity fallback
  void reset_basis() {
    for (int j = 0; j < n_; ++j)
      state_[j] = (std::isfinite(lb_[j]) || std::isfinite(ub_[j]))
                      ? (bound_start(j) == lb_[j] ? kAtLower : kAtUpper)
                      : kFreeZero;
    for (int r = 0; r < m_; ++r) {
      basic_[r] = n_ + r;
      state_[n_ + r] = kBasic;
    }
    refactorize();  // slack basis, cannot be singular
    set_nonbasic_values();
    compute_basics();
  }

  void compute_basics() {
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m_);
    for (int j = 0; j < N_; ++j) {
      if (state_[j] == kBasic || val_[j] == 0.0) continue;
      for (auto& [r, c] : cols_[j]) b[r] -= c * val_[j];
    }
    Eigen::VectorXd xb = ftran(b);
    for (int r = 0; r < m_; ++r) val_[basic_[r]] = xb[r];
  }

  double infeasibility() const {
    double f = 0.0;
    for (int r = 0; r < m_; ++r) {
      const int j = basic_[r];
      f += std::max(0.0, lb_[j] - val_[j]) + std::max(0.0, val_[j] - ub_[j]);
    }
    return f;
  }

  // worst single-basic bound violation, relative to the bound magnitude; the
  // summed measure lets one variable hide a real violation behind the m-scaled
  // tolerance, so termination tests use this instead
  double max_violation() const {
    double worst = 0.0;
    for (int r = 0; r < m_; ++r) {
      const int j = basic_[r];
      const double v =
          std::max(0.0, lb_[j] - val_[j]) + std::max(0.0, val_[j] - ub_[j]);
      const double scale =
          1.0 + std::max(std::isfinite(lb_[j]) ? std::abs(lb_[j]) : 0.0,
                         std::isfinite(ub_[j]) ? std::abs(ub_[j]) : 0.0);
      worst = std::max(worst, v / scale);
    }
    return worst;
  }

  // y = c_B B^{-1} for the active phase
  Eigen::VectorXd duals(bool phase1) const {
    Eigen::VectorXd cb(m_);
    for (int r = 0; r < m_; ++r) {
      const int j = basic_[r];
      if (phase1)
        cb[r] = val_[j] < lb_[j] - kFeasTol ? -1.0
              : val_[j] > ub_[j] + kFeasTol ? 1.0 : 0.0;
      else
        cb[r] = cost_[j];
    }
    return btran(std::move(cb));
  }

  double reduced_cost(int j, const Eigen::VectorXd& y, bool phase1) const {
    double d = phase1 ? 0.0 : cost_[j];
    for (auto& [r, c] : cols_[j]) d -= y[r] * c;
    return d;
  }

  // entering column and its movement direction, or -1
  std::pair<int, int> price(const Eigen::VectorXd& y, bool phase1, bool bland) const {
    int best = -1, dir = 0;
    double best_score = kCostTol;
    for (int j = 0; j < N_; ++j) {
      if (state_[j] == kBasic) continue;
      if (lb_[j] == ub_[j]) continue;  // fixed, never enters
      const double d = reduced_cost(j, y, phase1);
      int cand_dir = 0;
      if (state_[j] == kAtLower && d < -kCostTol) cand_dir = 1;
      else if (state_[j] == kAtUpper && d > kCostTol) cand_dir = -1;
      else if (state_[j] == kFreeZero && std::abs(d) > kCostTol) cand_dir = d > 0 ? -1 : 1;
      if (!cand_dir) continue;
      if (bland) return {j, cand_dir};
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = j;
        dir = cand_dir;
      }
    }
    return {best, dir};
  }

  // refresh the factorization before trusting any terminal conclusion; the
  // elementary updates drift after enough pivots
  bool confirm_fresh() {
    if (pivots_since_refactor_ == 0) return true;
    refactorize();
    compute_basics();
    return false;
  }

  LpStatus run_phase(bool phase1, int max_iter, int& iters) {
    int stall = 0;
    double last_f = phase1 ? infeasibility() : objective_value();
    while (true) {
      if (phase1 && max_violation() <= kPhase1Tol) {
        if (confirm_fresh()) return LpStatus::Optimal;
        continue;
      }
      if (iters >= max_iter) return LpStatus::IterLimit;
      const bool bland = stall > 3 * (N_ + 10);
      const Eigen::VectorXd y = duals(phase1);
      auto [q, dir] = price(y, phase1, bland);
      if (q < 0) {
        if (!confirm_fresh()) continue;
        return phase1 ? (max_violation() <= kPhase1Tol ? LpStatus::Optimal
                                                       : LpStatus::Infeasible)
                      : LpStatus::Optimal;
      }
      ++iters;

      // u = B^{-1} A_q; basic values move by -dir * t * u
      Eigen::VectorXd aq = Eigen::VectorXd::Zero(m_);
      for (auto& [r, c] : cols_[q]) aq[r] = c;
      Eigen::VectorXd u = ftran(aq);

      double t_max = kInf;
      int leave_row = -1;
      double leave_bound = 0.0, leave_piv = 0.0;
      // entering variable's own opposite bound
      if (std::isfinite(lb_[q]) && std::isfinite(ub_[q])) t_max = ub_[q] - lb_[q];
      for (int r = 0; r < m_; ++r) {
        if (std::abs(u[r]) < kPivTol) continue;
        const int j = basic_[r];
        const double delta = -dir * u[r];  // d(val_j)/dt
        double limit = kInf, bound = 0.0;
        const bool below = val_[j] < lb_[j] - kFeasTol;
        const bool above = val_[j] > ub_[j] + kFeasTol;
        if (delta > 0) {
          // moving up: feasible blocks at ub, below-lb blocks at lb
          if (below) { limit = (lb_[j] - val_[j]) / delta; bound = lb_[j]; }
          else if (above) {
            // phase 2 must not grow a leftover violation; degenerate exit
            if (!phase1) { limit = 0.0; bound = ub_[j]; }
          }
          else if (std::isfinite(ub_[j])) { limit = (ub_[j] - val_[j]) / delta; bound = ub_[j]; }
        } else {
          if (above) { limit = (ub_[j] - val_[j]) / delta; bound = ub_[j]; }
          else if (below) {
            if (!phase1) { limit = 0.0; bound = lb_[j]; }
          }
          else if (std::isfinite(lb_[j])) { limit = (lb_[j] - val_[j]) / delta; bound = lb_[j]; }
        }
        if (limit < -kFeasTol) limit = 0.0;
        limit = std::max(limit, 0.0);
        if (limit < t_max - 1e-12 ||
            (limit < t_max + 1e-12 && leave_row >= 0 && std::abs(u[r]) > leave_piv)) {
          t_max = limit;
          leave_row = r;
          leave_bound = bound;
          leave_piv = std::abs(u[r]);
        }
      }
      if (!std::isfinite(t_max)) {
        if (!confirm_fresh()) continue;
        return phase1 ? LpStatus::Infeasible  // cannot happen: f bounded below
                      : LpStatus::Unbounded;
      }

      const double t = t_max;
      // apply the step
      for (int r = 0; r < m_; ++r) val_[basic_[r]] -= dir * t * u[r];
      val_[q] += dir * t;
      if (leave_row < 0) {
        // bound flip
        state_[q] = dir > 0 ? kAtUpper : kAtLower;
        val_[q] = dir > 0 ? ub_[q] : lb_[q];
      } else {
        const int out = basic_[leave_row];
        val_[out] = leave_bound;
        state_[out] = (std::isfinite(lb_[out]) && leave_bound == lb_[out]) ? kAtLower
                     : (std::isfinite(ub_[out]) ? kAtUpper : kAtLower);
        if (!std::isfinite(lb_[out]) && !std::isfinite(ub_[out])) state_[out] = kFreeZero;
        basic_[leave_row] = q;
        state_[q] = kBasic;
        // eta update: B_new^{-1} = (I + g e_r^T) B_old^{-1}
        const double up = u[leave_row];
        Eta e{leave_row, -u / up};
        e.g[leave_row] = 1.0 / up - 1.0;
        etas_.push_back(std::move(e));
        if (++pivots_since_refactor_ >= 100) {
          refactorize();
          compute_basics();
        }
      }

      const double f = phase1 ? infeasibility() : objective_value();
      if (f < last_f - 1e-12) { stall = 0; last_f = f; }
      else ++stall;
    }
  }

  double objective_value() const {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += cost_[j] * val_[j];
    return s;
  }
};

inline LpResult solve_lp(const LpProblem& p, const std::vector<uint8_t>* warm = nullptr,
                         int max_iter = 0) {
  return SimplexSolver(p).solve(warm, max_iter);
}

}  // namespace linkforge::lp
