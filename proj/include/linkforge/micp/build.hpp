#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "linkforge/micp/model.hpp"
#include "linkforge/micp/tables.hpp"
#include "linkforge/spec.hpp"

namespace linkforge::micp {

inline std::string idx1(const char* base, int a) {
  return std::string(base) + "_" + std::to_string(a);
}
inline std::string idx2(const char* base, int a, int b) {
  return idx1(base, a) + "_" + std::to_string(b);
}
inline std::string idx3(const char* base, int a, int b, int c) {
  return idx2(base, a, b) + "_" + std::to_string(c);
}

// Index maps from every model symbol to its variable slot. Node indices i, j
// and timesteps d are 1-based; the pair side k is 1 or 2; sectors l are
// 1..2S; breakpoints s are 1..S.
struct VariableLayout {
  int K = 0, S = 0, T = 0;
  std::vector<int> u_idx, f_idx;               // U_i, F_i             [K+1]
  std::vector<std::vector<int>> c_idx;         // C_{ji}               [i][j]
  std::vector<std::vector<int>> c1_idx;        // C^1_{ji}
  std::vector<std::vector<int>> c2_idx;        // C^2_{ji}
  std::vector<std::vector<int>> c0_idx;        // C^d_{0i}             [d][i]
  std::vector<std::vector<int>> qf_idx;        // forward flow Q_{ji}  [i][j]
  std::vector<std::vector<int>> rf_idx;        // reverse flow R_{ji}  [i][j]
  std::vector<std::vector<int>> x_idx, y_idx;  // positions            [i][d]
  // relative positions and their squared upper bounds                 [k][i][d]
  std::vector<std::vector<std::vector<int>>> dx_idx, dy_idx, tdx_idx, tdy_idx;
  // base slot of the S consecutive PWL weights behind each tilde      [k][i][d]
  std::vector<std::vector<std::vector<int>>> lam_dx_base, lam_dy_base;
  std::vector<std::vector<int>> gamma_base;    // base of the 2S selectors [i][d]
  int d_idx = -1, xc_idx = -1, yc_idx = -1;

  int U(int i) const { return u_idx[i]; }
  int F(int i) const { return f_idx[i]; }
  int C(int j, int i) const { return c_idx[i][j]; }
  int C1(int j, int i) const { return c1_idx[i][j]; }
  int C2(int j, int i) const { return c2_idx[i][j]; }
  int Ck(int k, int j, int i) const { return k == 1 ? C1(j, i) : C2(j, i); }
  int C0(int d, int i) const { return c0_idx[d][i]; }
  int Qf(int j, int i) const { return qf_idx[i][j]; }
  int Rf(int j, int i) const { return rf_idx[i][j]; }
  int X(int i, int d) const { return x_idx[i][d]; }
  int Y(int i, int d) const { return y_idx[i][d]; }
  int DX(int k, int i, int d) const { return dx_idx[k][i][d]; }
  int DY(int k, int i, int d) const { return dy_idx[k][i][d]; }
  int TDX(int k, int i, int d) const { return tdx_idx[k][i][d]; }
  int TDY(int k, int i, int d) const { return tdy_idx[k][i][d]; }
  int LamDX(int k, int i, int d, int s) const { return lam_dx_base[k][i][d] + s - 1; }
  int LamDY(int k, int i, int d, int s) const { return lam_dy_base[k][i][d] + s - 1; }
  int Gamma(int l, int i, int d) const { return gamma_base[i][d] + l - 1; }
  int D() const { return d_idx; }
  int XC() const { return xc_idx; }
  int YC() const { return yc_idx; }

  int next_timestep(int d) const { return d % T + 1; }
};

struct BuildContext {
  MicpModel& model;
  VariableLayout& layout;
  const ProblemSpec& spec;
  PwlGrid grid;
  SectorTable sectors;
  // (2*sqrt(2)*B)^2, the big-M slack for quadratic and sector rows
  double bigm() const { return 8 * spec.workspace * spec.workspace; }
};

// ---------------------------------------------------------------------------
// variable declaration

inline void declare_variables(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  VariableLayout& L = ctx.layout;
  const int K = L.K, T = L.T;
  const double B = ctx.spec.workspace;

  L.u_idx.assign(K + 1, -1);
  L.f_idx.assign(K + 1, -1);
  for (int i = 1; i <= K; ++i) L.u_idx[i] = m.add_var(idx1("U", i), 0, 1, true);
  for (int i = 1; i <= K; ++i) L.f_idx[i] = m.add_var(idx1("F", i), 0, 1, true);

  auto pair_table = [&](const char* base) {
    std::vector<std::vector<int>> t(K + 1);
    for (int i = 2; i <= K; ++i) {
      t[i].assign(i, -1);
      for (int j = 1; j < i; ++j) t[i][j] = m.add_var(idx2(base, j, i), 0, 1);
    }
    return t;
  };
  L.c_idx = pair_table("C");
  L.c1_idx = pair_table("C1");
  L.c2_idx = pair_table("C2");
  L.c0_idx.assign(3, {});
  for (int d = 1; d <= 2; ++d) {
    L.c0_idx[d].assign(K + 1, -1);
    for (int i = 2; i <= K; ++i) L.c0_idx[d][i] = m.add_var(idx2("C0", d, i), 0, 1);
  }

  auto flow_table = [&](const char* base) {
    std::vector<std::vector<int>> t(K + 1);
    for (int i = 2; i <= K; ++i) {
      t[i].assign(i, -1);
      for (int j = 1; j < i; ++j) t[i][j] = m.add_var(idx2(base, j, i), 0, K);
    }
    return t;
  };
  L.qf_idx = flow_table("Qf");
  L.rf_idx = flow_table("Rf");

  L.x_idx.assign(K + 1, {});
  L.y_idx.assign(K + 1, {});
  for (int i = 1; i <= K; ++i) {
    L.x_idx[i].assign(T + 1, -1);
    L.y_idx[i].assign(T + 1, -1);
    for (int d = 1; d <= T; ++d) {
      L.x_idx[i][d] = m.add_var(idx2("x", i, d), -B, B);
      L.y_idx[i][d] = m.add_var(idx2("y", i, d), -B, B);
    }
  }

  auto rel_table = [&](const char* base) {
    std::vector<std::vector<std::vector<int>>> t(3);
    for (int k = 1; k <= 2; ++k) {
      t[k].assign(K + 1, {});
      for (int i = 1; i <= K; ++i) {
        t[k][i].assign(T + 1, -1);
        for (int d = 1; d <= T; ++d)
          t[k][i][d] = m.add_var(idx3(base, k, i, d), -B, B);
      }
    }
    return t;
  };
  L.dx_idx = rel_table("dx");
  L.dy_idx = rel_table("dy");
  L.tdx_idx.assign(3, std::vector<std::vector<int>>(K + 1, std::vector<int>(T + 1, -1)));
  L.tdy_idx = L.tdx_idx;
  L.lam_dx_base = L.tdx_idx;
  L.lam_dy_base = L.tdx_idx;

  const int twoS = 2 * L.S;
  L.gamma_base.assign(K + 1, std::vector<int>(T + 1, -1));
  for (int i = 2; i <= K; ++i)
    for (int d = 1; d <= T; ++d) {
      L.gamma_base[i][d] = m.num_vars();
      for (int l = 1; l <= twoS; ++l)
        m.add_var(idx3("gam", l, i, d), 0, 1);
    }

  L.d_idx = m.add_var("D", 0, 1, true);
  L.xc_idx = m.add_var("XC", -B, B);
  L.yc_idx = m.add_var("YC", -B, B);
}

// ---------------------------------------------------------------------------
// node states: 1 - F_i <= U_i for every i, plus U_1 = U_K = 1, F_1 = 0.
// Rows: K inequalities; 3 bound fixings.

inline void add_state_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  for (int i = 1; i <= L.K; ++i)
    m.linear.push_back({{{L.U(i), 1.0}, {L.F(i), 1.0}}, Rel::GE, 1.0});
  m.fix_var(L.U(1), 1.0);
  m.fix_var(L.U(L.K), 1.0);
  m.fix_var(L.F(1), 0.0);
}

// ---------------------------------------------------------------------------
// connectivity: C = C1 + C2, C^k <= U_j, sum_j C_{ji} = 2 - 2 F_i, verbose
// slot sums, SOS1 on each ordered {C^d_{0i}..C^d_{i-1,i}} set.
// Rows: P + 2P + (K-1) + 2(K-1) with P = K(K-1)/2 pairs; SOS1 sets: 2(K-1).

inline void add_connectivity_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const int K = L.K;
  for (int i = 2; i <= K; ++i)
    for (int j = 1; j < i; ++j) {
      m.linear.push_back({{{L.C(j, i), 1.0}, {L.C1(j, i), -1.0}, {L.C2(j, i), -1.0}},
                          Rel::EQ, 0.0});
      m.linear.push_back({{{L.C1(j, i), 1.0}, {L.U(j), -1.0}}, Rel::LE, 0.0});
      m.linear.push_back({{{L.C2(j, i), 1.0}, {L.U(j), -1.0}}, Rel::LE, 0.0});
    }
  for (int i = 2; i <= K; ++i) {
    LinTerm row{{L.F(i), 2.0}};
    for (int j = 1; j < i; ++j) row.push_back({L.C(j, i), 1.0});
    m.linear.push_back({row, Rel::EQ, 2.0});
  }
  for (int d = 1; d <= 2; ++d)
    for (int i = 2; i <= K; ++i) {
      LinTerm row{{L.C0(d, i), 1.0}};
      SosSet set{1, {L.C0(d, i)}};
      for (int j = 1; j < i; ++j) {
        row.push_back({L.Ck(d, j, i), 1.0});
        set.vars.push_back(L.Ck(d, j, i));
      }
      m.linear.push_back({row, Rel::EQ, 1.0});
      m.sos.push_back(std::move(set));
    }
}

// ---------------------------------------------------------------------------
// forward flow: Q_{ji} <= K C_{ji}; U_i + sum_{j<i} Q_{ji} = sum_{k>i} Q_{ik}
// for i = 1..K-1. Rows: P capacities + (K-1) balances.

inline void add_flow_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const int K = L.K;
  for (int i = 2; i <= K; ++i)
    for (int j = 1; j < i; ++j)
      m.linear.push_back({{{L.Qf(j, i), 1.0}, {L.C(j, i), -(double)K}}, Rel::LE, 0.0});
  for (int i = 1; i < K; ++i) {
    LinTerm row{{L.U(i), 1.0}};
    for (int j = 1; j < i; ++j) row.push_back({L.Qf(j, i), 1.0});
    for (int k = i + 1; k <= K; ++k) row.push_back({L.Qf(i, k), -1.0});
    m.linear.push_back({row, Rel::EQ, 0.0});
  }
}

// ---------------------------------------------------------------------------
// reverse flow: R_{ji} <= K C_{ji}, R_{ji} <= K (1 - F_j);
// sum_{j<i} R_{ji} = 1 - F_i + sum_{k>i} R_{ik} for i = 2..K.
// Rows: 2P capacities + (K-1) balances.

inline void add_reverse_flow_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const int K = L.K;
  for (int i = 2; i <= K; ++i)
    for (int j = 1; j < i; ++j) {
      m.linear.push_back({{{L.Rf(j, i), 1.0}, {L.C(j, i), -(double)K}}, Rel::LE, 0.0});
      m.linear.push_back({{{L.Rf(j, i), 1.0}, {L.F(j), (double)K}}, Rel::LE, (double)K});
    }
  for (int i = 2; i <= K; ++i) {
    LinTerm row{{L.F(i), 1.0}};
    for (int j = 1; j < i; ++j) row.push_back({L.Rf(j, i), 1.0});
    for (int k = i + 1; k <= K; ++k) row.push_back({L.Rf(i, k), -1.0});
    m.linear.push_back({row, Rel::EQ, 1.0});
  }
}

// ---------------------------------------------------------------------------
// relative-position definitions, big-M'd against the selector C^k_{ji}:
//   |d{x,y}^d_{ki} - {x,y}_j^d + {x,y}_i^d| <= 2B (1 - C^k_{ji})
// plus the exact motor rows dx^d_{11} = dx^d_{21} = x_1^d - XC (same for y).
// Rows: 2 coords * 2 sides * (2 k P T) pair rows + 4 T motor equalities.

inline void add_distance_definitions(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const double twoB = 2 * ctx.spec.workspace;
  for (int k = 1; k <= 2; ++k)
    for (int i = 2; i <= L.K; ++i)
      for (int d = 1; d <= L.T; ++d)
        for (int j = 1; j < i; ++j) {
          auto both = [&](int dvar, int pj, int pi) {
            m.linear.push_back({{{dvar, 1.0}, {pj, -1.0}, {pi, 1.0},
                                 {L.Ck(k, j, i), twoB}}, Rel::LE, twoB});
            m.linear.push_back({{{dvar, 1.0}, {pj, -1.0}, {pi, 1.0},
                                 {L.Ck(k, j, i), -twoB}}, Rel::GE, -twoB});
          };
          both(L.DX(k, i, d), L.X(j, d), L.X(i, d));
          both(L.DY(k, i, d), L.Y(j, d), L.Y(i, d));
        }
  for (int d = 1; d <= L.T; ++d)
    for (int k = 1; k <= 2; ++k) {
      m.linear.push_back({{{L.DX(k, 1, d), 1.0}, {L.X(1, d), -1.0}, {L.XC(), 1.0}},
                          Rel::EQ, 0.0});
      m.linear.push_back({{{L.DY(k, 1, d), 1.0}, {L.Y(1, d), -1.0}, {L.YC(), 1.0}},
                          Rel::EQ, 0.0});
    }
}

// ---------------------------------------------------------------------------
// chordal over-estimator of var^2: fresh weights lam_1..lam_S >= 0 with
// sum lam = 1, var = sum lam_s alpha_s, tilde = sum lam_s alpha_s^2, and the
// weights declared SOS2. Returns the tilde variable; *lam_base receives the
// slot of lam_1.

inline int add_pwl_square(MicpModel& m, const PwlGrid& grid, int var,
                          const std::string& name, int* lam_base = nullptr) {
  const int S = grid.size();
  const double B2 = grid.squares.front();  // breakpoints are symmetric, alpha_1^2 = B^2
  const int tilde = m.add_var("t" + name, 0, B2);
  const int base = m.num_vars();
  if (lam_base) *lam_base = base;
  SosSet set{2, {}};
  for (int s = 0; s < S; ++s)
    set.vars.push_back(m.add_var("l" + name + "_" + std::to_string(s + 1), 0, 1));
  LinRow conv{{}, Rel::EQ, 1.0};
  LinRow interp{{{var, 1.0}}, Rel::EQ, 0.0};
  LinRow square{{{tilde, 1.0}}, Rel::EQ, 0.0};
  for (int s = 0; s < S; ++s) {
    conv.coefs.push_back({base + s, 1.0});
    interp.coefs.push_back({base + s, -grid.breakpoints[s]});
    square.coefs.push_back({base + s, -grid.squares[s]});
  }
  m.linear.push_back(std::move(conv));
  m.linear.push_back(std::move(interp));
  m.linear.push_back(std::move(square));
  m.sos.push_back(std::move(set));
  return tilde;
}

inline void add_pwl_bounds(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  VariableLayout& L = ctx.layout;
  for (int k = 1; k <= 2; ++k)
    for (int i = 1; i <= L.K; ++i)
      for (int d = 1; d <= L.T; ++d) {
        L.tdx_idx[k][i][d] = add_pwl_square(m, ctx.grid, L.DX(k, i, d),
                                            idx3("dx", k, i, d),
                                            &L.lam_dx_base[k][i][d]);
        L.tdy_idx[k][i][d] = add_pwl_square(m, ctx.grid, L.DY(k, i, d),
                                            idx3("dy", k, i, d),
                                            &L.lam_dy_base[k][i][d]);
      }
}

// ---------------------------------------------------------------------------
// equidistance: fixed nodes pinned across timesteps, and each relative vector
// bounded by the other timestep's tilde pair. Quads: K T immobility + 4 K T
// pair constraints.

inline void add_equidistant_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const double M = ctx.bigm();
  for (int i = 1; i <= L.K; ++i)
    for (int d = 1; d <= L.T; ++d) {
      const int dn = L.next_timestep(d);
      QuadCon still;
      still.terms.push_back({{{L.X(i, d), 1.0}, {L.X(i, dn), -1.0}}, 0.0});
      still.terms.push_back({{{L.Y(i, d), 1.0}, {L.Y(i, dn), -1.0}}, 0.0});
      still.rhs_lin = {{L.F(i), -M}};
      still.rhs_const = M;
      m.quads.push_back(std::move(still));
      for (int k = 1; k <= 2; ++k) {
        auto pair_con = [&](int da, int db) {
          QuadCon q;
          q.terms.push_back({{{L.DX(k, i, da), 1.0}}, 0.0});
          q.terms.push_back({{{L.DY(k, i, da), 1.0}}, 0.0});
          q.rhs_lin = {{L.TDX(k, i, db), 1.0}, {L.TDY(k, i, db), 1.0}, {L.F(i), M}};
          q.rhs_const = 0.0;
          m.quads.push_back(std::move(q));
        };
        pair_con(dn, d);  // ||d^{d+1}||^2 <= tilde^d + big-M
        pair_con(d, dn);  // time-mirrored twin
      }
    }
}

// ---------------------------------------------------------------------------
// minimum rod length: tdx + tdy >= l_min^2 - (8B^2 + l_min^2) F_i.
// Rows: 2 K T.

inline void add_min_length_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const double l2 = ctx.spec.min_rod_length * ctx.spec.min_rod_length;
  const double slack = ctx.bigm() + l2;
  for (int k = 1; k <= 2; ++k)
    for (int i = 1; i <= L.K; ++i)
      for (int d = 1; d <= L.T; ++d)
        m.linear.push_back({{{L.TDX(k, i, d), 1.0}, {L.TDY(k, i, d), 1.0},
                             {L.F(i), slack}}, Rel::GE, l2});
}

// ---------------------------------------------------------------------------
// sector-based non-singularity: per movable node and timestep one of the 2S
// double-cover sectors is selected (SOS1 + sum-to-one), and the four big-M'd
// inner products confine d1 to the sector and d2 to the eps-separated wedge.
// Rows: (K-1) T (8S + 1); SOS1 sets: (K-1) T.

inline void add_sector_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const double M = std::sqrt(ctx.bigm());  // 2*sqrt(2)*B bounds each inner product
  const int twoS = 2 * L.S;
  for (int i = 2; i <= L.K; ++i)
    for (int d = 1; d <= L.T; ++d) {
      for (int l = 1; l <= twoS; ++l) {
        const auto& sec = ctx.sectors.sectors[l - 1];
        const int g = L.Gamma(l, i, d);
        auto ge = [&](const Vec2& n, int vx, int vy) {
          m.linear.push_back({{{vx, n.x}, {vy, n.y}, {g, -M}, {L.F(i), M}},
                              Rel::GE, -M});
        };
        auto le = [&](const Vec2& n, int vx, int vy) {
          m.linear.push_back({{{vx, n.x}, {vy, n.y}, {g, M}, {L.F(i), -M}},
                              Rel::LE, M});
        };
        ge(sec.d1_lo, L.DX(1, i, d), L.DY(1, i, d));
        le(sec.d1_hi, L.DX(1, i, d), L.DY(1, i, d));
        ge(sec.d2_lo, L.DX(2, i, d), L.DY(2, i, d));
        le(sec.d2_hi, L.DX(2, i, d), L.DY(2, i, d));
      }
      LinRow sum{{}, Rel::EQ, 1.0};
      SosSet set{1, {}};
      for (int l = 1; l <= twoS; ++l) {
        sum.coefs.push_back({L.Gamma(l, i, d), 1.0});
        set.vars.push_back(L.Gamma(l, i, d));
      }
      m.linear.push_back(std::move(sum));
      m.sos.push_back(std::move(set));
    }
}

// ---------------------------------------------------------------------------
// rotation ordering: consecutive motor offsets are one CCW or one CW step of
// 2 pi / T apart, selected by the binary D. Quads: 2 (T-1).

inline void add_rotation_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const double M = ctx.bigm();
  const double step = 2 * M_PI / L.T;
  for (int d = 1; d < L.T; ++d) {
    auto rot_con = [&](double angle, double dsign, double dconst) {
      const double c = std::cos(angle), s = std::sin(angle);
      QuadCon q;
      q.terms.push_back({{{L.DX(1, 1, d), c}, {L.DY(1, 1, d), -s},
                          {L.DX(1, 1, d + 1), -1.0}}, 0.0});
      q.terms.push_back({{{L.DX(1, 1, d), s}, {L.DY(1, 1, d), c},
                          {L.DY(1, 1, d + 1), -1.0}}, 0.0});
      q.rhs_lin = {{L.D(), dsign * M}};
      q.rhs_const = dconst * M;
      m.quads.push_back(std::move(q));
    };
    rot_con(step, 1.0, 0.0);    // ||R(2pi/T) d^d - d^{d+1}||^2 <= 8B^2 D
    rot_con(-step, -1.0, 1.0);  // ||R(-2pi/T) d^d - d^{d+1}||^2 <= 8B^2 (1-D)
  }
}

// ---------------------------------------------------------------------------
// objective: sum_d ||n_K^d - n_K^{d*}||^2 + w sum_i U_i.

inline void set_objective(BuildContext& ctx) {
  QuadObjective o;
  const VariableLayout& L = ctx.layout;
  for (int d = 1; d <= L.T; ++d) {
    const Vec2 t = ctx.spec.target[d - 1];
    o.quad.push_back({L.X(L.K, d), L.X(L.K, d), 1.0});
    o.quad.push_back({L.Y(L.K, d), L.Y(L.K, d), 1.0});
    o.lin.push_back({L.X(L.K, d), -2 * t.x});
    o.lin.push_back({L.Y(L.K, d), -2 * t.y});
    o.constant += norm2(t);
  }
  for (int i = 1; i <= L.K; ++i) o.lin.push_back({L.U(i), ctx.spec.rod_weight});
  ctx.model.objective = std::move(o);
}

// ---------------------------------------------------------------------------
// optional user constraints: pinned motor center, pinned per-node positions
// (which also force F_i = 1), convex CCW containment polygon applied to every
// node except the end-effector.

inline void add_user_constraints(BuildContext& ctx) {
  MicpModel& m = ctx.model;
  const VariableLayout& L = ctx.layout;
  const UserConstraints& uc = ctx.spec.constraints;
  if (uc.motor_center) {
    m.fix_var(L.XC(), uc.motor_center->x);
    m.fix_var(L.YC(), uc.motor_center->y);
  }
  for (auto& [i, p] : uc.fixed_nodes) {
    m.fix_var(L.F(i), 1.0);
    for (int d = 1; d <= L.T; ++d) {
      m.fix_var(L.X(i, d), p.x);
      m.fix_var(L.Y(i, d), p.y);
    }
  }
  const auto& poly = uc.containment_polygon;
  if (!poly.empty()) {
    if (poly.size() < 3)
      throw std::invalid_argument("containment polygon needs >= 3 vertices");
    const int n = (int)poly.size();
    for (int e = 0; e < n; ++e) {
      const Vec2 a = poly[e], b = poly[(e + 1) % n], c = poly[(e + 2) % n];
      if (cross(b - a, c - b) <= 0)
        throw std::invalid_argument("containment polygon must be convex and CCW");
    }
    for (int e = 0; e < n; ++e) {
      const Vec2 a = poly[e], b = poly[(e + 1) % n];
      const Vec2 edge = b - a;
      // inside test: cross(edge, p - a) >= 0
      for (int i = 1; i < L.K; ++i)
        for (int d = 1; d <= L.T; ++d)
          m.linear.push_back({{{L.X(i, d), -edge.y}, {L.Y(i, d), edge.x}},
                              Rel::GE, -edge.y * a.x + edge.x * a.y});
    }
  }
}

// ---------------------------------------------------------------------------

inline std::pair<MicpModel, VariableLayout> build_model(const ProblemSpec& spec) {
  if (auto bad = validate_spec(spec); !bad.empty()) {
    std::string msg = "invalid problem spec:";
    for (auto& s : bad) msg += " " + s + ";";
    throw std::invalid_argument(msg);
  }
  MicpModel model;
  VariableLayout layout;
  layout.K = spec.max_nodes;
  layout.S = spec.resolution;
  layout.T = spec.timesteps;
  BuildContext ctx{model, layout, spec,
                   PwlGrid(spec.workspace, spec.resolution),
                   SectorTable(spec.resolution, spec.min_angle)};
  declare_variables(ctx);
  add_state_constraints(ctx);
  add_connectivity_constraints(ctx);
  add_flow_constraints(ctx);
  add_reverse_flow_constraints(ctx);
  add_distance_definitions(ctx);
  add_pwl_bounds(ctx);
  add_equidistant_constraints(ctx);
  add_min_length_constraints(ctx);
  add_sector_constraints(ctx);
  add_rotation_constraints(ctx);
  set_objective(ctx);
  add_user_constraints(ctx);
  return {std::move(model), std::move(layout)};
}

}  // namespace linkforge::micp
