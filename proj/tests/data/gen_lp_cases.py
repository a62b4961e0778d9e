#!/usr/bin/env python3
"""Generate LP test cases with reference answers from scipy (HiGHS).

Writes lp_cases.txt next to this script. Rerunning reproduces the same file
(fixed seed). The C++ simplex test parses the file, re-solves every case and
compares status and objective.
"""
import numpy as np
from scipy.optimize import linprog

rng = np.random.default_rng(20260824)
INF = float("inf")


def solve_ref(n, lb, ub, c, rows):
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for rel, rhs, coefs in rows:
        a = np.zeros(n)
        for j, v in coefs:
            a[j] += v
        if rel == "LE":
            A_ub.append(a); b_ub.append(rhs)
        elif rel == "GE":
            A_ub.append(-a); b_ub.append(-rhs)
        else:
            A_eq.append(a); b_eq.append(rhs)
    res = linprog(c,
                  A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.array(b_eq) if b_eq else None,
                  bounds=list(zip(lb, ub)), method="highs")
    if res.status == 0:
        return "optimal", res.fun
    if res.status == 2:
        return "infeasible", 0.0
    if res.status == 3:
        return "unbounded", 0.0
    raise RuntimeError(f"unexpected scipy status {res.status}")


def fmt(v):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return repr(float(v))


cases = []


def add_case(name, n, lb, ub, c, rows):
    status, obj = solve_ref(n, lb, ub, c, rows)
    cases.append((name, n, lb, ub, c, rows, status, obj))


# hand-picked structures
add_case("box_corner", 2, [0, 0], [1, 2], [-1, -2], [("LE", 2.0, [(0, 1), (1, 1)])])
add_case("equality_chain", 3, [0] * 3, [10] * 3, [1, 2, 3],
         [("EQ", 4.0, [(0, 1), (1, 1)]), ("EQ", 3.0, [(1, 1), (2, 1)])])
add_case("free_var", 2, [-INF, 0], [INF, 5], [1, 1],
         [("GE", -3.0, [(0, 1)]), ("LE", 4.0, [(0, 1), (1, 2)])])
add_case("infeasible_box", 2, [0, 0], [1, 1], [1, 1],
         [("GE", 5.0, [(0, 1), (1, 1)])])
add_case("infeasible_eq", 2, [0, 0], [10, 10], [0, 0],
         [("EQ", 1.0, [(0, 1), (1, 1)]), ("EQ", 3.0, [(0, 1), (1, 1)])])
add_case("unbounded_free", 2, [-INF, -INF], [INF, INF], [-1, 0],
         [("LE", 10.0, [(1, 1)])])
add_case("degenerate_vertex", 2, [0, 0], [10, 10], [-1, -1],
         [("LE", 1.0, [(0, 1)]), ("LE", 1.0, [(1, 1)]),
          ("LE", 2.0, [(0, 1), (1, 1)])])

# random dense instances, guaranteed feasible by construction (x0 inside box)
for idx, (m, n) in enumerate([(5, 8), (8, 5), (20, 40), (40, 25), (30, 30)] * 4):
    lb = np.round(rng.uniform(-2, 0, n), 3)
    ub = lb + np.round(rng.uniform(0.5, 3, n), 3)
    x0 = lb + (ub - lb) * rng.uniform(0.2, 0.8, n)
    c = np.round(rng.normal(0, 1, n), 3)
    rows = []
    for r in range(m):
        a = np.round(rng.normal(0, 1, n) * (rng.random(n) < 0.5), 3)
        if not a.any():
            a[rng.integers(n)] = 1.0
        val = float(a @ x0)
        kind = rng.integers(3)
        if kind == 0:
            rows.append(("LE", round(val + abs(rng.normal(0, 0.5)), 6),
                         [(j, a[j]) for j in range(n) if a[j] != 0]))
        elif kind == 1:
            rows.append(("GE", round(val - abs(rng.normal(0, 0.5)), 6),
                         [(j, a[j]) for j in range(n) if a[j] != 0]))
        else:
            rows.append(("EQ", round(val, 6),
                         [(j, a[j]) for j in range(n) if a[j] != 0]))
    add_case(f"random_{idx}", n, list(lb), list(ub), list(c), rows)

# random possibly-infeasible instances (tight equalities, no anchoring point)
for idx in range(6):
    n, m = 6, 9
    lb = [0.0] * n
    ub = [1.0] * n
    c = list(np.round(rng.normal(0, 1, n), 3))
    rows = []
    for r in range(m):
        a = np.round(rng.normal(0, 1, n), 3)
        rows.append(("EQ", round(float(rng.uniform(-2, 2)), 6),
                     [(j, a[j]) for j in range(n) if a[j] != 0]))
    add_case(f"tight_{idx}", n, lb, ub, c, rows)

with open(__file__.replace("gen_lp_cases.py", "lp_cases.txt"), "w") as f:
    f.write(f"CASES {len(cases)}\n")
    for name, n, lb, ub, c, rows, status, obj in cases:
        f.write(f"CASE {name}\n")
        f.write(f"N {n} M {len(rows)}\n")
        f.write("LB " + " ".join(fmt(v) for v in lb) + "\n")
        f.write("UB " + " ".join(fmt(v) for v in ub) + "\n")
        f.write("C " + " ".join(fmt(v) for v in c) + "\n")
        for rel, rhs, coefs in rows:
            f.write(f"R {rel} {fmt(rhs)} {len(coefs)} " +
                    " ".join(f"{j}:{fmt(v)}" for j, v in coefs) + "\n")
        f.write(f"STATUS {status}\n")
        f.write(f"OBJ {fmt(obj)}\n")
print(f"wrote {len(cases)} cases")
