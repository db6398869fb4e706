"""Dense two-phase simplex for ``min c^T x  s.t.  A x <= b,  x >= 0``.

Dual convention: ``duals`` holds one multiplier ``y_i <= 0`` per inequality
row, such that at an optimum ``A^T y <= c`` and ``b^T y == c^T x``. The
nonnegative Lagrange multiplier of row ``i`` is therefore ``-y_i``.

Pivoting uses Dantzig's most-negative reduced cost. After a run of
degenerate pivots the solver switches to Bland's smallest-index rule and
stays there until a pivot makes strict progress; cycling can only happen
inside a degenerate run, and Bland's rule cannot cycle, so the method
terminates.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape != (b.size, c.size):
            raise ValueError(f"inconsistent LP shapes: A {A.shape}, b {b.shape}, c {c.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def shape(self):
        return self.A.shape

    def dump(self, fh: TextIO) -> None:
        """Plain-text form: header, objective row, then one row per constraint.

        ::

            lp <rows> <cols>
            min c_1 ... c_n
            a_11 ... a_1n <= b_1
        """
        m, n = self.A.shape
        fh.write(f"lp {m} {n}\n")
        fh.write("min " + " ".join(f"{v:.17g}" for v in self.c) + "\n")
        for row, rhs in zip(self.A, self.b):
            fh.write(" ".join(f"{v:.17g}" for v in row) + f" <= {rhs:.17g}\n")

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            self.dump(fh)

    @classmethod
    def load(cls, path: str | Path) -> "LinearProgram":
        with open(path) as fh:
            header = fh.readline().split()
            if header[0] != "lp":
                raise ValueError(f"{path}: not an LP dump")
            m, n = int(header[1]), int(header[2])
            obj = fh.readline().split()
            c = np.array([float(v) for v in obj[1:]])
            A = np.empty((m, n))
            b = np.empty(m)
            for i in range(m):
                lhs, rhs = fh.readline().split("<=")
                A[i] = [float(v) for v in lhs.split()]
                b[i] = float(rhs)
        return cls(c, A, b)


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    iterations: int
    basis: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _pivot(T, rhs, d, basis, r, j):
    piv = T[r, j]
    T[r] /= piv
    rhs[r] /= piv
    f = T[:, j].copy()
    f[r] = 0.0
    T -= np.outer(f, T[r])
    rhs -= f * rhs[r]
    d -= d[j] * T[r]
    basis[r] = j


def _simplex(T, rhs, basis, cost, allowed, max_iter, degenerate_limit=30):
    d = cost - cost[basis] @ T
    d[basis] = 0.0
    dtol = 1e-11 * (1.0 + np.max(np.abs(cost)))
    ptol = 1e-10
    bland = False
    run = 0
    it = 0
    while True:
        cand = np.flatnonzero(allowed & (d < -dtol))
        if cand.size == 0:
            return "optimal", it
        if it >= max_iter:
            raise LpSolverError(f"simplex did not converge in {max_iter} pivots")
        j = cand[0] if bland else cand[np.argmin(d[cand])]
        col = T[:, j]
        rows = np.flatnonzero(col > ptol * max(1.0, np.max(np.abs(col))))
        if rows.size == 0:
            return "unbounded", it
        ratios = np.maximum(rhs[rows], 0.0) / col[rows]
        rmin = ratios.min()
        ties = rows[ratios <= rmin + 1e-12 * (1.0 + rmin)]
        r = ties[np.argmin(basis[ties])]
        _pivot(T, rhs, d, basis, r, j)
        rhs[(rhs < 0) & (rhs > -1e-12)] = 0.0
        it += 1
        if rmin <= 1e-13:
            run += 1
            if run >= degenerate_limit:
                bland = True
        else:
            run = 0
            bland = False


def solve_lp(lp: LinearProgram, feas_tol: float = 1e-9, max_iter: int | None = None) -> LpSolution:
    m, n = lp.A.shape
    scale = np.max(np.abs(lp.A), axis=1) if n else np.ones(m)
    scale = np.where(scale > 0, 1.0 / np.where(scale > 0, scale, 1.0), 1.0)
    As = lp.A * scale[:, None]
    bs = lp.b * scale
    sign = np.where(bs < 0, -1.0, 1.0)
    art_rows = np.flatnonzero(sign < 0)
    na = art_rows.size
    N = n + m + na
    T = np.zeros((m, N))
    T[:, :n] = As * sign[:, None]
    T[:, n:n + m] = np.diag(sign)
    T[art_rows, n + m + np.arange(na)] = 1.0
    rhs = bs * sign
    basis = np.arange(n, n + m)
    basis[art_rows] = n + m + np.arange(na)
    max_iter = max_iter or 50 * (m + n + 10)
    iters = 0

    if na:
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        _, it = _simplex(T, rhs, basis, cost1, np.ones(N, dtype=bool), max_iter)
        iters += it
        infeas = float(cost1[basis] @ rhs)
        if infeas > feas_tol * (1.0 + np.max(np.abs(bs))):
            return LpSolution(LpStatus.INFEASIBLE, None, np.nan, None, iters)
        for r in np.flatnonzero(basis >= n + m):
            row = np.abs(T[r, :n + m])
            j = int(np.argmax(row))
            if row[j] <= 1e-9:
                raise LpSolverError(f"redundant constraint row {r} after phase 1")
            d_dummy = np.zeros(N)
            _pivot(T, rhs, d_dummy, basis, r, j)
        rhs[rhs < 0] = 0.0

    cost2 = np.zeros(N)
    cost2[:n] = lp.c
    allowed = np.zeros(N, dtype=bool)
    allowed[:n + m] = True
    status, it = _simplex(T, rhs, basis, cost2, allowed, max_iter)
    iters += it
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, None, -np.inf, None, iters)

    # Recompute primal and dual values from the final basis to shed pivot drift.
    S = np.zeros((m, n + m))
    S[:, :n] = As
    S[:, n:] = np.eye(m)
    B = S[:, basis]
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > 1e13:
        raise LpSolverError(f"numerically singular basis (cond={cond:.3g}, basis={basis.tolist()})")
    xb = np.linalg.solve(B, bs)
    xb += np.linalg.solve(B, bs - B @ xb)
    if np.any(xb < -1e-7 * (1.0 + np.max(np.abs(xb)))):
        raise LpSolverError(f"basis lost primal feasibility (min {xb.min():.3g})")
    full = np.zeros(n + m)
    full[basis] = np.maximum(xb, 0.0)
    x = full[:n]
    ys = np.linalg.solve(B.T, cost2[basis])
    y = ys * scale
    return LpSolution(LpStatus.OPTIMAL, x, float(lp.c @ x), y, iters, basis.copy())


def kkt_residuals(lp: LinearProgram, sol: LpSolution) -> dict:
    """Optimality certificate residuals of an optimal solution.

    Keys: ``primal`` (max violation of Ax <= b, x >= 0), ``dual`` (max
    violation of A^T y <= c, y <= 0), ``slackness`` (max of |y_i s_i| and
    |x_j r_j|, with slacks s and reduced costs r) and ``gap`` (|c^T x - b^T y|).
    """
    x, y = sol.x, sol.duals
    slack = lp.b - lp.A @ x
    reduced = lp.c - lp.A.T @ y
    primal = max(float(np.max(-slack, initial=0.0)), float(np.max(-x, initial=0.0)))
    dual = max(float(np.max(-reduced, initial=0.0)), float(np.max(y, initial=0.0)))
    slackness = max(float(np.max(np.abs(y * slack), initial=0.0)),
                    float(np.max(np.abs(x * reduced), initial=0.0)))
    gap = abs(float(lp.c @ x - lp.b @ y))
    return {"primal": primal, "dual": dual, "slackness": slackness, "gap": gap}
