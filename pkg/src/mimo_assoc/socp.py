"""Log-barrier interior-point solver for small second-order cone programs.

Problem form::

    minimize    x^T diag(q) x + f^T x
    subject to  ||A_j x + b_j|| <= c_j^T x + d_j      for every cone j

Each cone carries the barrier ``-log((c_j^T x + d_j)^2 - ||A_j x + b_j||^2)``
(barrier parameter 2). A phase-I problem with one extra slack variable finds
a strictly feasible start or certifies infeasibility.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls


class SocpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"        # phase I only: strictly feasible point found
    INFEASIBLE = "infeasible"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class Cone:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float


@dataclass
class SOCProgram:
    quad: np.ndarray
    lin: np.ndarray
    cones: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.quad.size

    def add_cone(self, A, b, c, d) -> None:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.size == 0:
            A = np.zeros((1, self.n))
            b = np.zeros(1)
        self.cones.append(Cone(A, np.asarray(b, float).ravel(), np.asarray(c, float).ravel(),
                               float(d)))

    def objective(self, x) -> float:
        return float(x @ (self.quad * x) + self.lin @ x)

    def margins(self, x) -> np.ndarray:
        """c^T x + d - ||A x + b|| per cone (>= 0 when feasible)."""
        return np.array([cn.c @ x + cn.d - np.linalg.norm(cn.A @ x + cn.b) for cn in self.cones])


@dataclass(frozen=True)
class SocpSolution:
    status: SocpStatus
    x: np.ndarray | None
    objective: float
    certificate: dict
    newton_steps: int


class _Stacked:
    """Cones stacked into one matrix for vectorised barrier evaluation."""

    def __init__(self, prog: SOCProgram):
        cones = prog.cones
        self.m = len(cones)
        self.A = np.vstack([cn.A for cn in cones])
        self.b = np.concatenate([cn.b for cn in cones])
        self.C = np.array([cn.c for cn in cones])
        self.d = np.array([cn.d for cn in cones])
        sizes = np.array([cn.A.shape[0] for cn in cones])
        self.starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.segment = np.repeat(np.arange(self.m), sizes)
        # A^T A - c c^T per cone
        self.P = np.array([cn.A.T @ cn.A - np.outer(cn.c, cn.c) for cn in cones])

    def evaluate(self, x):
        y = self.A @ x + self.b
        s = self.C @ x + self.d
        D = s ** 2 - np.add.reduceat(y ** 2, self.starts)
        return y, s, D

    def feasible(self, x) -> bool:
        _, s, D = self.evaluate(x)
        return bool(np.all(s > 0) and np.all(D > 0))

    def barrier(self, x) -> float:
        _, s, D = self.evaluate(x)
        if np.any(s <= 0) or np.any(D <= 0):
            return np.inf
        return float(-np.sum(np.log(D)))

    def derivatives(self, x):
        y, s, D = self.evaluate(x)
        Aty = np.add.reduceat(self.A * y[:, None], self.starts, axis=0)   # (m, n)
        V = Aty - s[:, None] * self.C
        w = 2.0 / D
        grad = w @ V
        hess = np.tensordot(w, self.P, axes=1) + (V.T * (w ** 2)) @ V
        return grad, hess, y, s, D


def _newton_center(prog, st, x, t, max_steps=200, tol=1e-12, stop=None):
    """Minimise t * f0 + barrier from a strictly feasible x."""
    q2 = 2.0 * prog.quad
    steps = 0

    def merit(z):
        bar = st.barrier(z)
        return np.inf if not np.isfinite(bar) else t * prog.objective(z) + bar

    fx = merit(x)
    while steps < max_steps:
        gb, hb, *_ = st.derivatives(x)
        g = t * (q2 * x + prog.lin) + gb
        H = hb + np.diag(t * q2)
        try:
            L = np.linalg.cholesky(H)
            dx = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(H, g, rcond=None)[0]
        dec = float(-g @ dx)
        steps += 1
        # the merit is O(t |f0|); an absolute test cannot be met once t is large
        if dec / 2.0 <= max(tol, 1e-16 * abs(fx)):
            return x, steps, True
        if dec < 0.25 and st.feasible(x + dx):
            # quadratic region of a self-concordant merit: full steps, no
            # line search (merit differences are below rounding here)
            x = x + dx
            fx = merit(x)
            if stop is not None and stop(x):
                return x, steps, True
            continue
        a = 1.0
        while a > 1e-14:
            xn = x + a * dx
            fn = merit(xn)
            if fn <= fx - 0.25 * a * dec:
                break
            a *= 0.5
        else:
            return x, steps, True
        x, fx = xn, fn
        if stop is not None and stop(x):
            return x, steps, True
    return x, steps, False


def certificate(prog: SOCProgram, x, t) -> dict:
    """Primal/dual residuals at a near-central point with barrier weight t.

    The barrier multipliers are only as accurate as the centering, which
    degrades as t grows. They are polished by fixing each cone's dual
    direction from complementarity, ``w_j = -lam_j y_j / ||y_j||`` and
    ``v_j = lam_j``, and fitting ``lam >= 0`` to stationarity by NNLS.
    """
    st = _Stacked(prog)
    y, s, D = st.evaluate(x)
    grad_f = 2.0 * prog.quad * x + prog.lin
    ynorm = np.sqrt(np.add.reduceat(y ** 2, st.starts))
    unit = y / np.where(ynorm > 0, ynorm, 1.0)[st.segment]
    # column j: c_j - A_j^T y_j / ||y_j||
    G = (st.C - np.add.reduceat(st.A * unit[:, None], st.starts, axis=0)).T
    lam_barrier = 2.0 * s / (t * D)
    lam, _ = nnls(G, grad_f, maxiter=50 * st.m)
    res_b = np.linalg.norm(grad_f - G @ lam_barrier)
    res_p = np.linalg.norm(grad_f - G @ lam)
    if res_b < res_p:
        lam = lam_barrier
    stationarity = float(min(res_b, res_p) / (1.0 + np.linalg.norm(grad_f)))
    return {
        "primal": float(np.max(np.maximum(ynorm - s, 0.0))),
        "dual": 0.0,
        "stationarity": stationarity,
        "gap": float(np.sum(lam * (s - ynorm))),
        "multipliers": lam,
    }


def find_feasible(prog: SOCProgram, mu: float = 20.0, gap_tol: float = 1e-11,
                  max_outer: int = 80):
    """Phase I: minimise a common slack s with ||A x + b|| <= c^T x + d + s.

    Returns (status, x, s_best). FEASIBLE once s < 0; INFEASIBLE when the
    slack optimum is certified nonnegative.
    """
    n = prog.n
    aug = SOCProgram(np.zeros(n + 1), np.append(np.zeros(n), 1.0))
    x0 = np.zeros(n)
    s0 = max(np.linalg.norm(cn.b) - cn.d for cn in prog.cones) + 1.0
    for cn in prog.cones:
        aug.add_cone(np.hstack([cn.A, np.zeros((cn.A.shape[0], 1))]), cn.b,
                     np.append(cn.c, 1.0), cn.d)
    floor = abs(s0) + 1.0 + max(abs(cn.d) for cn in prog.cones)
    aug.add_cone(np.zeros((0, n + 1)), np.zeros(0), np.append(np.zeros(n), 1.0), floor)
    st = _Stacked(aug)
    z = np.append(x0, s0)
    t = 1.0
    total = 0
    for _ in range(max_outer):
        z, steps, _ = _newton_center(aug, st, z, t, stop=lambda zz: zz[-1] < 0)
        total += steps
        if z[-1] < 0:
            return SocpStatus.FEASIBLE, z[:-1], float(z[-1]), total
        gap = 2.0 * st.m / t
        if z[-1] - gap > 0:
            return SocpStatus.INFEASIBLE, None, float(z[-1]), total
        if gap < gap_tol:
            return SocpStatus.INFEASIBLE, None, float(z[-1]), total
        t *= mu
    return SocpStatus.MAX_ITER, None, float(z[-1]), total


def solve_socp(prog: SOCProgram, x0=None, eps: float = 1e-8, mu: float = 20.0,
               max_outer: int = 80, gap_floor: float = 1e-15) -> SocpSolution:
    """Barrier method; stops once the duality gap 2m/t <= max(eps * |f0|, gap_floor).

    The test is relative: power-minimisation optima range from microwatts to
    tens of Watts.
    """
    steps = 0
    if x0 is None or not _Stacked(prog).feasible(np.asarray(x0, float)):
        status, x0, s, steps = find_feasible(prog)
        if status is not SocpStatus.FEASIBLE:
            return SocpSolution(status, None, np.nan, {"phase1_slack": s}, steps)
    st = _Stacked(prog)
    x = np.asarray(x0, dtype=float)
    m = st.m
    t = 2.0 * m / max(abs(prog.objective(x)), 1e-6)
    for _ in range(max_outer):
        x, k, ok = _newton_center(prog, st, x, t)
        steps += k
        f = prog.objective(x)
        if ok and 2.0 * m / t <= max(eps * abs(f), gap_floor):
            return SocpSolution(SocpStatus.OPTIMAL, x, f, certificate(prog, x, t), steps)
        t *= mu
    return SocpSolution(SocpStatus.MAX_ITER, x, prog.objective(x), certificate(prog, x, t), steps)
