"""Brute-force vertex enumeration for small LPs; freezes reference optima.

For ``min c^T x  s.t.  A x <= b, x >= 0`` with A of shape (m, n), every
vertex is a basic feasible solution of ``[A I] z = b, z >= 0``. All
C(m + n, m) bases are solved in batches and the best feasible objective is
kept. Used offline for the 10 x 20 reference programs in
``tests/data/lp_vertex_oracle.json`` (about a minute per program).

    python3 scripts/lp_vertex_oracle.py --count 5 --out tests/data/lp_vertex_oracle.json
"""
from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

import numpy as np


def random_lp(rng: np.random.Generator, m: int, n: int):
    """Feasible and bounded: b = A x0 + u with x0, u >= 0 and c > 0."""
    A = rng.standard_normal((m, n))
    x0 = rng.uniform(0.0, 1.0, n)
    b = A @ x0 + rng.uniform(0.0, 0.5, m)
    c = rng.uniform(0.1, 1.0, n)
    return c, A, b


def combinations_chunks(N: int, k: int, size: int):
    """All k-subsets of range(N) in lexicographic order, as int arrays of rows."""
    idx = np.arange(k)
    buf = []
    while True:
        buf.append(idx.copy())
        if len(buf) == size:
            yield np.array(buf)
            buf = []
        i = k - 1
        while i >= 0 and idx[i] == N - k + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        idx[i + 1:] = idx[i] + np.arange(1, k - i)
    if buf:
        yield np.array(buf)


def _chunks_fast(N: int, k: int, size: int):
    """Same subsets as combinations_chunks, generated per fixed prefix for speed."""
    from itertools import combinations, islice
    it = combinations(range(N), k)
    while True:
        block = np.fromiter((v for combo in islice(it, size) for v in combo), dtype=np.int64)
        if block.size == 0:
            return
        yield block.reshape(-1, k)


def enumerate_vertices(c, A, b, tol: float = 1e-9, chunk: int = 200_000):
    """(best objective, best x, number of feasible vertices); objective inf if none."""
    m, n = A.shape
    S = np.hstack([A, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m)])
    best, best_z, count = np.inf, None, 0
    for basis in _chunks_fast(n + m, m, chunk):
        Bm = S[:, basis].transpose(1, 0, 2)                   # (batch, m, m)
        det = np.linalg.det(Bm)
        ok = np.abs(det) > 1e-10
        basis, Bm = basis[ok], Bm[ok]
        zb = np.linalg.solve(Bm, np.broadcast_to(b, (len(Bm), m))[..., None])[..., 0]
        feas = np.all(zb >= -tol * (1.0 + np.abs(b).max()), axis=1)
        if not feas.any():
            continue
        count += int(feas.sum())
        obj = np.sum(cost[basis[feas]] * zb[feas], axis=1)
        j = int(np.argmin(obj))
        if obj[j] < best:
            best = float(obj[j])
            z = np.zeros(n + m)
            z[basis[feas][j]] = zb[feas][j]
            best_z = z
    return best, (None if best_z is None else best_z[:n]), count


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--rows", type=int, default=10)
    ap.add_argument("--cols", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", type=Path, default=Path("tests/data/lp_vertex_oracle.json"))
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    cases = []
    for i in range(args.count):
        c, A, b = random_lp(rng, args.rows, args.cols)
        t0 = time.time()
        obj, x, nv = enumerate_vertices(c, A, b)
        print(f"program {i}: objective {obj:.12g}, {nv} feasible vertices, {time.time() - t0:.1f}s",
              flush=True)
        cases.append({"c": c.tolist(), "A": A.tolist(), "b": b.tolist(), "objective": obj,
                      "x": x.tolist(), "feasible_vertices": nv})
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps({"seed": args.seed, "method": "vertex enumeration",
                                    "cases": cases}, indent=1))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
