"""Tensor grids and zero-crossing snapping for desk-scale brute force."""

from __future__ import annotations

from typing import Sequence

import numpy as np

BISECTION_TOL = 1e-12


def tensor_grid(lower, upper, resolution) -> tuple:
    """Returns ``(points, axes)``; ``resolution`` is the point count per coordinate."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = len(lower)
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (n,))
    axes = [np.linspace(lower[i], upper[i], int(res[i])) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), axes


def bisect_segments(fn, left: np.ndarray, right: np.ndarray, tol: float = BISECTION_TOL):
    """Vectorized bisection of sign changes; returns both bracket endpoints.

    ``fn`` maps an ``(m, n)`` array to ``(m,)`` values and ``fn(left) * fn(right) < 0``.
    """
    lo, hi = left.copy(), right.copy()
    flo = fn(lo)
    for _ in range(200):
        width = np.max(np.abs(hi - lo), axis=1)
        if np.all(width <= tol * (1.0 + np.max(np.abs(lo), axis=1))):
            break
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        same = np.sign(fmid) == np.sign(flo)
        lo = np.where(same[:, None], mid, lo)
        flo = np.where(same, fmid, flo)
        hi = np.where(same[:, None], hi, mid)
    return lo, hi


def _affine_differences(f):
    conv = [p.affine for p in f.convex_pieces]
    conc = [p.affine for p in f.concave_pieces] or [(np.zeros(f.dimension), 0.0)]
    return [(a - c, b - d) for a, b in conv for c, d in conc]


def _piece_roots(f, left: np.ndarray, right: np.ndarray, ax: int) -> np.ndarray:
    """Roots along axis ``ax`` of every piece difference of a piecewise-affine ``f``.

    Solving for the coordinate directly often lands exactly on the zero set, which
    bisection never does; shared zero sets (``x`` and ``-x``) need such points.
    """
    out = []
    lo = np.minimum(left[:, ax], right[:, ax])
    hi = np.maximum(left[:, ax], right[:, ax])
    for a, b in _affine_differences(f):
        if a[ax] == 0:
            continue
        rest = left @ a - left[:, ax] * a[ax] + b
        root = -rest / a[ax]
        ok = (root >= lo) & (root <= hi)
        if np.any(ok):
            pts = left[ok].copy()
            pts[:, ax] = root[ok]
            out.append(pts)
    return np.vstack(out) if out else np.zeros((0, left.shape[1]))


def zero_crossings(handles: Sequence, lower, upper, resolution) -> np.ndarray:
    """Bracket endpoints of every sign change of every handle along grid lines,
    plus exact piece roots for piecewise-affine handles."""
    points, axes = tensor_grid(lower, upper, resolution)
    n = points.shape[1]
    shape = tuple(len(a) for a in axes)
    grid = points.reshape(shape + (n,))
    found = []
    for f in handles:
        vals = np.asarray(f.evaluate(points), dtype=float).reshape(shape)
        for ax in range(n):
            if shape[ax] < 2:
                continue
            a = np.take(vals, range(shape[ax] - 1), axis=ax)
            b = np.take(vals, range(1, shape[ax]), axis=ax)
            # a grid point exactly on the zero set still needs a snap on its open side
            mask = (a * b < 0) | ((a == 0) != (b == 0))
            if not np.any(mask):
                continue
            left = np.take(grid, range(shape[ax] - 1), axis=ax)[mask]
            right = np.take(grid, range(1, shape[ax]), axis=ax)[mask]
            lo, hi = bisect_segments(lambda X, f=f: np.asarray(f.evaluate(X), dtype=float), left, right)
            found.extend([lo, hi])
            if f.is_piecewise_affine:
                found.append(_piece_roots(f, left, right, ax))
    if not found:
        return np.zeros((0, n))
    return np.unique(np.vstack(found), axis=0)
