"""Calculus layer for B-differentiable scalar functions.

Every structured function is stored as a difference of two pointwise maxima of
smooth pieces, ``f = max_i p_i - max_j q_j``. A single convex-side piece with an
empty concave side is a smooth function; an empty concave side alone is a
max-of-smooth function; anything else is DC. This form is closed under sums,
scalar multiples, ``max``, ``min`` and ``abs``, so compositions built through the
expression grammar keep exact one-sided directional derivatives.

Directional derivatives at a point are returned as :class:`PLDir` objects,
positively homogeneous piecewise-linear functions of the direction. All cone
LPs in the package consume them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

EPS_ACT = 1e-9
LIPSCHITZ_INFLATION = 1.5


def _as_points(X) -> np.ndarray:
    return np.asarray(X, dtype=float)


class SmoothPiece:
    """A continuously differentiable function of ``n`` variables.

    ``value`` must accept an array of shape ``(..., n)`` and return shape
    ``(...)``; ``grad`` takes one point of shape ``(n,)``.
    """

    __slots__ = ("dimension", "_value", "_grad", "affine", "convex", "label")

    def __init__(
        self,
        dimension: int,
        value: Callable,
        grad: Callable,
        affine: Optional[tuple] = None,
        convex: bool = False,
        label: str = "",
    ):
        self.dimension = int(dimension)
        self._value = value
        self._grad = grad
        if affine is not None:
            a, b = affine
            affine = (np.asarray(a, dtype=float).reshape(self.dimension), float(b))
        self.affine = affine
        self.convex = bool(convex) or affine is not None
        self.label = label

    def value(self, X) -> np.ndarray:
        X = _as_points(X)
        out = np.asarray(self._value(X), dtype=float)
        return np.broadcast_to(out, X.shape[:-1]).astype(float)

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.dimension)
        return np.asarray(self._grad(x), dtype=float).reshape(self.dimension)

    @property
    def is_affine(self) -> bool:
        return self.affine is not None

    @property
    def is_constant(self) -> bool:
        return self.affine is not None and not np.any(self.affine[0])

    # -- constructors -------------------------------------------------------
    @staticmethod
    def make_affine(a, b=0.0, label: str = "") -> "SmoothPiece":
        a = np.asarray(a, dtype=float).ravel()
        b = float(b)

        def value(X, a=a, b=b):
            return X @ a + b

        return SmoothPiece(len(a), value, lambda x, a=a: a.copy(), affine=(a, b), label=label)

    @staticmethod
    def make_constant(c: float, n: int) -> "SmoothPiece":
        return SmoothPiece.make_affine(np.zeros(n), c, label=repr(float(c)))

    # -- algebra ------------------------------------------------------------
    def __add__(self, other: "SmoothPiece") -> "SmoothPiece":
        if self.affine is not None and other.affine is not None:
            return SmoothPiece.make_affine(
                self.affine[0] + other.affine[0], self.affine[1] + other.affine[1]
            )
        p, q = self, other
        return SmoothPiece(
            self.dimension,
            lambda X: p.value(X) + q.value(X),
            lambda x: p.grad(x) + q.grad(x),
            convex=p.convex and q.convex,
        )

    def scale(self, c: float) -> "SmoothPiece":
        c = float(c)
        if self.affine is not None:
            return SmoothPiece.make_affine(c * self.affine[0], c * self.affine[1])
        p = self
        return SmoothPiece(
            self.dimension,
            lambda X: c * p.value(X),
            lambda x: c * p.grad(x),
            convex=p.convex and c >= 0,
        )

    def times(self, other: "SmoothPiece") -> "SmoothPiece":
        if self.is_constant:
            return other.scale(self.affine[1])
        if other.is_constant:
            return self.scale(other.affine[1])
        p, q = self, other
        return SmoothPiece(
            self.dimension,
            lambda X: p.value(X) * q.value(X),
            lambda x: p.value(x) * q.grad(x) + q.value(x) * p.grad(x),
        )

    def embed(self, n_new: int) -> "SmoothPiece":
        """Same function viewed on the first ``dimension`` of ``n_new`` coordinates."""
        n = self.dimension
        if self.affine is not None:
            a = np.zeros(n_new)
            a[:n] = self.affine[0]
            return SmoothPiece.make_affine(a, self.affine[1])
        p = self

        def grad(x):
            g = np.zeros(n_new)
            g[:n] = p.grad(x[:n])
            return g

        return SmoothPiece(n_new, lambda X: p.value(X[..., :n]), grad, convex=p.convex)

    def _key(self):
        if self.affine is None:
            return None
        return (tuple(self.affine[0].tolist()), self.affine[1])


def _dedupe(pieces: Iterable[SmoothPiece]) -> tuple:
    out, seen = [], set()
    for p in pieces:
        k = p._key()
        if k is not None:
            if k in seen:
                continue
            seen.add(k)
        out.append(p)
    return tuple(out)


def _family_sum(A: Sequence[SmoothPiece], B: Sequence[SmoothPiece]) -> tuple:
    """max(A) + max(B) as a single max family; an empty family means zero."""
    if not A:
        return tuple(B)
    if not B:
        return tuple(A)
    return _dedupe(a + b for a in A for b in B)


class PLDir:
    """Positively homogeneous piecewise-linear function ``max_i a_i.v - max_j b_j.v``.

    ``A`` and ``B`` are 2-D arrays with at least one row each.
    """

    __slots__ = ("A", "B")

    def __init__(self, A, B=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[1]
        if B is None or len(B) == 0:
            B = np.zeros((1, n))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        self.A = np.unique(A, axis=0)
        self.B = np.unique(B, axis=0)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @staticmethod
    def zero(n: int) -> "PLDir":
        return PLDir(np.zeros((1, n)))

    @staticmethod
    def linear(a) -> "PLDir":
        return PLDir(np.atleast_2d(a))

    def evaluate(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(np.max(self.A @ v) - np.max(self.B @ v))

    def __call__(self, v) -> float:
        return self.evaluate(v)

    @property
    def is_convex(self) -> bool:
        return self.B.shape[0] == 1 and not np.any(self.B)

    @property
    def concave_count(self) -> int:
        return self.B.shape[0]

    def __add__(self, other: "PLDir") -> "PLDir":
        A = (self.A[:, None, :] + other.A[None, :, :]).reshape(-1, self.n)
        B = (self.B[:, None, :] + other.B[None, :, :]).reshape(-1, self.n)
        return PLDir(A, B)

    def __neg__(self) -> "PLDir":
        return PLDir(self.B, self.A)

    def __sub__(self, other: "PLDir") -> "PLDir":
        return self + (-other)

    def scale(self, c: float) -> "PLDir":
        c = float(c)
        if c >= 0:
            return PLDir(c * self.A, c * self.B)
        return PLDir(-c * self.B, -c * self.A)

    def max0(self) -> "PLDir":
        """max(D, 0) = max(P, Q) - Q for D = P - Q."""
        return PLDir(np.vstack([self.A, self.B]), self.B)

    def monotone_compose(self, slope_right: float, slope_left: float) -> "PLDir":
        """Directional derivative of a monotone univariate map after ``self``.

        ``slope_right`` and ``slope_left`` are the one-sided slopes of the outer
        map, so the result is ``r+ max(D,0) + r- min(D,0)``.
        """
        pos = self.max0()
        neg = (-self).max0()
        return pos.scale(slope_right) + neg.scale(-slope_left)


class FunctionHandle:
    """B-differentiable scalar function in DC-of-max-of-smooth form.

    Black-box handles (``blackbox`` callable, no pieces) support evaluation only.
    """

    def __init__(
        self,
        dimension: int,
        convex_pieces: Sequence[SmoothPiece] = (),
        concave_pieces: Sequence[SmoothPiece] = (),
        blackbox: Optional[Callable] = None,
        lipschitz_hint: Optional[float] = None,
        name: str = "",
    ):
        self.dimension = int(dimension)
        self.convex_pieces = _dedupe(convex_pieces)
        self.concave_pieces = _dedupe(concave_pieces)
        self.blackbox = blackbox
        self.lipschitz_hint = lipschitz_hint
        self.name = name
        if blackbox is None and not self.convex_pieces:
            raise ValueError("structured function needs at least one convex-side piece")
        for p in self.convex_pieces + self.concave_pieces:
            if p.dimension != self.dimension:
                raise ValueError("piece dimension mismatch")

    # -- metadata -----------------------------------------------------------
    @property
    def structure(self) -> str:
        if self.blackbox is not None:
            return "BlackBox"
        if self.concave_pieces:
            return "DC"
        if len(self.convex_pieces) == 1:
            return "Smooth"
        return "MaxOfSmooth"

    @property
    def is_structured(self) -> bool:
        return self.blackbox is None

    @property
    def is_piecewise_affine(self) -> bool:
        return self.is_structured and all(
            p.is_affine for p in self.convex_pieces + self.concave_pieces
        )

    @property
    def is_convex(self) -> bool:
        return (
            self.is_structured
            and not self.concave_pieces
            and all(p.convex for p in self.convex_pieces)
        )

    @property
    def is_convex_piecewise_affine(self) -> bool:
        return self.is_convex and self.is_piecewise_affine

    @property
    def is_constant(self) -> bool:
        return (
            self.is_structured
            and len(self.convex_pieces) == 1
            and not self.concave_pieces
            and self.convex_pieces[0].is_constant
        )

    def constant_value(self) -> float:
        return self.convex_pieces[0].affine[1]

    def with_name(self, name: str) -> "FunctionHandle":
        return FunctionHandle(
            self.dimension, self.convex_pieces, self.concave_pieces, self.blackbox,
            self.lipschitz_hint, name,
        )

    def with_hint(self, lipschitz: float) -> "FunctionHandle":
        return FunctionHandle(
            self.dimension, self.convex_pieces, self.concave_pieces, self.blackbox,
            float(lipschitz), self.name,
        )

    def __repr__(self) -> str:
        label = self.name or self.structure
        return f"FunctionHandle({label}, n={self.dimension})"

    # -- evaluation ---------------------------------------------------------
    def evaluate(self, X) -> np.ndarray:
        X = _as_points(X)
        if self.blackbox is not None:
            if X.ndim == 1:
                return np.asarray(float(self.blackbox(X)))
            flat = X.reshape(-1, self.dimension)
            vals = np.array([float(self.blackbox(x)) for x in flat])
            return vals.reshape(X.shape[:-1])
        P = np.max(np.stack([p.value(X) for p in self.convex_pieces]), axis=0)
        if self.concave_pieces:
            Q = np.max(np.stack([q.value(X) for q in self.concave_pieces]), axis=0)
            return P - Q
        return P

    def __call__(self, X):
        out = self.evaluate(X)
        return float(out) if np.ndim(out) == 0 else out

    def _active(self, pieces, x, eps):
        vals = np.array([float(p.value(x)) for p in pieces])
        top = vals.max()
        return [p for p, val in zip(pieces, vals) if val >= top - eps]

    def dd_model(self, x, eps: float = EPS_ACT) -> PLDir:
        """Directional derivative at ``x`` as a function of the direction."""
        if self.blackbox is not None:
            raise TypeError("black-box handle has no directional-derivative structure")
        x = np.asarray(x, dtype=float)
        A = [p.grad(x) for p in self._active(self.convex_pieces, x, eps)]
        if self.concave_pieces:
            B = [q.grad(x) for q in self._active(self.concave_pieces, x, eps)]
        else:
            B = None
        return PLDir(np.array(A), None if B is None else np.array(B))

    # -- algebra ------------------------------------------------------------
    def _require_structure(self, other=None):
        if self.blackbox is not None or (other is not None and other.blackbox is not None):
            raise TypeError("black-box handles do not support structural algebra")

    def _coerce(self, other) -> "FunctionHandle":
        if isinstance(other, FunctionHandle):
            if other.dimension != self.dimension:
                raise ValueError("dimension mismatch")
            return other
        return constant(float(other), self.dimension)

    def __add__(self, other) -> "FunctionHandle":
        other = self._coerce(other)
        self._require_structure(other)
        return FunctionHandle(
            self.dimension,
            _family_sum(self.convex_pieces, other.convex_pieces),
            _family_sum(self.concave_pieces, other.concave_pieces),
        )

    __radd__ = __add__

    def __neg__(self) -> "FunctionHandle":
        self._require_structure()
        P, Q = self.convex_pieces, self.concave_pieces
        if not Q:
            if len(P) == 1:
                return FunctionHandle(self.dimension, (P[0].scale(-1.0),))
            zero = (SmoothPiece.make_constant(0.0, self.dimension),)
            return FunctionHandle(self.dimension, zero, P)
        return FunctionHandle(self.dimension, Q, P)

    def __sub__(self, other) -> "FunctionHandle":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "FunctionHandle":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "FunctionHandle":
        if isinstance(other, FunctionHandle):
            self._require_structure(other)
            if self.is_constant:
                return other * self.constant_value()
            if other.is_constant:
                return self * other.constant_value()
            if self.structure == "Smooth" and other.structure == "Smooth":
                return FunctionHandle(
                    self.dimension, (self.convex_pieces[0].times(other.convex_pieces[0]),)
                )
            raise TypeError("product of two nonsmooth functions is not representable")
        c = float(other)
        self._require_structure()
        if c >= 0:
            return FunctionHandle(
                self.dimension,
                tuple(p.scale(c) for p in self.convex_pieces),
                tuple(q.scale(c) for q in self.concave_pieces),
            )
        return (-self) * (-c)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "FunctionHandle":
        if isinstance(other, FunctionHandle):
            if not other.is_constant:
                raise TypeError("division only by constants")
            other = other.constant_value()
        return self * (1.0 / float(other))

    def embed(self, n_new: int) -> "FunctionHandle":
        self._require_structure()
        return FunctionHandle(
            n_new,
            tuple(p.embed(n_new) for p in self.convex_pieces),
            tuple(q.embed(n_new) for q in self.concave_pieces),
            lipschitz_hint=self.lipschitz_hint,
            name=self.name,
        )


# -- constructors -------------------------------------------------------------


def constant(c: float, n: int) -> FunctionHandle:
    return FunctionHandle(n, (SmoothPiece.make_constant(c, n),), name=repr(float(c)))


def affine(a, b: float = 0.0) -> FunctionHandle:
    piece = SmoothPiece.make_affine(a, b)
    return FunctionHandle(piece.dimension, (piece,))


def coordinate(i: int, n: int) -> FunctionHandle:
    """The map x -> x_i (zero-based index)."""
    a = np.zeros(n)
    a[i] = 1.0
    return affine(a, 0.0).with_name(f"x{i + 1}")


def quadratic(Q, q=None, r: float = 0.0) -> FunctionHandle:
    """0.5 x'Qx + q'x + r with symmetric Q."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    q = np.zeros(n) if q is None else np.asarray(q, dtype=float)
    convex = bool(np.all(np.linalg.eigvalsh(Q) >= -1e-12))

    def value(X):
        return 0.5 * np.einsum("...i,ij,...j->...", X, Q, X) + X @ q + r

    piece = SmoothPiece(n, value, lambda x: Q @ x + q, convex=convex)
    return FunctionHandle(n, (piece,))


def smooth(n: int, value: Callable, grad: Callable, convex: bool = False, name: str = "") -> FunctionHandle:
    return FunctionHandle(n, (SmoothPiece(n, value, grad, convex=convex),), name=name)


def black_box(n: int, fn: Callable, name: str = "") -> FunctionHandle:
    return FunctionHandle(n, blackbox=fn, name=name)


def maximum(*fs: FunctionHandle) -> FunctionHandle:
    """Pointwise max; max(P1-Q1, P2-Q2) = max(P1+Q2, P2+Q1) - (Q1+Q2)."""
    out = fs[0]
    for g in fs[1:]:
        out._require_structure(g)
        P = _dedupe(
            _family_sum(out.convex_pieces, g.concave_pieces)
            + _family_sum(g.convex_pieces, out.concave_pieces)
        )
        Q = _family_sum(out.concave_pieces, g.concave_pieces)
        out = FunctionHandle(out.dimension, P, Q)
    return out


def minimum(*fs: FunctionHandle) -> FunctionHandle:
    return -maximum(*[-f for f in fs])


def absolute(f: FunctionHandle) -> FunctionHandle:
    return maximum(f, -f)


def positive_part(f: FunctionHandle) -> FunctionHandle:
    return maximum(f, constant(0.0, f.dimension))


# -- calculus -----------------------------------------------------------------


def dir_derivative(f: FunctionHandle, x, v, eps_act: float = EPS_ACT) -> float:
    """One-sided directional derivative f'(x; v) from the piece structure."""
    return f.dd_model(x, eps_act).evaluate(v)


def fd_dir_derivative_oracle(f: Callable, x, v, steps: Optional[Sequence[float]] = None) -> float:
    """Extrapolated one-sided difference quotient, used as an independent check.

    The two smallest steps are combined linearly to cancel the O(h) error.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if steps is None:
        steps = [1e-4 * 2.0 ** (-j) for j in range(6)]
    steps = sorted((float(h) for h in steps), reverse=True)
    fx = float(f(x))
    quotients = [(float(f(x + h * v)) - fx) / h for h in steps]
    if len(steps) < 2:
        return quotients[-1]
    h1, h2 = steps[-2], steps[-1]
    d1, d2 = quotients[-2], quotients[-1]
    return (h1 * d2 - h2 * d1) / (h1 - h2)


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    method: str  # "UserHint" or "SampledSlopes"
    raw_max_slope: float = 0.0
    samples: int = 0
    inflation: float = LIPSCHITZ_INFLATION


def _sample_in_set(rng, feasible_set, count: int) -> np.ndarray:
    lo, hi = feasible_set.lower, feasible_set.upper
    out = []
    while sum(len(o) for o in out) < count:
        cand = lo + (hi - lo) * rng.random((max(count, 16), len(lo)))
        ok = feasible_set.contains_batch(cand)
        out.append(cand[ok])
        if len(out) > 200:
            raise RuntimeError("could not sample the polyhedral set")
    return np.vstack(out)[:count]


def estimate_lipschitz(
    f: FunctionHandle,
    feasible_set,
    samples: int = 400,
    seed: int = 0,
    inflation: float = LIPSCHITZ_INFLATION,
) -> LipschitzEstimate:
    """Max sampled difference quotient over pairs in the set, times ``inflation``.

    Pairs are drawn from one seeded stream, so the estimate never decreases when
    ``samples`` grows. Half the pairs are short-range to catch local slopes.
    """
    if f.lipschitz_hint is not None:
        return LipschitzEstimate(float(f.lipschitz_hint), "UserHint")
    if samples < 2:
        raise ValueError("need at least two samples")
    if not feasible_set.is_bounded:
        raise ValueError("cannot sample an unbounded set without a Lipschitz hint")
    rng = np.random.default_rng(seed)
    lo, hi = feasible_set.lower, feasible_set.upper
    diam = float(np.linalg.norm(hi - lo)) or 1.0
    best = 0.0
    for _ in range(samples):
        x = _sample_in_set(rng, feasible_set, 1)[0]
        if rng.random() < 0.5:
            y = _sample_in_set(rng, feasible_set, 1)[0]
        else:
            d = rng.normal(size=len(x))
            d /= np.linalg.norm(d) or 1.0
            y = np.clip(x + diam * 10.0 ** rng.uniform(-5, -1) * d, lo, hi)
            if not feasible_set.contains(y):
                continue
        dist = float(np.linalg.norm(x - y))
        if dist <= 1e-14:
            continue
        best = max(best, abs(float(f(x)) - float(f(y))) / dist)
    return LipschitzEstimate(inflation * best, "SampledSlopes", best, samples, inflation)
