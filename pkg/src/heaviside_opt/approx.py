"""Pointwise approximations of the open Heaviside function and their axiom checks.

A family is a map ``theta(t, delta)`` that equals 0 for ``t <= -lower_end(delta)``
and 1 for ``t >= upper_end(delta)``, is monotone in between, and tends to the open
Heaviside function as ``delta`` decreases. Families expose exact one-sided
derivatives in ``t`` and their breakpoints so that solvers can build exact
directional-derivative models.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .functions import fd_dir_derivative_oracle

DELTA_GRID = tuple(10.0 ** (-k) for k in range(1, 9))
A1_POINTS = (1.0, -1.0, 0.1, -0.1, 0.001, -0.001, 0.0)
LIMIT_THRESHOLD = 1e-3


class Tag(enum.Enum):
    TRUNCATED_HINGE = "truncated-hinge"
    MODIFIED_HINGE = "modified-hinge"
    TRUNCATION_OF_PSI = "truncation"
    STEKLOV_CDF = "steklov"
    ASYMMETRIC_STEKLOV_CDF = "asymmetric-steklov"
    L0_SUM = "l0-sum"
    CUSTOM = "custom"


def truncate(value):
    """Clamp to [0, 1]; equals max(t, 0) - max(t - 1, 0)."""
    out = np.minimum(np.maximum(np.asarray(value, dtype=float), 0.0), 1.0)
    return float(out) if out.ndim == 0 else out


def open_heaviside(t):
    return (np.asarray(t, dtype=float) > 0).astype(float)


def l0_indicator(t):
    return (np.asarray(t, dtype=float) != 0).astype(float)


class ApproxFamily:
    """Base class; subclasses implement ``_theta``, ``_dd`` and the endpoint maps."""

    tag: Tag = Tag.CUSTOM
    target: str = "heaviside"
    range_max: float = 1.0

    def __init__(self, name: str = "", defects: Optional[dict] = None):
        self.name = name or self.tag.value
        self.defects = dict(defects or {})

    def lower_end(self, delta: float) -> float:
        raise NotImplementedError

    def upper_end(self, delta: float) -> float:
        raise NotImplementedError

    def kinks(self, delta: float) -> np.ndarray:
        return np.array([-self.lower_end(delta), self.upper_end(delta)])

    def theta(self, t, delta: float):
        out = self._theta(np.asarray(t, dtype=float), float(delta))
        return float(out) if np.ndim(out) == 0 else out

    def dd_plus(self, t, delta: float):
        out = self._dd(np.asarray(t, dtype=float), float(delta), +1)
        return float(out) if np.ndim(out) == 0 else out

    def dd_minus(self, t, delta: float):
        out = self._dd(np.asarray(t, dtype=float), float(delta), -1)
        return float(out) if np.ndim(out) == 0 else out

    def slopes(self, t: float, delta: float, snap: float = 0.0):
        """``(right slope, left slope)`` at ``t``; with ``snap > 0`` a nearby kink is used."""
        t = float(t)
        if snap > 0:
            k = self.kinks(delta)
            near = k[np.abs(k - t) <= snap]
            if near.size:
                t = float(near[np.argmin(np.abs(near - t))])
        return self.dd_plus(t, delta), -self.dd_minus(t, delta)

    def _theta(self, t, delta):
        raise NotImplementedError

    def _dd(self, t, delta, sign):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


# -- univariate shaping maps used by the truncation construction ----------------


@dataclass(frozen=True)
class Univariate:
    """Nondecreasing B-differentiable map with exact one-sided derivatives."""

    value: Callable
    dd_plus: Callable
    dd_minus: Callable
    kinks: tuple = ()
    name: str = ""


def psi_identity() -> Univariate:
    one = lambda u: np.ones_like(np.asarray(u, dtype=float))
    return Univariate(lambda u: np.asarray(u, dtype=float), one, lambda u: -one(u), (), "identity")


def psi_power(p: float) -> Univariate:
    """u -> max(u, 0)**p with p >= 1."""
    if p < 1:
        raise ValueError("power must be at least 1")

    def val(u):
        return np.maximum(np.asarray(u, dtype=float), 0.0) ** p

    def der(u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0, p * np.maximum(u, 0.0) ** (p - 1), 1.0 if p == 1 else 0.0)

    def dplus(u):
        return der(u)

    def dminus(u):
        u = np.asarray(u, dtype=float)
        return -np.where(u > 0, p * np.maximum(u, 0.0) ** (p - 1), 0.0)

    return Univariate(val, dplus, dminus, (0.0,), f"power{p:g}")


def psi_exponential(rate: float = 1.0) -> Univariate:
    """u -> (exp(rate u) - 1) / (exp(rate) - 1), smooth and increasing."""
    scale = np.expm1(rate)

    cap = 700.0 / rate  # exp overflows past this; callers truncate long before

    def val(u):
        return np.expm1(rate * np.minimum(np.asarray(u, dtype=float), cap)) / scale

    def der(u):
        return rate * np.exp(rate * np.minimum(np.asarray(u, dtype=float), cap)) / scale

    return Univariate(val, der, lambda u: -der(u), (), f"exp{rate:g}")


class TruncationFamily(ApproxFamily):
    """theta(t, delta) = truncate(psi(q(delta) + t / m(delta)))."""

    tag = Tag.TRUNCATION_OF_PSI

    def __init__(self, psi: Univariate, q: Callable, m: Callable, name: str = "", tag: Optional[Tag] = None):
        super().__init__(name or f"truncation[{psi.name}]")
        if tag is not None:
            self.tag = tag
        self.psi, self.q, self.m = psi, q, m

    def lower_end(self, delta):
        return float(self.m(delta) * self.q(delta))

    def upper_end(self, delta):
        return float(self.m(delta) * (1.0 - self.q(delta)))

    def kinks(self, delta):
        q, m = self.q(delta), self.m(delta)
        inner = [m * (u - q) for u in self.psi.kinks if 0.0 < u < 1.0]
        return np.array(sorted([-self.lower_end(delta), self.upper_end(delta)] + inner))

    def _theta(self, t, delta):
        q, m = self.q(delta), self.m(delta)
        out = np.clip(self.psi.value(q + t / m), 0.0, 1.0)
        out = np.where(t <= -self.lower_end(delta), 0.0, out)
        return np.where(t >= self.upper_end(delta), 1.0, out)

    def _dd(self, t, delta, sign):
        q, m = self.q(delta), self.m(delta)
        lo, hi = self.lower_end(delta), self.upper_end(delta)
        u = q + t / m
        raw = (self.psi.dd_plus(u) if sign > 0 else self.psi.dd_minus(u)) / m
        y = np.clip(self.psi.value(u), 0.0, 1.0)
        y = np.where(t <= -lo, 0.0, np.where(t >= hi, 1.0, y))
        out = np.where(y <= 0.0, np.maximum(raw, 0.0), np.where(y >= 1.0, np.minimum(raw, 0.0), raw))
        outside = (t < -lo) | (t > hi) | ((t == hi) & (sign > 0)) | ((t == -lo) & (sign < 0))
        return np.where(outside, 0.0, out)


def make_truncation_family(psi: Univariate, q: Callable, m: Callable, name: str = "") -> TruncationFamily:
    """Truncated shaping map with endpoints ``m q`` and ``m (1 - q)``.

    Requires psi(0) = 0 and psi(1) = 1, and q, m tending to zero along the delta grid.
    """
    if abs(float(psi.value(0.0))) > 1e-14 or abs(float(psi.value(1.0)) - 1.0) > 1e-14:
        raise ValueError("shaping map must satisfy psi(0) = 0 and psi(1) = 1")
    qs = np.array([q(d) for d in DELTA_GRID])
    ms = np.array([m(d) for d in DELTA_GRID])
    if np.any(qs < 0) or np.any(qs > 1) or np.any(ms <= 0):
        raise ValueError("q must map into [0, 1] and m must be positive")
    if qs[-1] > LIMIT_THRESHOLD or ms[-1] > LIMIT_THRESHOLD:
        raise ValueError("q(delta) and m(delta) must tend to zero")
    return TruncationFamily(psi, q, m, name)


def make_modified_hinge() -> TruncationFamily:
    q = lambda d: np.sqrt(d) / (1.0 + np.sqrt(d))
    m = lambda d: d + np.sqrt(d)
    return TruncationFamily(psi_identity(), q, m, "modified-hinge", Tag.MODIFIED_HINGE)


class TruncatedHinge(ApproxFamily):
    """(max(t + delta, 0) - max(t - delta, 0)) / (2 delta); value 1/2 at t = 0."""

    tag = Tag.TRUNCATED_HINGE

    def __init__(self):
        super().__init__("truncated-hinge", {"A1": "theta(0, delta) = 1/2 for all delta"})

    def lower_end(self, delta):
        return float(delta)

    def upper_end(self, delta):
        return float(delta)

    def _theta(self, t, delta):
        # pinned outside [-delta, delta] so rounding cannot leave [0, 1]
        mid = (np.maximum(t + delta, 0.0) - np.maximum(t - delta, 0.0)) / (2.0 * delta)
        return np.where(t >= delta, 1.0, np.where(t <= -delta, 0.0, mid))

    def _dd(self, t, delta, sign):
        s = 1.0 / (2.0 * delta)
        if sign > 0:
            return np.where((t >= -delta) & (t < delta), s, 0.0)
        return np.where((t > -delta) & (t <= delta), -s, 0.0)


def make_truncated_hinge() -> TruncatedHinge:
    return TruncatedHinge()


class PiecewiseConstantCDF(ApproxFamily):
    """Distribution function of a piecewise-constant density.

    ``density(delta)`` returns ``(knots, values)`` with ``len(knots) = len(values) + 1``.
    """

    tag = Tag.STEKLOV_CDF

    def __init__(self, density: Callable, name: str = "", tag: Optional[Tag] = None, defects=None):
        super().__init__(name or "nonifier-cdf", defects)
        if tag is not None:
            self.tag = tag
        self.density = density
        for d in DELTA_GRID + (0.5, 0.25):
            self._check_normalized(d)

    def _check_normalized(self, delta):
        knots, vals = self.density(delta)
        knots, vals = np.asarray(knots, float), np.asarray(vals, float)
        if np.any(np.diff(knots) <= 0) or np.any(vals < 0):
            raise ValueError("density knots must increase and values must be nonnegative")
        mass = float(np.sum(vals * np.diff(knots)))
        if abs(mass - 1.0) > 1e-8:
            raise ValueError(f"density integrates to {mass}, not 1")
        if knots[0] > 0 or knots[-1] < 0:
            raise ValueError("density support must contain the origin")

    def lower_end(self, delta):
        return float(-self.density(delta)[0][0])

    def upper_end(self, delta):
        return float(self.density(delta)[0][-1])

    def kinks(self, delta):
        return np.asarray(self.density(delta)[0], dtype=float)

    def _theta(self, t, delta):
        knots, vals = (np.asarray(a, float) for a in self.density(delta))
        widths = np.diff(knots)
        tt = np.asarray(t, dtype=float)[..., None]
        out = np.sum(vals * np.clip(tt - knots[:-1], 0.0, widths), axis=-1)
        out = np.clip(out, 0.0, 1.0)
        out = np.where(t <= knots[0], 0.0, out)
        return np.where(t >= knots[-1], 1.0, out)

    def _dd(self, t, delta, sign):
        knots, vals = (np.asarray(a, float) for a in self.density(delta))
        tt = np.asarray(t, dtype=float)[..., None]
        if sign > 0:
            inside = (tt >= knots[:-1]) & (tt < knots[1:])
            return np.sum(np.where(inside, vals, 0.0), axis=-1)
        inside = (tt > knots[:-1]) & (tt <= knots[1:])
        return -np.sum(np.where(inside, vals, 0.0), axis=-1)


def make_steklov_cdf(kind: str = "symmetric", lower: Optional[Callable] = None, upper: Optional[Callable] = None):
    """Symmetric: uniform density on [-delta/2, delta/2]. Asymmetric: uniform on [-lower, upper]."""
    if kind == "symmetric":
        fam = PiecewiseConstantCDF(
            lambda d: (np.array([-d / 2.0, d / 2.0]), np.array([1.0 / d])),
            "steklov", Tag.STEKLOV_CDF, {"A1": "theta(0, delta) = 1/2 for all delta"},
        )
        return fam
    if kind != "asymmetric" or lower is None or upper is None:
        raise ValueError("asymmetric Steklov needs lower and upper endpoint maps")
    lo = np.array([lower(d) for d in DELTA_GRID])
    hi = np.array([upper(d) for d in DELTA_GRID])
    ratio = lo / hi
    if not (_trend_ok(ratio) and ratio[-1] <= LIMIT_THRESHOLD):
        raise ValueError("asymmetric Steklov needs lower/upper -> 0 along the delta grid")
    sup_density = 1.0 / (lo + hi)
    if np.max((lo + hi) * sup_density) > 1e6:
        raise ValueError("(lower + upper) * sup density must stay bounded")
    return PiecewiseConstantCDF(
        lambda d: (np.array([-lower(d), upper(d)]), np.array([1.0 / (lower(d) + upper(d))])),
        "asymmetric-steklov", Tag.ASYMMETRIC_STEKLOV_CDF,
    )


class ScaledFamily(ApproxFamily):
    """theta(t / m(delta), delta) for a positive bounded scale m."""

    def __init__(self, base: ApproxFamily, m: Callable):
        super().__init__(f"scaled[{base.name}]", base.defects)
        self.tag = base.tag
        self.target = base.target
        self.range_max = base.range_max
        self.base, self.m = base, m

    def lower_end(self, delta):
        return self.base.lower_end(delta) * self.m(delta)

    def upper_end(self, delta):
        return self.base.upper_end(delta) * self.m(delta)

    def kinks(self, delta):
        return self.base.kinks(delta) * self.m(delta)

    def _theta(self, t, delta):
        return self.base._theta(t / self.m(delta), delta)

    def _dd(self, t, delta, sign):
        return self.base._dd(t / self.m(delta), delta, sign) / self.m(delta)


class L0Family(ApproxFamily):
    """rho(t, delta) = plus(t, delta) + minus(-t, delta), approximating |t|_0."""

    tag = Tag.L0_SUM
    target = "l0"
    range_max = 2.0

    def __init__(self, plus: ApproxFamily, minus: ApproxFamily):
        super().__init__(f"l0[{plus.name},{minus.name}]")
        self.plus, self.minus = plus, minus

    def lower_end(self, delta):
        return max(self.plus.lower_end(delta), self.minus.upper_end(delta))

    def upper_end(self, delta):
        return max(self.plus.upper_end(delta), self.minus.lower_end(delta))

    def kinks(self, delta):
        return np.unique(np.concatenate([self.plus.kinks(delta), -self.minus.kinks(delta)]))

    def _theta(self, t, delta):
        return self.plus._theta(t, delta) + self.minus._theta(-t, delta)

    def _dd(self, t, delta, sign):
        return self.plus._dd(t, delta, sign) + self.minus._dd(-t, delta, -sign)


def make_l0_family(plus: ApproxFamily, minus: ApproxFamily) -> L0Family:
    return L0Family(plus, minus)


# -- axiom checks --------------------------------------------------------------


def _trend_ok(seq, slack: float = 1e-12) -> bool:
    """Nonincreasing over the tail of the grid (last four entries)."""
    tail = np.asarray(seq, dtype=float)[-4:]
    return bool(np.all(np.diff(tail) <= slack * np.maximum(1.0, np.abs(tail[:-1]))))


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


@dataclass
class AxiomResult:
    name: str
    passed: bool
    detail: str = ""
    witnesses: list = field(default_factory=list)


@dataclass
class AxiomReport:
    family: str
    tag: str
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def rows(self):
        return [(self.family, r.name, "pass" if r.passed else "fail", r.detail) for r in self.results.values()]


def _check_a0(fam, deltas):
    lo = np.array([fam.lower_end(d) for d in deltas])
    hi = np.array([fam.upper_end(d) for d in deltas])
    ok = bool(np.all(lo >= 0) and np.all(hi >= 0) and _trend_ok(lo) and _trend_ok(hi)
              and lo[-1] <= LIMIT_THRESHOLD and hi[-1] <= LIMIT_THRESHOLD)
    return AxiomResult("A0", ok, f"final ends ({lo[-1]:.3g}, {hi[-1]:.3g})")


def _check_a1(fam, deltas, points):
    target = l0_indicator if fam.target == "l0" else open_heaviside
    ok, wit = True, []
    for t in points:
        vals = np.array([fam.theta(t, d) for d in deltas])
        err = np.abs(vals - float(target(t)))
        good = err[-1] <= LIMIT_THRESHOLD and _trend_ok(err)
        if not good:
            ok = False
            wit.append({"t": t, "limit": float(vals[-1]), "target": float(target(t))})
    detail = "pointwise limits reached" if ok else "; ".join(
        f"t={w['t']:g} limit {w['limit']:g} (target {w['target']:g})" for w in wit)
    return AxiomResult("A1", ok, detail, wit)


def _check_a2(fam, deltas, rng):
    ok, wit = True, []
    for d in deltas:
        lo, hi = fam.lower_end(d), fam.upper_end(d)
        far = max(lo, hi, 1.0) * 10.0
        below = np.array([-lo, -lo * (1 + 1e-6) - 1e-300, -far, -lo - rng.random() * far])
        above = np.array([hi, hi * (1 + 1e-6) + 1e-300, far, hi + rng.random() * far])
        if fam.target == "l0":
            bad = np.any(fam.theta(below, d) != 1.0) or np.any(fam.theta(above, d) != 1.0)
        else:
            bad = np.any(fam.theta(below, d) != 0.0) or np.any(fam.theta(above, d) != 1.0)
        ts = -lo + (lo + hi) * rng.random(64)
        vals = fam.theta(ts, d)
        bad = bad or np.any(vals < 0) or np.any(vals > fam.range_max)
        if bad:
            ok = False
            wit.append({"delta": d})
    return AxiomResult("A2", ok, "exact support" if ok else "support or range violated", wit)


def _a3_points(fam, d, rng, count):
    lo, hi = fam.lower_end(d), fam.upper_end(d)
    pts = list(fam.kinks(d)) + list(-lo + (lo + hi) * rng.random(count))
    return np.array(sorted(set(float(p) for p in pts)))


def _check_a3(fam, deltas, rng, count=12):
    ok, wit = True, []
    comps = [fam.plus, fam.minus] if isinstance(fam, L0Family) else [fam]
    for comp in comps:
        for d in deltas:
            ts = _a3_points(comp, d, rng, count)
            if np.any(comp.dd_plus(ts, d) < 0) or np.any(comp.dd_minus(ts, d) > 0):
                ok = False
                wit.append({"delta": d, "family": comp.name, "issue": "derivative sign"})
    for d in deltas:
        worst = 0.0
        for t in _a3_points(fam, d, rng, count):
            for sign in (+1, -1):
                gap = dd_fd_gap(fam, t, d, sign)
                worst = max(worst, gap)
        if worst > 1e-5:
            ok = False
            wit.append({"delta": d, "issue": "finite-difference mismatch", "gap": worst})
    return AxiomResult("A3", ok, "signs and one-sided derivatives verified" if ok else "see witnesses", wit)


def dd_fd_gap(fam: ApproxFamily, t: float, delta: float, sign: int) -> float:
    """Relative gap between the exact one-sided derivative and the difference oracle."""
    width = fam.lower_end(delta) + fam.upper_end(delta)
    k = fam.kinks(delta)
    others = np.abs(k - t)
    others = others[others > 0]
    reach = min(width, others.min()) if others.size else width
    steps = [reach * 1e-3 * 2.0 ** (-j) for j in range(5)]
    exact = fam.dd_plus(t, delta) if sign > 0 else fam.dd_minus(t, delta)
    fd = fd_dir_derivative_oracle(lambda s: fam.theta(float(s[0]), delta), [t], [float(sign)], steps)
    return relative_gap(exact, fd)


def axiom_suite(family: ApproxFamily, deltas: Sequence[float] = DELTA_GRID,
                points: Sequence[float] = A1_POINTS, seed: int = 0) -> AxiomReport:
    """Runs the (A0)-(A3) checks and returns per-axiom results with witnesses."""
    rng = np.random.default_rng(seed)
    results = {
        "A0": _check_a0(family, deltas),
        "A1": _check_a1(family, deltas, points),
        "A2": _check_a2(family, deltas, rng),
        "A3": _check_a3(family, deltas, rng),
    }
    return AxiomReport(family.name, family.tag.value, results)


def plot_table(family: ApproxFamily, deltas: Sequence[float] = (0.5, 0.1, 0.01), count: int = 41):
    """Rows ``(delta, t, theta)`` over a window around each support interval."""
    rows = []
    for d in deltas:
        lo, hi = family.lower_end(d), family.upper_end(d)
        span = 1.5 * max(lo, hi, 1e-12)
        for t in np.linspace(-span, span, count):
            rows.append((d, float(t), family.theta(t, d)))
    return rows


def family_from_spec(spec) -> ApproxFamily:
    """Build a family from a tag string or a mapping with a ``tag`` entry."""
    if isinstance(spec, ApproxFamily):
        return spec
    if isinstance(spec, str):
        spec = {"tag": spec}
    tag = spec.get("tag", "modified-hinge")
    if tag == "modified-hinge":
        return make_modified_hinge()
    if tag == "truncated-hinge":
        return make_truncated_hinge()
    if tag == "steklov":
        return make_steklov_cdf("symmetric")
    if tag == "asymmetric-steklov":
        lp = float(spec.get("lower_power", 2.0))
        up = float(spec.get("upper_power", 1.0))
        return make_steklov_cdf("asymmetric", lambda d: d ** lp, lambda d: d ** up)
    if tag == "truncation":
        shape = spec.get("psi", "identity")
        if shape == "identity":
            psi = psi_identity()
        elif shape.startswith("power"):
            psi = psi_power(float(spec.get("power", 2.0)))
        elif shape.startswith("exp"):
            psi = psi_exponential(float(spec.get("rate", 1.0)))
        else:
            raise ValueError(f"unknown shaping map {shape!r}")
        qp = float(spec.get("q_power", 0.5))
        mp = float(spec.get("m_power", 0.5))
        return make_truncation_family(psi, lambda d: d ** qp / (1.0 + d ** qp), lambda d: d ** mp)
    if tag == "l0-sum":
        base = family_from_spec(spec.get("base", "modified-hinge"))
        return make_l0_family(base, base)
    raise ValueError(f"unknown approximation family {tag!r}")
