"""Clamped B-splines: least-squares fit, adaptive knot refinement, derivatives.

Degrees are polynomial degrees.  ``basis_value`` keeps the Cox-de Boor
*order* convention (order = degree + 1) because it is the literal recursion.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IndexOutOfRange,
    InputError,
    InvalidDomain,
    OutsideDomain,
    RankDeficientFit,
    RefinementStalled,
    RefinementStalledWarning,
)

DEFAULT_TAU = 1e-6
DEFAULT_MAX_ROUNDS = 12


@dataclass(frozen=True)
class KnotVector:
    knots: np.ndarray
    degree: int

    def __init__(self, knots, degree: int):
        t = np.array(knots, dtype=float).ravel()
        d = int(degree)
        if d < 0:
            raise InputError("degree must be non-negative")
        if t.size < 2 * (d + 1):
            raise InputError("too few knots for a clamped spline of this degree")
        if np.any(np.diff(t) < 0):
            raise InputError("knots must be non-decreasing")
        if not (np.all(t[: d + 1] == t[0]) and np.all(t[-(d + 1):] == t[-1])):
            raise InputError("knot vector must be clamped (end multiplicity degree+1)")
        if t[0] >= t[-1]:
            raise InvalidDomain("knot vector spans an empty domain")
        interior = t[d + 1 : t.size - d - 1]
        if interior.size:
            _, counts = np.unique(interior, return_counts=True)
            if counts.max() > max(d, 1):
                raise InputError("interior knot multiplicity exceeds the degree")
        t.flags.writeable = False
        object.__setattr__(self, "knots", t)
        object.__setattr__(self, "degree", d)

    @classmethod
    def _trusted(cls, knots: np.ndarray, degree: int) -> "KnotVector":
        # derived knot vectors (derivatives) skip the multiplicity rule
        obj = object.__new__(cls)
        t = np.array(knots, dtype=float)
        t.flags.writeable = False
        object.__setattr__(obj, "knots", t)
        object.__setattr__(obj, "degree", int(degree))
        return obj

    @property
    def n_basis(self) -> int:
        return self.knots.size - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def breakpoints(self) -> np.ndarray:
        return np.unique(self.knots)

    def interior(self) -> np.ndarray:
        return self.knots[self.degree + 1 : self.knots.size - self.degree - 1]

    def with_interior(self, interior) -> "KnotVector":
        a, b = self.domain
        d = self.degree
        inner = np.sort(np.asarray(interior, dtype=float))
        return KnotVector(np.r_[[a] * (d + 1), inner, [b] * (d + 1)], d)


@dataclass(frozen=True)
class SplineModel:
    knot_vector: KnotVector
    control_coeffs: np.ndarray

    def __init__(self, knot_vector: KnotVector, control_coeffs):
        mu = np.array(control_coeffs, dtype=float).ravel()
        if mu.size != knot_vector.n_basis:
            raise InputError(
                f"{mu.size} control coefficients for {knot_vector.n_basis} basis functions"
            )
        mu.flags.writeable = False
        object.__setattr__(self, "knot_vector", knot_vector)
        object.__setattr__(self, "control_coeffs", mu)

    @property
    def degree(self) -> int:
        return self.knot_vector.degree

    @property
    def domain(self) -> tuple[float, float]:
        return self.knot_vector.domain

    def __call__(self, xs) -> np.ndarray:
        return evaluate(self, xs)


def uniform_knots(domain, degree: int, n_basis: int) -> KnotVector:
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise InvalidDomain(f"empty domain [{a}, {b}]")
    if n_basis < degree + 1:
        raise InputError("n_basis must be at least degree + 1")
    n_interior = n_basis - degree - 1
    interior = np.linspace(a, b, n_interior + 2)[1:-1]
    return KnotVector(np.r_[[a] * (degree + 1), interior, [b] * (degree + 1)], degree)


def basis_value(kv: KnotVector, index: int, order: int, x: float) -> float:
    """Cox-de Boor recursion for ``B_index`` of the given order (degree order-1).

    Terms with a zero-length denominator are dropped.  At the right end of
    the domain the last non-empty span is treated as closed.
    """
    t = kv.knots
    if order < 1 or index < 0 or index + order >= t.size:
        raise IndexOutOfRange(f"no basis function {index} of order {order} on {t.size} knots")
    right_end = x == t[-1]

    def rec(s: int, w: int) -> float:
        if w == 1:
            if t[s] <= x < t[s + 1]:
                return 1.0
            if right_end and t[s] < t[s + 1] == t[-1]:
                return 1.0
            return 0.0
        out = 0.0
        den = t[s + w - 1] - t[s]
        if den > 0:
            out += (x - t[s]) / den * rec(s, w - 1)
        den = t[s + w] - t[s + 1]
        if den > 0:
            out += (t[s + w] - x) / den * rec(s + 1, w - 1)
        return out

    return rec(index, order)


def _span_index(t: np.ndarray, degree: int, x: np.ndarray) -> np.ndarray:
    n_basis = t.size - degree - 1
    idx = np.searchsorted(t, x, side="right") - 1
    return np.clip(idx, degree, n_basis - 1)


def _nonzero_basis(t: np.ndarray, degree: int, x: np.ndarray, span: np.ndarray) -> np.ndarray:
    """Values of the ``degree+1`` basis functions alive on each span, vectorised."""
    n = x.size
    vals = np.zeros((n, degree + 1))
    vals[:, 0] = 1.0
    left = np.zeros((n, degree + 1))
    right = np.zeros((n, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = x - t[span + 1 - j]
        right[:, j] = t[span + j] - x
        saved = np.zeros(n)
        for r in range(j):
            den = right[:, r + 1] + left[:, j - r]
            with np.errstate(divide="ignore", invalid="ignore"):
                tmp = np.where(den != 0, vals[:, r] / den, 0.0)
            vals[:, r] = saved + right[:, r + 1] * tmp
            saved = left[:, j - r] * tmp
        vals[:, j] = saved
    return vals


def design_matrix(kv: KnotVector, xs) -> np.ndarray:
    """Dense ``(len(xs), n_basis)`` matrix of basis values."""
    x = np.asarray(xs, dtype=float).ravel()
    t, d = kv.knots, kv.degree
    span = _span_index(t, d, x)
    vals = _nonzero_basis(t, d, x, span)
    out = np.zeros((x.size, kv.n_basis))
    rows = np.repeat(np.arange(x.size), d + 1)
    cols = (span[:, None] - d + np.arange(d + 1)[None, :]).ravel()
    out[rows, cols] = vals.ravel()
    return out


def _check_domain(model: SplineModel, x: np.ndarray):
    a, b = model.domain
    if x.size and (x.min() < a or x.max() > b):
        raise OutsideDomain(f"evaluation outside [{a}, {b}]")


def evaluate(model: SplineModel, xs) -> np.ndarray:
    x = np.asarray(xs, dtype=float)
    flat = x.ravel()
    _check_domain(model, flat)
    kv = model.knot_vector
    t, d = kv.knots, kv.degree
    span = _span_index(t, d, flat)
    vals = _nonzero_basis(t, d, flat, span)
    cols = span[:, None] - d + np.arange(d + 1)[None, :]
    out = np.sum(vals * model.control_coeffs[cols], axis=1)
    return out.reshape(x.shape)


def fit(xs, ys, kv: KnotVector) -> SplineModel:
    """Least-squares control coefficients for ``ys`` sampled at ``xs``."""
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.size != y.size:
        raise InputError("xs and ys differ in length")
    a, b = kv.domain
    if x.min() < a or x.max() > b:
        raise OutsideDomain("data extends outside the knot domain")
    if x.size < kv.n_basis:
        raise RankDeficientFit(f"{x.size} points cannot determine {kv.n_basis} coefficients")
    b_mat = design_matrix(kv, x)
    if np.any(~b_mat.any(axis=0)):
        raise RankDeficientFit("a basis function has no data in its support")
    q, r = np.linalg.qr(b_mat)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-13 * diag.max():
        raise RankDeficientFit("spline design matrix is rank deficient")
    mu = np.linalg.solve(r, q.T @ y)
    return SplineModel(kv, mu)


def interval_errors(kv: KnotVector, xs, residuals) -> tuple[np.ndarray, np.ndarray]:
    """Sum of squared residuals on every non-empty closed span ``[t_j, t_j+1]``.

    Returns ``(breakpoints, phi)`` with ``phi[j]`` belonging to the span
    starting at ``breakpoints[j]``.
    """
    x = np.asarray(xs, dtype=float).ravel()
    r2 = np.asarray(residuals, dtype=float).ravel() ** 2
    bp = kv.breakpoints()
    lo = np.searchsorted(x, bp[:-1], side="left")
    hi = np.searchsorted(x, bp[1:], side="right")
    csum = np.concatenate([[0.0], np.cumsum(r2)])
    return bp, csum[hi] - csum[lo]


@dataclass
class RefinementTrace:
    rounds: int = 0
    converged: bool = False
    residual_history: list[float] = field(default_factory=list)
    knot_counts: list[int] = field(default_factory=list)
    max_phi: float = float("nan")


def refine_trace(
    xs,
    ys,
    initial: SplineModel,
    tau: float = DEFAULT_TAU,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> tuple[SplineModel, RefinementTrace]:
    """Adaptive midpoint knot insertion until every span has ``phi <= tau``.

    A span is only split when both halves keep at least ``degree + 1`` data
    points.  Returns the final model and a per-round trace.
    """
    if tau <= 0:
        raise InputError("tau must be positive")
    x = np.asarray(xs, dtype=float).ravel()
    order = np.argsort(x, kind="stable")
    x, y = x[order], np.asarray(ys, dtype=float).ravel()[order]
    model = initial
    trace = RefinementTrace()
    min_pts = model.degree + 1
    while True:
        res = y - evaluate(model, x)
        bp, phi = interval_errors(model.knot_vector, x, res)
        trace.residual_history.append(float(np.sum(res * res)))
        trace.knot_counts.append(int(model.knot_vector.knots.size))
        trace.max_phi = float(phi.max())
        bad = np.nonzero(phi > tau)[0]
        if bad.size == 0:
            trace.converged = True
            break
        if trace.rounds >= max_rounds:
            break
        new_knots = []
        for j in bad:
            lo, hi = bp[j], bp[j + 1]
            mid = 0.5 * (lo + hi)
            left = np.count_nonzero((x >= lo) & (x < mid))
            right = np.count_nonzero((x >= mid) & (x <= hi))
            if left >= min_pts and right >= min_pts and lo < mid < hi:
                new_knots.append(mid)
        if not new_knots:
            break
        kv = model.knot_vector.with_interior(np.r_[model.knot_vector.interior(), new_knots])
        model = fit(x, y, kv)
        trace.rounds += 1
    return model, trace


def refine(
    xs,
    ys,
    initial: SplineModel,
    tau: float = DEFAULT_TAU,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    strict: bool = False,
) -> SplineModel:
    model, trace = refine_trace(xs, ys, initial, tau, max_rounds)
    if not trace.converged:
        msg = f"refinement stopped after {trace.rounds} rounds with max phi {trace.max_phi:.3g} > {tau:g}"
        if strict:
            raise RefinementStalled(msg)
        warnings.warn(msg, RefinementStalledWarning, stacklevel=2)
    return model


def derivative_model(model: SplineModel, p: int) -> SplineModel:
    """The ``p``-th derivative as a spline of degree ``degree - p``."""
    if p < 0:
        raise InputError("derivative order must be non-negative")
    kv = model.knot_vector
    t, d, mu = kv.knots, kv.degree, model.control_coeffs
    if p > d:
        a, b = kv.domain
        return SplineModel(KnotVector._trusted(np.array([a, b]), 0), [0.0])
    for _ in range(p):
        den = t[d + 1 : d + 1 + mu.size - 1] - t[1 : mu.size]
        with np.errstate(divide="ignore", invalid="ignore"):
            mu = np.where(den > 0, d * np.diff(mu) / den, 0.0)
        t = t[1:-1]
        d -= 1
    return SplineModel(KnotVector._trusted(t, d), mu)


def derivative(model: SplineModel, p: int, x):
    """``d^p S / dx^p`` at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    _check_domain(model, xa.ravel())
    out = evaluate(derivative_model(model, p), xa)
    return float(out) if np.ndim(x) == 0 else out
