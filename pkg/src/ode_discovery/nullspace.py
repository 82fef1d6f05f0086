"""ODE coefficients from the null space of the spline gradient matrix."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .bspline import SplineModel, derivative_model, evaluate
from .characteristic import CoefficientVector
from .errors import (
    AllCoefficientsBelowTolerance,
    InputError,
    NumericalError,
    OrderExceedsDegree,
    PivotBelowTolerance,
)

DEFAULT_SAMPLES = 1000
DEFAULT_TRIM = 0.02
DEFAULT_RANK_TOL = 1e-8
DEFAULT_ZERO_TOL = 1e-4
SPRING_ONE_TOL = 0.98
KINETICS_ONE_TOL = 0.1

LOWEST = "lowest"
Pivot = Union[str, int]


@dataclass(frozen=True)
class GradientMatrix:
    entries: np.ndarray  # (P+1, n_samples); row p holds the p-th derivative
    sample_xs: np.ndarray

    @property
    def order(self) -> int:
        return self.entries.shape[0] - 1


@dataclass(frozen=True)
class DiscoveredODE:
    coefficients: CoefficientVector
    raw_null_vector: tuple[float, ...]
    residual: float
    rank_estimate: int
    singular_values: tuple[float, ...] = ()
    sparsity_mask: Optional[tuple[float, ...]] = None
    pivot_order: Optional[int] = None


def gradient_matrix(
    model: SplineModel,
    candidate_order: int,
    n_samples: int = DEFAULT_SAMPLES,
    trim: float = DEFAULT_TRIM,
) -> GradientMatrix:
    if candidate_order > model.degree:
        raise OrderExceedsDegree(
            f"order {candidate_order} needs a spline of degree >= {candidate_order}, got {model.degree}"
        )
    if candidate_order < 1:
        raise InputError("candidate order must be at least 1")
    if n_samples < candidate_order + 1:
        raise InputError("need at least P + 1 samples")
    if not 0 <= trim < 0.5:
        raise InputError("trim fraction must lie in [0, 0.5)")
    a, b = model.domain
    width = b - a
    xs = np.linspace(a + trim * width, b - trim * width, n_samples)
    rows = [evaluate(model, xs)]
    for p in range(1, candidate_order + 1):
        rows.append(evaluate(derivative_model(model, p), xs))
    g = np.vstack(rows)
    if not np.all(np.isfinite(g)):
        raise NumericalError("gradient matrix has non-finite entries")
    return GradientMatrix(g, xs)


def null_coefficients(g: GradientMatrix, rank_tol: float = DEFAULT_RANK_TOL) -> DiscoveredODE:
    """Right singular vector of ``G^T`` for its smallest singular value.

    An identically zero matrix has no preferred direction; the returned
    vector is then all zeros and normalisation will refuse it.
    """
    gt = g.entries.T
    _, s, vt = np.linalg.svd(gt, full_matrices=False)
    if s[0] == 0:
        zeros = np.zeros(gt.shape[1])
        return DiscoveredODE(CoefficientVector(zeros), tuple(zeros), 0.0, 0, tuple(float(x) for x in s))
    v = vt[-1].copy()
    v /= np.linalg.norm(v)
    # deterministic sign: the lowest-order non-negligible entry is positive
    big = np.nonzero(np.abs(v) >= DEFAULT_ZERO_TOL)[0]
    lead = big[0] if big.size else int(np.argmax(np.abs(v)))
    if v[lead] < 0:
        v = -v
    rank = int(np.count_nonzero(s >= rank_tol * s[0])) if s[0] > 0 else 0
    residual = float(np.linalg.norm(gt @ v) / gt.shape[0])
    return DiscoveredODE(
        coefficients=CoefficientVector(v),
        raw_null_vector=tuple(float(c) for c in v),
        residual=residual,
        rank_estimate=rank,
        singular_values=tuple(float(x) for x in s),
    )


def sparsity_transform(
    unit: np.ndarray, normalized: np.ndarray, zero_tol: float, one_tol: float
) -> np.ndarray:
    """Threshold-and-rescale map used for sparsity plots.

    Entries whose unit-norm magnitude is below ``zero_tol`` become 0; entries
    whose pivot-normalised magnitude exceeds ``one_tol`` become 1; the vector
    is then min-max scaled into [0, 1].
    """
    mag = np.abs(np.asarray(normalized, dtype=float))
    out = np.where(mag > one_tol, 1.0, mag)
    out = np.where(np.abs(np.asarray(unit, dtype=float)) < zero_tol, 0.0, out)
    lo, hi = out.min(), out.max()
    if hi > lo:
        out = (out - lo) / (hi - lo)
    return out


def parse_pivot(value) -> Pivot:
    if isinstance(value, (int, np.integer)):
        return int(value)
    text = str(value).strip().lower()
    if text in (LOWEST, "lowest_surviving_order", "lowestsurvivingorder"):
        return LOWEST
    for prefix in ("orderk(", "order"):
        if text.startswith(prefix):
            text = text[len(prefix):].rstrip(")")
    try:
        return int(text)
    except ValueError:
        raise InputError(f"unknown pivot {value!r}") from None


def normalize_and_sparsify(
    d: DiscoveredODE,
    pivot: Pivot = LOWEST,
    zero_tol: float = DEFAULT_ZERO_TOL,
    one_tol: float = SPRING_ONE_TOL,
) -> DiscoveredODE:
    v = np.asarray(d.raw_null_vector, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise AllCoefficientsBelowTolerance("null vector is zero")
    unit = v / norm
    alive = np.nonzero(np.abs(unit) >= zero_tol)[0]
    if alive.size == 0:
        raise AllCoefficientsBelowTolerance(f"no coefficient reaches {zero_tol:g}")
    pivot = parse_pivot(pivot)
    if pivot == LOWEST:
        k = int(alive[0])
    else:
        k = int(pivot)
        if not 0 <= k < unit.size:
            raise InputError(f"pivot order {k} outside 0..{unit.size - 1}")
        if abs(unit[k]) < zero_tol:
            raise PivotBelowTolerance(f"pivot coefficient of order {k} is {abs(unit[k]):.3g}")
    if unit[k] < 0:
        unit = -unit
    normalized = unit / unit[k]
    mask = sparsity_transform(unit, normalized, zero_tol, one_tol)
    return replace(
        d,
        coefficients=CoefficientVector(normalized),
        raw_null_vector=tuple(float(c) for c in unit),
        sparsity_mask=tuple(float(m) for m in mask),
        pivot_order=k,
    )
