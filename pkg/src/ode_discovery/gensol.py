"""Approximate general solution: eigenfunction basis, amplitude fit and GA loss."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .characteristic import (
    DEFAULT_CLUSTER_TOL,
    EigenSpectrum,
    eigen_spectrum,
    eigenfunction_values,
)
from .errors import BasisOverflow, DegenerateBasis, InputError, NumericalError

PENALTY = 1e30
OVERFLOW_LIMIT = 1e150
SVD_RCOND = 1e-10


class BasisLayout(str, enum.Enum):
    """How each eigenmode is expanded into basis rows.

    ``PAPER_FAITHFUL`` gives one row per mode with the power sum and the
    cos+sin pair lumped under one amplitude.  ``EXTENDED_PHASE`` gives every
    power ``x^j`` for ``j = 0..alpha`` (and cos, sin separately) its own
    amplitude.  ``STANDARD`` is the textbook fundamental set: powers
    ``j = 0..alpha-1`` with separate cos and sin rows, so a simple root
    contributes no ``x e^{beta x}`` term.
    """

    PAPER_FAITHFUL = "paper"
    EXTENDED_PHASE = "extended"
    STANDARD = "standard"

    @classmethod
    def parse(cls, value) -> "BasisLayout":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace("-", "_")
        for member in cls:
            if text in (member.value, member.name.lower()):
                return member
        raise InputError(f"unknown basis layout {value!r}")


@dataclass(frozen=True)
class TimeSeries:
    xs: np.ndarray
    ys: np.ndarray

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        x = np.array(xs, dtype=float).ravel()
        y = np.array(ys, dtype=float).ravel()
        if x.shape != y.shape:
            raise InputError("xs and ys differ in length")
        if x.size < 2:
            raise InputError("a time series needs at least two points")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InputError("time series contains non-finite values")
        if np.any(np.diff(x) <= 0):
            raise InputError("xs must be strictly increasing")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "xs", x)
        object.__setattr__(self, "ys", y)

    def __len__(self):
        return self.xs.size


@dataclass(frozen=True)
class GeneralSolutionModel:
    """Spectrum plus fitted amplitudes.

    ``active`` optionally switches individual basis rows off (one flag per
    row of the full layout); amplitudes then cover the active rows only.
    """

    spectrum: EigenSpectrum
    amplitudes: tuple[float, ...]
    basis_layout: BasisLayout = BasisLayout.PAPER_FAITHFUL
    active: Optional[tuple[bool, ...]] = None

    def __post_init__(self):
        layout = BasisLayout.parse(self.basis_layout)
        object.__setattr__(self, "basis_layout", layout)
        amps = tuple(float(a) for a in self.amplitudes)
        n_rows = n_basis_rows(self.spectrum, layout)
        if self.active is not None:
            active = tuple(bool(a) for a in self.active)
            if len(active) != n_rows:
                raise InputError("active mask length does not match the basis layout")
            object.__setattr__(self, "active", active)
            n_rows = sum(active)
        if len(amps) != n_rows:
            raise InputError("amplitude count does not match the basis layout")
        if not all(np.isfinite(amps)):
            raise InputError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    def rows(self, xs) -> np.ndarray:
        """Basis rows actually carrying an amplitude, evaluated at ``xs``."""
        e = basis_matrix(self.spectrum, xs, self.basis_layout)
        if self.active is not None:
            e = e[np.array(self.active, dtype=bool)]
        return e


def n_basis_rows(spectrum: EigenSpectrum, layout: BasisLayout) -> int:
    if BasisLayout.parse(layout) is BasisLayout.PAPER_FAITHFUL:
        return len(spectrum.modes)
    extra = 1 if BasisLayout.parse(layout) is BasisLayout.EXTENDED_PHASE else 0
    return sum(max(m.multiplicity + extra, 1) * m.pair_weight for m in spectrum.modes)


def basis_matrix(spectrum: EigenSpectrum, xs, layout=BasisLayout.PAPER_FAITHFUL) -> np.ndarray:
    """Rows are basis functions, columns are sample points."""
    layout = BasisLayout.parse(layout)
    x = np.asarray(xs, dtype=float).ravel()
    rows = []
    with np.errstate(over="ignore", invalid="ignore"):
        for mode in spectrum.modes:
            if layout is BasisLayout.PAPER_FAITHFUL:
                rows.append(eigenfunction_values(mode, x))
                continue
            envelope = np.exp(mode.real_part * x)
            power = np.ones_like(x)
            n_powers = mode.multiplicity + 1 if layout is BasisLayout.EXTENDED_PHASE else mode.multiplicity
            for _ in range(max(n_powers, 1)):
                base = power * envelope
                if mode.imag_part > 0:
                    rows.append(base * np.cos(mode.imag_part * x))
                    rows.append(base * np.sin(mode.imag_part * x))
                else:
                    rows.append(base)
                power = power * x
    if not rows:
        return np.zeros((0, x.size))
    e = np.vstack(rows)
    if not np.all(np.isfinite(e)) or np.max(np.abs(e)) > OVERFLOW_LIMIT:
        raise BasisOverflow("eigenfunction basis overflowed")
    return e


def fit_amplitudes(e: np.ndarray, ys) -> np.ndarray:
    """Minimum-norm least-squares solution of ``E^T D = y`` via SVD."""
    e = np.asarray(e, dtype=float)
    y = np.asarray(ys, dtype=float).ravel()
    if e.ndim != 2 or e.shape[1] != y.size:
        raise InputError(f"basis has {e.shape[-1]} columns but {y.size} targets")
    if e.shape[0] == 0 or not np.any(e):
        raise DegenerateBasis("basis matrix is empty or identically zero")
    if not np.all(np.isfinite(e)):
        raise BasisOverflow("basis matrix contains non-finite entries")
    try:
        d, _, rank, _ = np.linalg.lstsq(e.T, y, rcond=SVD_RCOND)
    except np.linalg.LinAlgError as exc:
        raise DegenerateBasis(str(exc)) from exc
    if rank == 0 or not np.all(np.isfinite(d)):
        raise DegenerateBasis("no singular value above cutoff")
    return d


def predict(model: GeneralSolutionModel, xs) -> np.ndarray:
    return model.rows(xs).T @ np.asarray(model.amplitudes)


def fit_model(
    data: TimeSeries,
    c,
    layout=BasisLayout.PAPER_FAITHFUL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
) -> GeneralSolutionModel:
    """Spectrum of ``c`` plus amplitudes fitted to ``data``; raises on failure."""
    layout = BasisLayout.parse(layout)
    spectrum = eigen_spectrum(c, cluster_tol)
    e = basis_matrix(spectrum, data.xs, layout)
    d = fit_amplitudes(e, data.ys)
    return GeneralSolutionModel(spectrum, tuple(d), layout)


def mse(pred, ys) -> float:
    r = np.asarray(pred, dtype=float) - np.asarray(ys, dtype=float)
    return float(np.mean(r * r))


def fitness(
    data: TimeSeries,
    c,
    layout=BasisLayout.PAPER_FAITHFUL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
) -> float:
    """Mean squared error of the best general solution for candidate ``c``.

    Any failure along the way (degenerate leading coefficient, eigen solver,
    overflow, empty basis) returns ``PENALTY`` so the GA can keep ranking.
    """
    try:
        layout = BasisLayout.parse(layout)
        spectrum = eigen_spectrum(c, cluster_tol)
        e = basis_matrix(spectrum, data.xs, layout)
        d = fit_amplitudes(e, data.ys)
        with np.errstate(all="ignore"):
            loss = mse(e.T @ d, data.ys)
    except (NumericalError, InputError):
        return PENALTY
    if not np.isfinite(loss):
        return PENALTY
    return min(loss, PENALTY)
