"""Characteristic polynomial, companion matrix and eigenfunction basis values.

A candidate ODE ``sum_p C_p y^(p) = 0`` is represented by its coefficient
vector.  The roots of ``sum_p C_p lam^p`` are found as eigenvalues of the
companion matrix and grouped into unique modes ``(alpha, beta, gamma)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EigenSolveFailure, InputError, LeadingCoefficientZero

LEADING_COEFF_RTOL = 1e-8
DEFAULT_CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class CoefficientVector:
    """ODE coefficients ``C_0 .. C_P``; index is the derivative order."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        arr = np.asarray(coeffs, dtype=float).ravel()
        if arr.size < 2:
            raise InputError("a coefficient vector needs at least two entries (order >= 1)")
        if not np.all(np.isfinite(arr)):
            raise InputError("coefficients must be finite")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in arr))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs)

    def __len__(self):
        return len(self.coeffs)


@dataclass(frozen=True)
class EigenMode:
    multiplicity: int
    real_part: float
    imag_part: float = 0.0

    def __post_init__(self):
        # multiplicity 0 is accepted for hand-built "pure growth" modes
        if self.multiplicity < 0:
            raise InputError("multiplicity must be non-negative")
        if self.imag_part < 0:
            raise InputError("imag_part is stored non-negative; conjugates are implied")

    @property
    def pair_weight(self) -> int:
        return 2 if self.imag_part > 0 else 1


@dataclass(frozen=True)
class EigenSpectrum:
    modes: tuple[EigenMode, ...]
    source_order: int

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        weight = sum(m.multiplicity * m.pair_weight for m in self.modes)
        if weight != self.source_order:
            raise InputError(
                f"pair-weighted multiplicities sum to {weight}, expected {self.source_order}"
            )

    def roots(self) -> np.ndarray:
        """Expand modes back into the full multiset of complex roots."""
        out = []
        for m in self.modes:
            lam = complex(m.real_part, m.imag_part)
            out.extend([lam] * m.multiplicity)
            if m.imag_part > 0:
                out.extend([lam.conjugate()] * m.multiplicity)
        return np.array(out, dtype=complex)


def _as_coefficients(c) -> CoefficientVector:
    return c if isinstance(c, CoefficientVector) else CoefficientVector(c)


def companion_matrix(c) -> np.ndarray:
    c = _as_coefficients(c)
    a = c.as_array()
    lead = a[-1]
    if abs(lead) < LEADING_COEFF_RTOL * np.max(np.abs(a)) or lead == 0.0:
        raise LeadingCoefficientZero(f"|C_P| = {abs(lead):.3g} is negligible")
    n = c.order
    m = np.zeros((n, n))
    m[np.arange(n - 1), np.arange(1, n)] = 1.0
    m[-1, :] = -a[:-1] / lead
    return m


def eigen_spectrum(c, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> EigenSpectrum:
    """Unique eigenvalues of the companion matrix with their multiplicities.

    Roots closer than ``cluster_tol * max(1, |lam|)`` are treated as one.
    Conjugate pairs collapse into a single mode with ``imag_part > 0``.
    """
    c = _as_coefficients(c)
    m = companion_matrix(c)
    try:
        lam = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenSolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigenSolveFailure("eigenvalues are not finite")
    lam = np.asarray(lam, dtype=complex)

    # LAPACK returns exact conjugate pairs for real input: keep the upper half
    # and weight each complex root by two.
    upper = lam[lam.imag >= 0]
    upper = upper[np.lexsort((upper.imag, upper.real))]
    clusters: list[list[complex]] = []
    for root in upper:
        for members in clusters:
            centre = np.mean(members)
            if abs(root - centre) <= cluster_tol * max(1.0, abs(root)):
                members.append(root)
                break
        else:
            clusters.append([root])

    modes = []
    for members in clusters:
        centre = complex(np.mean(members))
        has_real = any(r.imag == 0 for r in members)
        near_axis = abs(centre.imag) <= cluster_tol * max(1.0, abs(centre))
        if has_real or near_axis:
            alpha = sum(1 if r.imag == 0 else 2 for r in members)
            modes.append(EigenMode(alpha, float(centre.real), 0.0))
        else:
            modes.append(EigenMode(len(members), float(centre.real), float(centre.imag)))
    modes.sort(key=lambda md: (md.real_part, md.imag_part))
    spectrum = EigenSpectrum(tuple(modes), c.order)
    assert sum(md.multiplicity * md.pair_weight for md in spectrum.modes) == c.order
    return spectrum


def eigenfunction_values(mode: EigenMode, xs) -> np.ndarray:
    """Vectorised eigenfunction ``(sum_{j=0}^{alpha} x^j) e^{beta x} (cos + sin)(gamma x)``.

    The power sum runs to ``alpha`` inclusive.  Overflow yields inf/nan entries,
    which callers treat as a failed candidate.
    """
    x = np.asarray(xs, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        powers = np.zeros_like(x)
        term = np.ones_like(x)
        for _ in range(mode.multiplicity + 1):
            powers = powers + term
            term = term * x
        growth = np.exp(mode.real_part * x)
        wave = np.cos(mode.imag_part * x) + np.sin(mode.imag_part * x)
        return powers * growth * wave


def eigenfunction_value(mode: EigenMode, x: float) -> float:
    return float(eigenfunction_values(mode, np.array([x], dtype=float))[0])
