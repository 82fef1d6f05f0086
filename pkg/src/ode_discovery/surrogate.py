"""Post-GA clean-up of the general solution: term pruning and eigenvalue polish.

The GA winner at candidate order P carries every basis row its spectrum
implies.  On noisy data the surplus rows soak up the noise offset, and the
spline stage then faithfully reproduces an ODE of the wrong order.  Pruning
drops rows whose share of the fitted signal is negligible; polishing then
moves the surviving eigenvalues to the local least-squares optimum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .characteristic import EigenMode, EigenSpectrum
from .errors import InputError, NumericalError
from .gensol import (
    SVD_RCOND,
    BasisLayout,
    GeneralSolutionModel,
    TimeSeries,
    basis_matrix,
    fit_amplitudes,
    mse,
)

DEFAULT_PRUNE_FRACTION = 0.01
DEFAULT_MAX_PASSES = 5
_MIN_IMAG = 1e-9


@dataclass(frozen=True)
class BasisTerm:
    """One basis row: ``x^power e^{beta x}`` times exp/cos/sin of mode ``mode``."""

    mode: int
    power: int
    kind: str  # "exp", "cos", "sin" or "paper" for the lumped row

    def label(self) -> str:
        return f"m{self.mode}:x^{self.power}:{self.kind}"


def basis_terms(spectrum: EigenSpectrum, layout) -> tuple[BasisTerm, ...]:
    """Row labels in the order produced by ``gensol.basis_matrix``."""
    layout = BasisLayout.parse(layout)
    out = []
    for q, mode in enumerate(spectrum.modes):
        if layout is BasisLayout.PAPER_FAITHFUL:
            out.append(BasisTerm(q, mode.multiplicity, "paper"))
            continue
        n_powers = mode.multiplicity + 1 if layout is BasisLayout.EXTENDED_PHASE else mode.multiplicity
        for j in range(max(n_powers, 1)):
            if mode.imag_part > 0:
                out += [BasisTerm(q, j, "cos"), BasisTerm(q, j, "sin")]
            else:
                out.append(BasisTerm(q, j, "exp"))
    return tuple(out)


def active_terms(model: GeneralSolutionModel) -> tuple[BasisTerm, ...]:
    terms = basis_terms(model.spectrum, model.basis_layout)
    if model.active is None:
        return terms
    return tuple(t for t, a in zip(terms, model.active) if a)


def term_contributions(model: GeneralSolutionModel, xs) -> np.ndarray:
    """RMS over ``xs`` of each active row times its amplitude."""
    e = model.rows(xs) * np.asarray(model.amplitudes)[:, None]
    return np.sqrt(np.mean(e * e, axis=1))


def _with_mask(model: GeneralSolutionModel, mask: np.ndarray, data: TimeSeries) -> GeneralSolutionModel:
    e = basis_matrix(model.spectrum, data.xs, model.basis_layout)[mask]
    d = fit_amplitudes(e, data.ys)
    return GeneralSolutionModel(model.spectrum, tuple(d), model.basis_layout, tuple(bool(m) for m in mask))


def _full_mask(model: GeneralSolutionModel) -> np.ndarray:
    if model.active is None:
        return np.ones(len(basis_terms(model.spectrum, model.basis_layout)), dtype=bool)
    return np.array(model.active, dtype=bool)


def unique_contributions(model: GeneralSolutionModel, data: TimeSeries) -> np.ndarray:
    """For each active row, ``sqrt(MSE without it - MSE with it)`` after refitting.

    This is the part of the fit that no combination of the other rows can
    replace, so nearly collinear rows score low even with large amplitudes.
    """
    e = model.rows(data.xs)
    ys = np.asarray(data.ys)
    base = mse(e.T @ np.asarray(model.amplitudes), ys)
    out = np.empty(e.shape[0])
    for i in range(e.shape[0]):
        rest = np.delete(e, i, axis=0)
        if rest.shape[0] == 0:
            out[i] = np.sqrt(np.mean(ys * ys))
            continue
        d, *_ = np.linalg.lstsq(rest.T, ys, rcond=SVD_RCOND)
        out[i] = np.sqrt(max(mse(rest.T @ d, ys) - base, 0.0))
    return out


def prune_terms(
    model: GeneralSolutionModel, data: TimeSeries, fraction: float = DEFAULT_PRUNE_FRACTION
) -> GeneralSolutionModel:
    """Backward elimination of rows the fit does not need.

    The row with the smallest unique contribution is dropped while that
    contribution is below ``fraction`` times the RMS of the prediction;
    amplitudes are refitted after every removal.  One row always survives
    and a zero prediction is returned unchanged.
    """
    if not 0.0 <= fraction < 1.0:
        raise InputError("prune fraction must lie in [0, 1)")
    if fraction == 0.0:
        return model
    mask = _full_mask(model)
    current = model
    while np.count_nonzero(mask) > 1:
        pred = current.rows(data.xs).T @ np.asarray(current.amplitudes)
        total = float(np.sqrt(np.mean(pred * pred)))
        if total == 0.0:
            break
        u = unique_contributions(current, data)
        i = int(np.argmin(u))
        if u[i] >= fraction * total:
            break
        mask = mask.copy()
        mask[np.nonzero(mask)[0][i]] = False
        current = _with_mask(current, mask, data)
    return current


def _used_modes(model: GeneralSolutionModel) -> list[int]:
    return sorted({t.mode for t in active_terms(model)})


def _spectrum_with(spectrum: EigenSpectrum, updates: dict[int, tuple[float, float]]) -> EigenSpectrum:
    modes = list(spectrum.modes)
    for q, (beta, gamma) in updates.items():
        m = modes[q]
        modes[q] = EigenMode(m.multiplicity, float(beta), float(gamma) if m.imag_part > 0 else 0.0)
    return EigenSpectrum(tuple(modes), spectrum.source_order)


def polish(model: GeneralSolutionModel, data: TimeSeries) -> GeneralSolutionModel:
    """Local least-squares refinement of the eigenvalues behind active rows.

    Amplitudes are eliminated (variable projection), so the search is over
    ``beta`` (and ``gamma`` for oscillatory modes) only.  Multiplicities and
    the active-row pattern are kept.  The polished model replaces the input
    only if it lowers the MSE.
    """
    used = _used_modes(model)
    if not used:
        return model
    mask = _full_mask(model)
    base_mse = mse(model.rows(data.xs).T @ np.asarray(model.amplitudes), data.ys)
    if base_mse == 0.0:
        return model

    theta0, lo, hi, slots = [], [], [], []
    for q in used:
        m = model.spectrum.modes[q]
        slots.append((q, len(theta0), m.imag_part > 0))
        theta0.append(m.real_part)
        lo.append(-np.inf)
        hi.append(np.inf)
        if m.imag_part > 0:
            theta0.append(m.imag_part)
            lo.append(_MIN_IMAG)
            hi.append(np.inf)
    theta0 = np.clip(np.array(theta0), lo, hi)
    ys = np.asarray(data.ys)
    bad = np.full(ys.size, 1e3 * (1.0 + np.max(np.abs(ys))))

    def unpack(theta):
        return {q: (theta[i], theta[i + 1] if cplx else 0.0) for q, i, cplx in slots}

    def residual(theta):
        try:
            sp = _spectrum_with(model.spectrum, unpack(theta))
            e = basis_matrix(sp, data.xs, model.basis_layout)[mask]
            d = fit_amplitudes(e, ys)
        except (NumericalError, InputError):
            return bad
        r = e.T @ d - ys
        return r if np.all(np.isfinite(r)) else bad

    with np.errstate(all="ignore"):
        sol = least_squares(residual, theta0, bounds=(lo, hi), x_scale="jac")
    try:
        spectrum = _spectrum_with(model.spectrum, unpack(sol.x))
        e = basis_matrix(spectrum, data.xs, model.basis_layout)[mask]
        d = fit_amplitudes(e, ys)
    except (NumericalError, InputError):
        return model
    if not mse(e.T @ d, ys) < base_mse:
        return model
    return GeneralSolutionModel(spectrum, tuple(d), model.basis_layout, tuple(bool(m) for m in mask))


def simplify(
    model: GeneralSolutionModel,
    data: TimeSeries,
    fraction: float = DEFAULT_PRUNE_FRACTION,
    do_polish: bool = True,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> GeneralSolutionModel:
    """Alternate pruning and polishing until the active rows stop changing."""
    current = model
    for _ in range(max_passes):
        before = _full_mask(current)
        current = prune_terms(current, data, fraction)
        if do_polish:
            current = polish(current, data)
        if np.array_equal(before, _full_mask(current)):
            break
    return current


def describe(model: GeneralSolutionModel) -> list[dict]:
    """Active rows with their mode parameters and amplitudes, for reports."""
    out = []
    for t, amp in zip(active_terms(model), model.amplitudes):
        m = model.spectrum.modes[t.mode]
        out.append(
            {
                "mode": t.mode,
                "power": t.power,
                "kind": t.kind,
                "real_part": m.real_part,
                "imag_part": m.imag_part,
                "amplitude": float(amp),
            }
        )
    return out


def refit(model: GeneralSolutionModel, data: TimeSeries, mask: Optional[np.ndarray] = None) -> GeneralSolutionModel:
    """Refit amplitudes on ``data`` for the given (or current) row mask."""
    return _with_mask(model, _full_mask(model) if mask is None else np.asarray(mask, dtype=bool), data)
