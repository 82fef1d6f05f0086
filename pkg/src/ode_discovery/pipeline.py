"""End-to-end discovery: GA general solution, spline surrogate, null space.

``discover`` runs one series through all stages and returns a ``RunReport``.
The benchmark helpers rebuild the spring-mass table and the EDC photolysis
rate table on generated data.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import bspline as bs
from . import nullspace as ns
from .config import RunConfig, to_flat
from .datagen import (
    EDC_RATES,
    SPRING_CASES,
    NoiseSpec,
    SpringParams,
    add_noise,
    augment_log_linear,
    spring_mass_series,
)
from .errors import DiscoveryError, InputError, StageError
from .evolve import GAResult, run_ga
from .gensol import GeneralSolutionModel, TimeSeries, fit_model, mse, predict
from .series_io import series_checksum
from .surrogate import describe, simplify

log = logging.getLogger(__name__)

STAGES = ("ga", "surrogate", "spline", "nullspace")
REPORT_VERSION = 1


@dataclass(frozen=True)
class SplineSummary:
    degree: int
    knots: tuple[float, ...]
    control_coeffs: tuple[float, ...]
    rounds: int
    converged: bool
    max_phi: float
    residual_history: tuple[float, ...]

    @property
    def n_knots(self) -> int:
        return len(self.knots)

    @property
    def n_spans(self) -> int:
        return int(np.count_nonzero(np.diff(self.knots) > 0))

    def model(self) -> bs.SplineModel:
        return bs.SplineModel(bs.KnotVector(self.knots, self.degree), self.control_coeffs)


@dataclass(frozen=True)
class RunReport:
    config: RunConfig
    ga: GAResult
    general_solution: GeneralSolutionModel
    general_solution_mse: float
    spline: SplineSummary
    ode: ns.DiscoveredODE
    input_sha256: str
    n_points: int
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def coefficients(self) -> np.ndarray:
        return self.ode.coefficients.as_array()

    def to_dict(self, include_timings: bool = True) -> dict[str, Any]:
        """Plain nested dict with a fixed key order (JSON-ready)."""
        ode = self.ode
        out: dict[str, Any] = {
            "report_version": REPORT_VERSION,
            "provenance": {
                "seed": self.config.seed,
                "input_sha256": self.input_sha256,
                "n_points": self.n_points,
                "config": to_flat(self.config),
            },
            "ga": {
                "best_coefficients": list(self.ga.best_coefficients.coeffs),
                "best_loss": self.ga.best_loss,
                "generations_run": self.ga.generations_run,
                "loss_history": list(self.ga.loss_history),
            },
            "general_solution": {
                "basis_layout": self.general_solution.basis_layout.value,
                "mse": self.general_solution_mse,
                "modes": [
                    {"multiplicity": m.multiplicity, "real_part": m.real_part, "imag_part": m.imag_part}
                    for m in self.general_solution.spectrum.modes
                ],
                "active_terms": describe(self.general_solution),
            },
            "spline": {
                "degree": self.spline.degree,
                "n_knots": self.spline.n_knots,
                "n_spans": self.spline.n_spans,
                "rounds": self.spline.rounds,
                "converged": self.spline.converged,
                "max_phi": self.spline.max_phi,
                "residual_history": list(self.spline.residual_history),
                "knots": list(self.spline.knots),
                "control_coeffs": list(self.spline.control_coeffs),
            },
            "ode": {
                "coefficients": list(ode.coefficients.coeffs),
                "raw_null_vector": list(ode.raw_null_vector),
                "pivot_order": ode.pivot_order,
                "sparsity_mask": list(ode.sparsity_mask) if ode.sparsity_mask is not None else None,
                "residual": ode.residual,
                "rank_estimate": ode.rank_estimate,
                "singular_values": list(ode.singular_values),
            },
        }
        if include_timings:
            out["timings"] = dict(self.timings)
        return out


def _stage(name: str, fn: Callable, timings: dict[str, float]):
    t0 = time.perf_counter()
    try:
        result = fn()
    except (DiscoveryError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc
    timings[name] = time.perf_counter() - t0
    return result


def discover(
    data: TimeSeries,
    cfg: Optional[RunConfig] = None,
    executor=None,
    input_sha256: Optional[str] = None,
) -> RunReport:
    """Run every stage on ``data``; errors come back as ``StageError``."""
    cfg = cfg or RunConfig()
    if not isinstance(data, TimeSeries):
        raise InputError("data must be a TimeSeries")
    P = cfg.candidate_order
    timings: dict[str, float] = {}

    ga = _stage(
        "ga",
        lambda: run_ga(data, P, cfg.ga, cfg.basis_layout, cfg.cluster_tol, executor=executor),
        timings,
    )

    def surrogate():
        model = fit_model(data, ga.best_coefficients, cfg.basis_layout, cfg.cluster_tol)
        if cfg.prune_fraction > 0 or cfg.polish:
            model = simplify(model, data, cfg.prune_fraction, cfg.polish)
        return model

    model = _stage("surrogate", surrogate, timings)
    gs_mse = mse(predict(model, data.xs), data.ys)

    def spline():
        xg = np.linspace(data.xs[0], data.xs[-1], cfg.dense_points)
        yg = predict(model, xg)
        kv = bs.uniform_knots((xg[0], xg[-1]), P, P + 1)
        fitted, trace = bs.refine_trace(xg, yg, bs.fit(xg, yg, kv), cfg.spline_tau, cfg.spline_max_rounds)
        if not trace.converged:
            log.warning(
                "spline refinement stopped after %d rounds with max phi %.3g > %g",
                trace.rounds,
                trace.max_phi,
                cfg.spline_tau,
            )
        return fitted, trace

    fitted, trace = _stage("spline", spline, timings)
    summary = SplineSummary(
        degree=fitted.degree,
        knots=tuple(float(t) for t in fitted.knot_vector.knots),
        control_coeffs=tuple(float(c) for c in fitted.control_coeffs),
        rounds=trace.rounds,
        converged=trace.converged,
        max_phi=trace.max_phi,
        residual_history=tuple(trace.residual_history),
    )

    def nullspace():
        g = ns.gradient_matrix(fitted, P, cfg.n_gradient_samples, cfg.sample_trim)
        raw = ns.null_coefficients(g, cfg.rank_tol)
        return ns.normalize_and_sparsify(raw, cfg.pivot, cfg.zero_tol, cfg.one_tol)

    ode = _stage("nullspace", nullspace, timings)
    return RunReport(
        config=cfg,
        ga=ga,
        general_solution=model,
        general_solution_mse=gs_mse,
        spline=summary,
        ode=ode,
        input_sha256=input_sha256 or series_checksum(data),
        n_points=len(data),
        timings=timings,
    )


# --- spring-mass benchmark -------------------------------------------------

# Row order of the published comparison table: noisy block first.
SPRING_CELLS = tuple(
    (regime, noisy) for noisy in (True, False) for regime in ("overdamped", "critical", "underdamped")
)


def spring_truth(p: SpringParams, order: int) -> np.ndarray:
    """(k, b, m) scaled so the zeroth-order coefficient is 1, padded to ``order``."""
    out = np.zeros(order + 1)
    k, b, m = p.coefficients
    out[:3] = np.array([k, b, m]) / k
    return out


@dataclass(frozen=True)
class CellResult:
    name: str
    noisy: bool
    seed: int
    truth: tuple[float, ...]
    report: Optional[RunReport] = None
    error: Optional[str] = None
    error_stage: Optional[str] = None

    def relative_errors(self, orders: int = 3) -> Optional[np.ndarray]:
        if self.report is None:
            return None
        got = self.report.coefficients[:orders]
        want = np.asarray(self.truth[:orders])
        return np.abs(got - want) / np.abs(want)

    def row(self) -> dict[str, Any]:
        out: dict[str, Any] = {"case": self.name, "noise": self.noisy, "seed": self.seed, "truth": list(self.truth)}
        if self.report is None:
            out.update(error=self.error, stage=self.error_stage)
            return out
        rep = self.report
        out.update(
            coefficients=list(rep.ode.coefficients.coeffs),
            sparsity_mask=list(rep.ode.sparsity_mask),
            max_relative_error=float(np.max(self.relative_errors())),
            ga_loss=rep.ga.best_loss,
            general_solution_mse=rep.general_solution_mse,
            spline_max_phi=rep.spline.max_phi,
            residual=rep.ode.residual,
        )
        return out


def _run_cell(args) -> CellResult:
    name, noisy, data, cfg, truth = args
    try:
        report = discover(data, cfg)
    except StageError as exc:
        return CellResult(name, noisy, cfg.seed, truth, error=str(exc), error_stage=exc.stage)
    return CellResult(name, noisy, cfg.seed, truth, report=report)


def _map_cells(jobs: Sequence, n_workers: int) -> list[CellResult]:
    if n_workers <= 1 or len(jobs) <= 1:
        return [_run_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(_run_cell, jobs))


def spring_dataset(name: str, noisy: bool, noise: Optional[NoiseSpec] = None) -> TimeSeries:
    ts = spring_mass_series(SPRING_CASES[name])
    return add_noise(ts, noise or NoiseSpec()) if noisy else ts


def benchmark_spring(
    cfg: Optional[RunConfig] = None,
    noise: Optional[NoiseSpec] = None,
    cells: Sequence[tuple[str, bool]] = SPRING_CELLS,
    n_workers: int = 1,
) -> list[CellResult]:
    """All (regime, noise) cells; cell ``i`` uses GA seed ``cfg.seed + i``.

    A failing cell records its stage error and the remaining cells still run.
    """
    cfg = cfg or RunConfig()
    noise = noise or NoiseSpec()
    jobs = []
    for i, (name, noisy) in enumerate(cells):
        cell_cfg = cfg.with_seed(cfg.seed + i)
        truth = tuple(spring_truth(SPRING_CASES[name], cfg.candidate_order))
        jobs.append((name, noisy, spring_dataset(name, noisy, noise), cell_cfg, truth))
    return _map_cells(jobs, n_workers)


# --- EDC photolysis benchmark ----------------------------------------------


@dataclass(frozen=True)
class EDCResult:
    component: str
    reference_rate: float
    seed: int
    report: Optional[RunReport] = None
    error: Optional[str] = None
    error_stage: Optional[str] = None

    @property
    def rate(self) -> Optional[float]:
        return None if self.report is None else float(self.report.coefficients[0])

    @property
    def squared_error(self) -> Optional[float]:
        return None if self.report is None else (self.rate - self.reference_rate) ** 2

    def row(self) -> dict[str, Any]:
        out: dict[str, Any] = {"component": self.component, "reference_rate": self.reference_rate, "seed": self.seed}
        if self.report is None:
            out.update(error=self.error, stage=self.error_stage)
            return out
        out.update(
            rate=self.rate,
            squared_error=self.squared_error,
            coefficients=list(self.report.ode.coefficients.coeffs),
            sparsity_mask=list(self.report.ode.sparsity_mask),
            general_solution_mse=self.report.general_solution_mse,
        )
        return out


def edc_training_series(sparse: TimeSeries, n_new: int = 1000, noise: Optional[NoiseSpec] = None) -> TimeSeries:
    """Log-linear densification of a sparse decay curve plus additive noise."""
    return augment_log_linear(sparse, n_new=n_new, c0=float(sparse.ys[0]), noise=noise)


def benchmark_edc(
    cfg: Optional[RunConfig] = None,
    series: Optional[dict[str, TimeSeries]] = None,
    noise: Optional[NoiseSpec] = None,
    n_new: int = 1000,
    n_workers: int = 1,
) -> list[EDCResult]:
    """Recover first-order rate constants for every EDC component.

    ``series`` maps component names to sparse measurements; by default the
    shipped synthetic stand-ins are used.  Component ``i`` uses GA seed
    ``cfg.seed + i``.  The rate is the zeroth-order coefficient after
    normalising the first-order coefficient to 1.
    """
    from .edc_data import load_edc_series

    cfg = cfg or RunConfig.kinetics()
    noise = noise or NoiseSpec()
    series = series or {name: load_edc_series(name) for name in EDC_RATES}
    jobs = []
    names = [n for n in EDC_RATES if n in series] + sorted(set(series) - set(EDC_RATES))
    for i, name in enumerate(names):
        cell_cfg = cfg.with_seed(cfg.seed + i)
        data = edc_training_series(series[name], n_new, noise)
        jobs.append((name, data, cell_cfg))
    cells = _map_cells([(n, False, d, c, ()) for n, d, c in jobs], n_workers)
    return [
        EDCResult(
            component=c.name,
            reference_rate=float(EDC_RATES.get(c.name, float("nan"))),
            seed=c.seed,
            report=c.report,
            error=c.error,
            error_stage=c.error_stage,
        )
        for c in cells
    ]


# --- sparsity map ------------------------------------------------------------


def sparsity_map(
    reports: Sequence[RunReport],
    zero_tol: float = ns.DEFAULT_ZERO_TOL,
    one_tol: float = ns.SPRING_ONE_TOL,
) -> np.ndarray:
    """Stack the threshold-and-rescale transform of each report's null vector."""
    if not reports:
        return np.zeros((0, 0))
    orders = {len(r.ode.raw_null_vector) for r in reports}
    if len(orders) != 1:
        raise InputError("reports must share the candidate order")
    vectors = [r.ode.raw_null_vector for r in reports]
    pivots = [r.ode.pivot_order if r.ode.pivot_order is not None else ns.LOWEST for r in reports]
    return sparsity_rows(vectors, pivots, zero_tol, one_tol)


def sparsity_rows(vectors: Sequence[Sequence[float]], pivots: Sequence, zero_tol: float, one_tol: float) -> np.ndarray:
    """Same transform as ``sparsity_map`` starting from stored unit vectors."""
    rows = []
    for v, pivot in zip(vectors, pivots):
        d = ns.DiscoveredODE(
            coefficients=ns.CoefficientVector(v),
            raw_null_vector=tuple(float(x) for x in v),
            residual=0.0,
            rank_estimate=0,
        )
        rows.append(np.asarray(ns.normalize_and_sparsify(d, pivot, zero_tol, one_tol).sparsity_mask))
    return np.vstack(rows) if rows else np.zeros((0, 0))
