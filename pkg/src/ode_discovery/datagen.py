"""Benchmark data: analytic spring-mass trajectories and first-order decay curves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NonPositiveConcentration
from .gensol import TimeSeries


@dataclass(frozen=True)
class SpringParams:
    mass: float
    damping: float
    stiffness: float
    x0: float = 0.4
    v0: float = -0.6
    duration: float = 20.0
    n_points: int = 1000

    def __post_init__(self):
        if self.mass <= 0 or self.stiffness <= 0 or self.damping < 0:
            raise InputError("spring needs mass > 0, stiffness > 0, damping >= 0")
        if self.duration <= 0 or self.n_points < 2:
            raise InputError("duration must be positive and n_points >= 2")

    @property
    def discriminant(self) -> float:
        return self.damping**2 - 4.0 * self.mass * self.stiffness

    @property
    def regime(self) -> str:
        d = self.discriminant
        if abs(d) <= 1e-12 * (self.damping**2 + 4.0 * self.mass * self.stiffness):
            return "critical"
        return "overdamped" if d > 0 else "underdamped"

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """ODE coefficients ordered by derivative: (k, b, m)."""
        return (self.stiffness, self.damping, self.mass)


# Table 1 of the benchmark: shared initial state, 20 s, 1000 samples.
SPRING_CASES = {
    "underdamped": SpringParams(mass=4.0, damping=2.0, stiffness=1.0),
    "critical": SpringParams(mass=1.0, damping=2.0, stiffness=1.0),
    "overdamped": SpringParams(mass=2.0, damping=4.0, stiffness=1.0),
}


@dataclass(frozen=True)
class NoiseSpec:
    mean: float = 0.5
    sd: float = 0.1
    scale: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.sd < 0 or self.scale < 0:
            raise InputError("noise sd and scale must be non-negative")


def _spring_basis(p: SpringParams):
    """Return ``(f0, f1)`` basis callables and their derivatives at t = 0."""
    m, b = p.mass, p.damping
    decay = -b / (2.0 * m)
    regime = p.regime
    if regime == "overdamped":
        s = math.sqrt(p.discriminant) / (2.0 * m)
        r1, r2 = decay + s, decay - s
        return (lambda t: np.exp(r1 * t), lambda t: np.exp(r2 * t)), ((1.0, r1), (1.0, r2))
    if regime == "critical":
        return (
            (lambda t: np.exp(decay * t), lambda t: t * np.exp(decay * t)),
            ((1.0, decay), (0.0, 1.0)),
        )
    w = math.sqrt(-p.discriminant) / (2.0 * m)
    return (
        (lambda t: np.exp(decay * t) * np.cos(w * t), lambda t: np.exp(decay * t) * np.sin(w * t)),
        ((1.0, decay), (0.0, w)),
    )


def spring_solution(p: SpringParams):
    """Closed-form trajectory ``x(t)`` as a vectorised callable.

    The two constants come from solving x(0) = x0, x'(0) = v0 on the regime's
    basis pair.
    """
    (f0, f1), ((v00, d00), (v10, d10)) = _spring_basis(p)
    a = np.array([[v00, v10], [d00, d10]])
    c0, c1 = np.linalg.solve(a, [p.x0, p.v0])
    return lambda t: c0 * f0(np.asarray(t, dtype=float)) + c1 * f1(np.asarray(t, dtype=float))


def spring_mass_series(p: SpringParams) -> TimeSeries:
    t = np.linspace(0.0, p.duration, p.n_points)
    return TimeSeries(t, spring_solution(p)(t))


def first_order_series(rate_k: float, c0: float, duration: float, n_points: int) -> TimeSeries:
    if rate_k <= 0 or c0 <= 0:
        raise InputError("rate_k and c0 must be positive")
    t = np.linspace(0.0, duration, n_points)
    return TimeSeries(t, c0 * np.exp(-rate_k * t))


def add_noise(ts: TimeSeries, spec: NoiseSpec) -> TimeSeries:
    """Additive ``scale * N(mean, sd)`` noise from a seeded generator."""
    if spec.scale == 0:
        return TimeSeries(ts.xs, ts.ys)
    rng = np.random.default_rng(spec.seed)
    g = rng.normal(spec.mean, spec.sd, size=len(ts))
    return TimeSeries(ts.xs, ts.ys + spec.scale * g)


def augment_log_linear(
    sparse: TimeSeries, n_new: int = 1000, c0: float | None = None, noise: NoiseSpec | None = None
) -> TimeSeries:
    """Densify a short decay series by interpolating ``ln(y / c0)`` linearly.

    The dense grid spans the sparse abscissae; noise (if any) is added after
    transforming back.
    """
    ys = sparse.ys
    if np.any(ys <= 0):
        raise NonPositiveConcentration("log-linear augmentation needs positive concentrations")
    if c0 is None:
        c0 = float(ys[0])
    if c0 <= 0:
        raise NonPositiveConcentration("c0 must be positive")
    if n_new < 2:
        raise InputError("n_new must be at least 2")
    grid = np.linspace(sparse.xs[0], sparse.xs[-1], n_new)
    log_y = np.interp(grid, sparse.xs, np.log(ys / c0))
    dense = np.exp(log_y) * c0
    dense[0], dense[-1] = ys[0], ys[-1]
    out = TimeSeries(grid, dense)
    return add_noise(out, noise) if noise is not None else out


# Reference first-order rate constants for the EDC photolysis benchmark.
EDC_RATES = {
    "UVA-E1": 0.22400,
    "UVA-E2": 0.07440,
    "UVA-EE2": 0.01710,
    "UVA-E3": 0.09590,
    "UVC-E1": 1.30000,
    "UVC-E2": 0.30543,
    "UVC-EE2": 0.30543,
    "UVC-E3": 0.30543,
}
EDC_DURATION = {"UVA": 20.0, "UVC": 5.0}
EDC_SPARSE_POINTS = 8


def edc_standin_series(component: str, n_points: int = EDC_SPARSE_POINTS) -> TimeSeries:
    """Synthetic sparse decay curve standing in for the unpublished raw data.

    Normalised concentration (c0 = 1) sampled uniformly over a lamp-specific
    duration at the reference rate constant.
    """
    try:
        rate = EDC_RATES[component]
    except KeyError:
        raise InputError(f"unknown EDC component {component!r}") from None
    duration = EDC_DURATION[component.split("-")[0]]
    return first_order_series(rate, 1.0, duration, n_points)
