"""Real-valued genetic algorithm over ODE coefficient vectors."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import rankdata

from .characteristic import DEFAULT_CLUSTER_TOL, CoefficientVector
from .errors import InvalidConfig
from .gensol import BasisLayout, TimeSeries, fitness


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 750
    max_generations: int = 300
    function_tolerance: float = 1e-28
    lower_bound: float = -10.0
    upper_bound: float = 10.0
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    elite_fraction: float = 0.05
    seed: int = 0
    # initial mutation step as a fraction of the box width
    mutation_scale: float = 0.1

    def __post_init__(self):
        if self.population_size < 2:
            raise InvalidConfig("population_size must be at least 2")
        if self.max_generations < 1:
            raise InvalidConfig("max_generations must be at least 1")
        if not self.lower_bound < self.upper_bound:
            raise InvalidConfig("lower_bound must be below upper_bound")
        for name in ("crossover_rate", "mutation_rate", "elite_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1], got {v}")
        if self.mutation_scale <= 0:
            raise InvalidConfig("mutation_scale must be positive")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")

    @classmethod
    def ci(cls, **overrides) -> "GAConfig":
        """Reduced profile: 200 individuals, 100 generations."""
        params = dict(population_size=200, max_generations=100)
        params.update(overrides)
        return cls(**params)

    def replace(self, **changes) -> "GAConfig":
        params = asdict(self)
        params.update(changes)
        return GAConfig(**params)

    @property
    def n_elite(self) -> int:
        return max(1, int(math.ceil(self.elite_fraction * self.population_size)))


@dataclass(frozen=True)
class GAResult:
    best_coefficients: CoefficientVector
    best_loss: float
    generations_run: int
    loss_history: tuple[float, ...] = field(default_factory=tuple)


def intermediate_crossover(parent_a, parent_b, ratio, rng, bounds=None) -> np.ndarray:
    """``a + u * ratio * (b - a)`` with one uniform ``u`` per gene."""
    a = np.asarray(parent_a, dtype=float)
    b = np.asarray(parent_b, dtype=float)
    u = rng.random(a.shape)
    child = a + u * ratio * (b - a)
    if bounds is not None:
        child = np.clip(child, bounds[0], bounds[1])
    return child


def adaptive_feasible_mutation(
    individual,
    bounds,
    generation_progress,
    rng,
    scale: float = 0.1,
    gene_rate: float = 1.0,
) -> np.ndarray:
    """Move along a random direction, shrinking the step to stay in bounds.

    The nominal step is ``scale * (ub - lb) * (1 - progress)`` times a uniform
    draw; genes are included in the direction with probability ``gene_rate``
    (at least one gene always moves).
    """
    x = np.asarray(individual, dtype=float)
    lb, ub = float(bounds[0]), float(bounds[1])
    n = x.size
    mask = rng.random(n) < gene_rate
    if not mask.any():
        mask[rng.integers(n)] = True
    direction = rng.standard_normal(n) * mask
    norm = np.linalg.norm(direction)
    step = scale * (ub - lb) * (1.0 - generation_progress) * rng.random()
    if norm == 0.0 or step <= 0.0:
        return x.copy()
    direction /= norm
    # largest t keeping x + t*direction inside the box
    with np.errstate(divide="ignore", invalid="ignore"):
        room = np.where(direction > 0, (ub - x) / direction, np.where(direction < 0, (lb - x) / direction, np.inf))
    step = min(step, float(np.min(room)))
    return np.clip(x + max(step, 0.0) * direction, lb, ub)


def stochastic_uniform_selection(losses, count, rng) -> np.ndarray:
    """Rank-scaled stochastic universal sampling.

    Each individual owns a segment of length ``1/sqrt(rank)`` (ties share the
    average rank).  ``count`` equally spaced pointers starting at one random
    offset pick the parents.
    """
    losses = np.asarray(losses, dtype=float)
    ranks = rankdata(losses, method="average")
    weights = 1.0 / np.sqrt(ranks)
    edges = np.cumsum(weights)
    total = edges[-1]
    spacing = total / count
    pointers = rng.random() * spacing + spacing * np.arange(count)
    idx = np.searchsorted(edges, pointers, side="right")
    return np.minimum(idx, losses.size - 1)


def _evaluate(population, score: Callable[[np.ndarray], float], executor) -> np.ndarray:
    if executor is None:
        return np.array([score(ind) for ind in population])
    # one slot per individual; completion order cannot leak into selection
    return np.array(list(executor.map(score, list(population))))


def run_ga(
    data: TimeSeries,
    ode_order: int,
    config: Optional[GAConfig] = None,
    layout=BasisLayout.PAPER_FAITHFUL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
    executor=None,
    callback: Optional[Callable[[int, float], None]] = None,
) -> GAResult:
    """Search coefficient space for the candidate with the smallest loss."""
    config = config or GAConfig()
    if ode_order < 1:
        raise InvalidConfig("ode_order must be at least 1")
    layout = BasisLayout.parse(layout)
    rng = np.random.default_rng(config.seed)
    lb, ub = config.lower_bound, config.upper_bound
    n_pop, n_genes = config.population_size, ode_order + 1
    n_elite = min(config.n_elite, n_pop - 1)

    def score(ind):
        return fitness(data, ind, layout, cluster_tol)

    population = rng.uniform(lb, ub, size=(n_pop, n_genes))
    history: list[float] = []
    best_x, best_loss = population[0].copy(), math.inf
    generations = 0
    for gen in range(config.max_generations):
        generations = gen + 1
        losses = _evaluate(population, score, executor)
        i_best = int(np.argmin(losses))
        if losses[i_best] < best_loss:
            best_loss, best_x = float(losses[i_best]), population[i_best].copy()
        history.append(best_loss)
        if callback is not None:
            callback(generations, best_loss)
        if best_loss < config.function_tolerance or gen == config.max_generations - 1:
            break

        progress = gen / config.max_generations
        order = np.argsort(losses, kind="stable")
        elites = population[order[:n_elite]]
        n_kids = n_pop - n_elite
        parents = stochastic_uniform_selection(losses, 2 * n_kids, rng)
        rng.shuffle(parents)
        kids = np.empty((n_kids, n_genes))
        for i in range(n_kids):
            a = population[parents[2 * i]]
            b = population[parents[2 * i + 1]]
            if rng.random() < config.crossover_rate:
                child = intermediate_crossover(a, b, 1.0, rng, (lb, ub))
            else:
                child = a.copy()
            if rng.random() < config.mutation_rate:
                child = adaptive_feasible_mutation(
                    child, (lb, ub), progress, rng, scale=config.mutation_scale
                )
            kids[i] = child
        population = np.vstack([elites, kids])

    return GAResult(CoefficientVector(best_x), best_loss, generations, tuple(history))
