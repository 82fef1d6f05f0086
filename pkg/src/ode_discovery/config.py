"""Run configuration: one flat key/value namespace shared by files and flags."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Optional

from . import nullspace as ns
from .characteristic import DEFAULT_CLUSTER_TOL
from .errors import InvalidConfig
from .evolve import GAConfig
from .gensol import BasisLayout
from .surrogate import DEFAULT_PRUNE_FRACTION

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

SPRING_ORDER = 5
KINETICS_ORDER = 7
DEFAULT_DENSE_POINTS = 2000
# Far below the paper's 1e-6: derivatives up to order P must be accurate,
# not just the function values.
DEFAULT_SPLINE_TAU = 1e-20
DEFAULT_SPLINE_ROUNDS = 40

GA_KEYS = tuple(f.name for f in dataclasses.fields(GAConfig))


@dataclass(frozen=True)
class RunConfig:
    candidate_order: int = SPRING_ORDER
    ga: GAConfig = field(default_factory=GAConfig)
    basis_layout: BasisLayout = BasisLayout.STANDARD
    cluster_tol: float = DEFAULT_CLUSTER_TOL
    prune_fraction: float = DEFAULT_PRUNE_FRACTION
    polish: bool = True
    dense_points: int = DEFAULT_DENSE_POINTS
    spline_tau: float = DEFAULT_SPLINE_TAU
    spline_max_rounds: int = DEFAULT_SPLINE_ROUNDS
    n_gradient_samples: int = ns.DEFAULT_SAMPLES
    sample_trim: float = ns.DEFAULT_TRIM
    rank_tol: float = ns.DEFAULT_RANK_TOL
    pivot: ns.Pivot = ns.LOWEST
    zero_tol: float = ns.DEFAULT_ZERO_TOL
    one_tol: float = ns.SPRING_ONE_TOL
    input_path: Optional[str] = None
    output_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "basis_layout", BasisLayout.parse(self.basis_layout))
        try:
            object.__setattr__(self, "pivot", ns.parse_pivot(self.pivot))
        except Exception as exc:
            raise InvalidConfig(str(exc)) from None
        if not isinstance(self.ga, GAConfig):
            raise InvalidConfig("ga must be a GAConfig")
        if self.candidate_order < 1:
            raise InvalidConfig("candidate_order must be at least 1")
        if self.dense_points < 2:
            raise InvalidConfig("dense_points must be at least 2")
        if not self.spline_tau > 0:
            raise InvalidConfig("spline_tau must be positive")
        if self.spline_max_rounds < 0:
            raise InvalidConfig("spline_max_rounds must be non-negative")
        if self.n_gradient_samples < self.candidate_order + 1:
            raise InvalidConfig("n_gradient_samples must exceed candidate_order")
        if not 0 <= self.sample_trim < 0.5:
            raise InvalidConfig("sample_trim must lie in [0, 0.5)")
        if not 0 <= self.prune_fraction < 1:
            raise InvalidConfig("prune_fraction must lie in [0, 1)")
        if self.cluster_tol <= 0 or self.rank_tol <= 0 or self.zero_tol <= 0 or self.one_tol <= 0:
            raise InvalidConfig("tolerances must be positive")
        if isinstance(self.pivot, int) and not 0 <= self.pivot <= self.candidate_order:
            raise InvalidConfig(f"pivot order {self.pivot} outside 0..{self.candidate_order}")

    @property
    def seed(self) -> int:
        return self.ga.seed

    @classmethod
    def kinetics(cls, **overrides) -> "RunConfig":
        """Defaults for first-order decay studies: P = 7, pivot on order 1."""
        params = dict(candidate_order=KINETICS_ORDER, pivot=1, one_tol=ns.KINETICS_ONE_TOL)
        params.update(overrides)
        return cls(**params)

    def replace(self, **changes) -> "RunConfig":
        return from_flat({**to_flat(self), **changes})

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, ga=self.ga.replace(seed=int(seed)))


RUN_KEYS = tuple(f.name for f in dataclasses.fields(RunConfig) if f.name != "ga")
ALL_KEYS = RUN_KEYS + GA_KEYS + ("ga_profile",)


def to_flat(cfg: RunConfig) -> dict[str, Any]:
    """Flat dict with a fixed key order; GA fields are inlined."""
    out: dict[str, Any] = {}
    for name in RUN_KEYS:
        v = getattr(cfg, name)
        out[name] = v.value if isinstance(v, BasisLayout) else v
    for name in GA_KEYS:
        out[name] = getattr(cfg.ga, name)
    return out


def _normalise_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def from_flat(values: dict[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    """Build a config from flat keys on top of ``base`` (or the defaults).

    ``ga_profile = "ci"`` swaps in the reduced GA profile before any explicit
    GA keys are applied.
    """
    values = {_normalise_key(k): v for k, v in values.items()}
    unknown = sorted(set(values) - set(ALL_KEYS))
    if unknown:
        raise InvalidConfig(f"unknown configuration key(s): {', '.join(unknown)}")
    base = base or RunConfig()
    ga = base.ga
    profile = values.pop("ga_profile", None)
    if profile is not None:
        profile = str(profile).lower()
        if profile == "ci":
            ga = GAConfig.ci(seed=ga.seed)
        elif profile == "paper":
            ga = GAConfig(seed=ga.seed)
        else:
            raise InvalidConfig(f"ga_profile must be 'paper' or 'ci', got {profile!r}")
    ga_changes = {k: values.pop(k) for k in list(values) if k in GA_KEYS}
    run = {name: getattr(base, name) for name in RUN_KEYS}
    run.update(values)
    try:
        ga = ga.replace(**{k: _coerce(getattr(ga, k), v, k) for k, v in ga_changes.items()})
        for k, v in list(run.items()):
            run[k] = _coerce(getattr(base, k), v, k)
        return RunConfig(ga=ga, **run)
    except InvalidConfig:
        raise
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(str(exc)) from None


def _coerce(default, value, key):
    """Cast ``value`` to the type of the field default (strings stay strings)."""
    if value is None or default is None or isinstance(default, (str, BasisLayout)):
        return value
    if isinstance(default, bool):
        if isinstance(value, str):
            low = value.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise InvalidConfig(f"{key}: expected a boolean, got {value!r}")
        return bool(value)
    if isinstance(default, int) and not isinstance(value, bool):
        if isinstance(value, float) and not value.is_integer():
            raise InvalidConfig(f"{key}: expected an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise InvalidConfig(f"{key}: expected an integer, got {value!r}") from None
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise InvalidConfig(f"{key}: expected a number, got {value!r}") from None
    return value


def parse_value(text: str) -> Any:
    """Interpret a command-line value with TOML scalar rules, else as a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_toml(path) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise InvalidConfig(f"config must be flat; found table(s) {', '.join(nested)}")
    return data


def parse_overrides(args) -> dict[str, Any]:
    """``["--key=value", ...]`` to a dict; every item must have that shape."""
    out = {}
    for item in args:
        if not item.startswith("--") or "=" not in item:
            raise InvalidConfig(f"unrecognised argument {item!r} (expected --key=value)")
        key, _, text = item[2:].partition("=")
        out[_normalise_key(key)] = parse_value(text)
    return out


def dump_toml(cfg: RunConfig) -> str:
    """Flat TOML text that ``load_toml`` + ``from_flat`` read back exactly."""
    lines = []
    for k, v in to_flat(cfg).items():
        if v is None:
            continue
        if isinstance(v, bool):
            lines.append(f"{k} = {'true' if v else 'false'}")
        elif isinstance(v, (int, float)):
            lines.append(f"{k} = {v!r}")
        else:
            lines.append(f'{k} = "{v}"')
    return "\n".join(lines) + "\n"
