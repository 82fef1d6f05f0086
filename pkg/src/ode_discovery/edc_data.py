"""Shipped sparse EDC photolysis series (synthetic stand-ins, c0 = 1).

The measured points behind the published rate table are not available, so
each component is an exact first-order decay at its reference rate on eight
uniform samples.  Real measurements can be passed to ``benchmark_edc`` as
``x,y`` CSV files instead.
"""
from __future__ import annotations

from importlib import resources

from .datagen import EDC_RATES, edc_standin_series
from .errors import InputError
from .gensol import TimeSeries
from .series_io import parse_series, write_series

DATA_PACKAGE = "ode_discovery.data"


def _filename(component: str) -> str:
    return f"edc_{component}.csv"


def load_edc_series(component: str) -> TimeSeries:
    if component not in EDC_RATES:
        raise InputError(f"unknown EDC component {component!r}")
    ref = resources.files(DATA_PACKAGE).joinpath(_filename(component))
    return parse_series(ref.read_text(encoding="utf-8"), _filename(component))


def regenerate(directory) -> list[str]:
    """Rewrite the stand-in CSVs into ``directory`` (maintenance helper)."""
    from pathlib import Path

    out = []
    for name in EDC_RATES:
        path = Path(directory) / _filename(name)
        write_series(edc_standin_series(name), path)
        out.append(str(path))
    return out
