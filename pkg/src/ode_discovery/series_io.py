"""Two-column ``x,y`` CSV files and table sidecars."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .gensol import TimeSeries

HEADER = ("x", "y")


def format_float(v: float) -> str:
    """17 significant digits: enough for an exact binary64 round trip."""
    v = float(v)
    if not math.isfinite(v):
        return repr(v)
    return f"{v:.17g}"


def series_to_csv(ts: TimeSeries) -> str:
    lines = [",".join(HEADER)]
    lines += [f"{format_float(x)},{format_float(y)}" for x, y in zip(ts.xs, ts.ys)]
    return "\n".join(lines) + "\n"


def write_series(ts: TimeSeries, path) -> None:
    Path(path).write_text(series_to_csv(ts), encoding="utf-8", newline="")


def parse_series(text: str, source: str = "<input>") -> TimeSeries:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{source}: empty file") from None
    if tuple(h.strip().lower() for h in header) != HEADER:
        raise InputError(f"{source}: header must be 'x,y', got {','.join(header)!r}")
    xs, ys = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputError(f"{source}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
        except ValueError:
            raise InputError(f"{source}:{lineno}: not a number: {','.join(row)!r}") from None
    try:
        return TimeSeries(xs, ys)
    except InputError as exc:
        raise InputError(f"{source}: {exc}") from None


def read_series(path) -> TimeSeries:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {p}: {exc}") from None
    return parse_series(text, str(p))


def series_checksum(ts: TimeSeries) -> str:
    """sha256 of the canonical CSV rendering, independent of file formatting."""
    return hashlib.sha256(series_to_csv(ts).encode("utf-8")).hexdigest()


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """CSV with floats at 17 significant digits and ``\\n`` line ends."""
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(format_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8", newline="")
