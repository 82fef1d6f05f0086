"""Command-line interface: discover linear ODEs from x,y CSV series.

    ode-discovery simulate spring --regime underdamped --noise -o data.csv
    ode-discovery discover data.csv --seed 1 --ga_profile=ci -o run.json
    ode-discovery bench-spring --seed 0 --ga_profile=ci -o bench/
    ode-discovery bench-edc --seed 0 --ga_profile=ci -o bench/
    ode-discovery sparsity bench/spring.json -o bench/sparsity.csv

Exit status: 0 on success, 2 for input or configuration errors, 3 when a
numerical stage fails (the stage name is printed on stderr).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import nullspace as ns
from .config import RunConfig, from_flat, load_toml, parse_overrides
from .datagen import (
    EDC_RATES,
    SPRING_CASES,
    NoiseSpec,
    SpringParams,
    add_noise,
    first_order_series,
    spring_mass_series,
)
from .errors import DiscoveryError, InputError, NumericalError, StageError
from .gensol import predict
from .pipeline import benchmark_edc, benchmark_spring, discover, edc_training_series, sparsity_rows
from .series_io import read_series, series_checksum, write_series

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("ode_discovery")


def _noise(args) -> Optional[NoiseSpec]:
    if not args.noise:
        return None
    return NoiseSpec(mean=args.noise_mean, sd=args.noise_sd, scale=args.noise_scale, seed=args.noise_seed)


def _add_noise_args(p: argparse.ArgumentParser, flag: bool = True) -> None:
    if flag:
        p.add_argument("--noise", action="store_true", help="add Gaussian noise (defaults: mean 0.5, sd 0.1, scale 0.001)")
    p.add_argument("--noise-mean", type=float, default=NoiseSpec.mean)
    p.add_argument("--noise-sd", type=float, default=NoiseSpec.sd)
    p.add_argument("--noise-scale", type=float, default=NoiseSpec.scale)
    p.add_argument("--noise-seed", type=int, default=NoiseSpec.seed)


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat TOML file with RunConfig keys")
    p.add_argument("--seed", type=int, help="GA seed (base seed for benchmarks)")
    p.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSV output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ode-discovery",
        description=__doc__.split("\n\n")[0],
        epilog="Any RunConfig or GA field can be overridden with --key=value, e.g. --ga_profile=ci --spline_tau=1e-12.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a benchmark series as x,y CSV")
    p.add_argument("kind", choices=("spring", "decay", "edc"))
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--regime", choices=sorted(SPRING_CASES), default="underdamped")
    p.add_argument("--mass", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--stiffness", type=float)
    p.add_argument("--x0", type=float)
    p.add_argument("--v0", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--n-points", type=int)
    p.add_argument("--rate", type=float, default=0.224, help="decay: first-order rate constant")
    p.add_argument("--c0", type=float, default=1.0, help="decay: initial concentration")
    p.add_argument("--component", choices=list(EDC_RATES), default="UVA-E1", help="edc: stand-in series")
    p.add_argument("--augment", type=int, metavar="N", help="edc: log-linear densification to N points")
    _add_noise_args(p)

    p = sub.add_parser("discover", help="run the discovery pipeline on an x,y CSV")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="report path (.json); sidecars go next to it")
    _add_run_args(p)

    p = sub.add_parser("bench-spring", help="spring-mass table: three regimes with and without noise")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _add_run_args(p)
    _add_noise_args(p, flag=False)

    p = sub.add_parser("bench-edc", help="EDC photolysis rate constants")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--data-dir", type=Path, help="directory of <component>.csv files replacing the stand-ins")
    p.add_argument("--n-new", type=int, default=1000, help="points added by log-linear augmentation")
    _add_run_args(p)
    _add_noise_args(p, flag=False)

    p = sub.add_parser("sparsity", help="sparsity map CSV from one or more report files")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--zero-tol", type=float, default=ns.DEFAULT_ZERO_TOL)
    p.add_argument("--one-tol", type=float, default=ns.SPRING_ONE_TOL)
    p.add_argument("--figures", action="store_true")
    return parser


def _run_config(args, extras: Sequence[str], base: RunConfig, seed_required: bool) -> RunConfig:
    values = {}
    if args.config is not None:
        values.update(load_toml(args.config))
    values.update(parse_overrides(extras))
    if args.seed is not None:
        values["seed"] = args.seed
    if seed_required and "seed" not in values:
        raise InputError("--seed is required (or set seed in the config file)")
    return from_flat(values, base)


def cmd_simulate(args, extras) -> int:
    if extras:
        raise InputError(f"unexpected arguments: {' '.join(extras)}")
    noise = _noise(args)
    if args.kind == "spring":
        base = SPRING_CASES[args.regime]
        fields = {
            k: getattr(args, k)
            for k in ("mass", "damping", "stiffness", "x0", "v0", "duration", "n_points")
            if getattr(args, k) is not None
        }
        params = SpringParams(**{**base.__dict__, **fields})
        ts = spring_mass_series(params)
        ts = add_noise(ts, noise) if noise else ts
    elif args.kind == "decay":
        ts = first_order_series(args.rate, args.c0, args.duration or 20.0, args.n_points or 1000)
        ts = add_noise(ts, noise) if noise else ts
    else:
        from .edc_data import load_edc_series

        ts = load_edc_series(args.component)
        if args.augment:
            ts = edc_training_series(ts, args.augment, noise)
        elif noise:
            ts = add_noise(ts, noise)
    write_series(ts, args.output)
    log.info("wrote %d points to %s", len(ts), args.output)
    return EXIT_OK


def cmd_discover(args, extras) -> int:
    from .reporting import write_json, write_run_sidecars

    cfg = _run_config(args, extras, RunConfig(), seed_required=True)
    data = read_series(args.input)
    report = discover(data, cfg, input_sha256=series_checksum(data))
    doc = report.to_dict()
    doc["provenance"]["input_path"] = str(args.input)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    write_json(doc, args.output)
    written = write_run_sidecars(report, data, args.output)
    if args.figures:
        from . import plotting
        from .bspline import evaluate

        spline = report.spline.model()
        plotting.fit_figure(
            data.xs,
            data.ys,
            predict(report.general_solution, data.xs),
            evaluate(spline, np.clip(data.xs, *spline.domain)),
            args.output.with_name(args.output.stem + "_fit.png"),
        )
        plotting.sparsity_figure(
            ["run"], np.array([report.ode.sparsity_mask]), args.output.with_name(args.output.stem + "_sparsity.png")
        )
    coeffs = " ".join(f"{c:.6g}" for c in report.ode.coefficients.coeffs)
    print(f"coefficients (order 0..{len(report.ode.coefficients) - 1}): {coeffs}")
    log.info("report %s, sidecars %s", args.output, ", ".join(str(p) for p in written))
    return EXIT_OK


def _bench_noise(args) -> NoiseSpec:
    return NoiseSpec(mean=args.noise_mean, sd=args.noise_sd, scale=args.noise_scale, seed=args.noise_seed)


def cmd_bench_spring(args, extras) -> int:
    from .reporting import spring_document, write_json, write_spring_table, write_sparsity_csv

    cfg = _run_config(args, extras, RunConfig(), seed_required=False)
    cells = benchmark_spring(cfg, _bench_noise(args), n_workers=args.jobs)
    out = args.output
    out.mkdir(parents=True, exist_ok=True)
    write_json(spring_document(cells, include_timings=False), out / "spring.json")
    write_json({f"{c.name}/{'noisy' if c.noisy else 'clean'}": c.report.timings if c.report else None for c in cells}, out / "spring_timings.json")
    write_spring_table(cells, out / "spring_table.csv")
    ok = [c for c in cells if c.report]
    labels = [f"{c.name}/{'noisy' if c.noisy else 'clean'}" for c in ok]
    matrix = np.vstack([c.report.ode.sparsity_mask for c in ok]) if ok else np.zeros((0, 0))
    write_sparsity_csv(labels, matrix, out / "spring_sparsity.csv")
    if args.figures and ok:
        from . import plotting

        plotting.sparsity_figure(labels, matrix, out / "spring_sparsity.png", "spring-mass")
    for c in cells:
        state = "ok" if c.report else f"failed in {c.error_stage}"
        coeffs = " ".join(f"{v:.4g}" for v in c.report.ode.coefficients.coeffs) if c.report else c.error
        print(f"{c.name:12s} {'noisy' if c.noisy else 'clean':5s} {state}: {coeffs}")
    return EXIT_OK if len(ok) == len(cells) else EXIT_NUMERICAL


def _edc_series(data_dir: Optional[Path]):
    if data_dir is None:
        return None
    series = {}
    for name in EDC_RATES:
        for candidate in (data_dir / f"{name}.csv", data_dir / f"edc_{name}.csv"):
            if candidate.exists():
                series[name] = read_series(candidate)
                break
    if not series:
        raise InputError(f"no <component>.csv files found in {data_dir}")
    return series


def cmd_bench_edc(args, extras) -> int:
    from .reporting import edc_document, write_edc_table, write_json, write_sparsity_csv

    cfg = _run_config(args, extras, RunConfig.kinetics(), seed_required=False)
    results = benchmark_edc(cfg, _edc_series(args.data_dir), _bench_noise(args), args.n_new, n_workers=args.jobs)
    out = args.output
    out.mkdir(parents=True, exist_ok=True)
    write_json(edc_document(results, include_timings=False), out / "edc.json")
    write_json({r.component: r.report.timings if r.report else None for r in results}, out / "edc_timings.json")
    write_edc_table(results, out / "edc_table.csv")
    ok = [r for r in results if r.report]
    matrix = np.vstack([r.report.ode.sparsity_mask for r in ok]) if ok else np.zeros((0, 0))
    write_sparsity_csv([r.component for r in ok], matrix, out / "edc_sparsity.csv")
    if args.figures and ok:
        from . import plotting

        plotting.sparsity_figure([r.component for r in ok], matrix, out / "edc_sparsity.png", "EDC photolysis")
        plotting.rate_figure(
            [r.component for r in ok], [r.reference_rate for r in ok], [r.rate for r in ok], out / "edc_rates.png"
        )
    for r in results:
        if r.report:
            print(f"{r.component:8s} reference {r.reference_rate:.5f} recovered {r.rate:.5f} sq.err {r.squared_error:.2e}")
        else:
            print(f"{r.component:8s} failed: {r.error}")
    return EXIT_OK if len(ok) == len(results) else EXIT_NUMERICAL


def cmd_sparsity(args, extras) -> int:
    from .reporting import null_vectors_from_document, write_sparsity_csv

    if extras:
        raise InputError(f"unexpected arguments: {' '.join(extras)}")
    entries = []
    for path in args.reports:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read report {path}: {exc}") from None
        entries += null_vectors_from_document(doc, path.stem)
    if not entries:
        raise InputError("no runs with a null vector found in the given reports")
    if len({len(v) for _, v, _ in entries}) != 1:
        raise InputError("reports must share the candidate order")
    labels = [e[0] for e in entries]
    matrix = sparsity_rows([e[1] for e in entries], [e[2] for e in entries], args.zero_tol, args.one_tol)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    write_sparsity_csv(labels, matrix, args.output)
    if args.figures:
        from . import plotting

        plotting.sparsity_figure(labels, matrix, args.output.with_suffix(".png"))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "discover": cmd_discover,
    "bench-spring": cmd_bench_spring,
    "bench-edc": cmd_bench_edc,
    "sparsity": cmd_sparsity,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args, extras)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT if isinstance(exc.error, InputError) else EXIT_NUMERICAL
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DiscoveryError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
