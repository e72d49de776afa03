"""Command line entry point ``qnmqubit``.

Exit codes: 0 success, 2 configuration error, 3 guard violation,
4 validation failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .errors import (
    ConfigParseError,
    InvalidConfigError,
    QnmError,
)
from .scenario import (
    FIG2_DETUNING,
    fig2_scenario,
    load_config,
    read_bath_csv,
    run_pipeline,
    sweep,
    validate,
    write_outputs,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_VALIDATION = 4


def _detuning(text: str):
    if text.strip().lower() == "model":
        return None
    return float(text)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qnmqubit", description="Charge qubit decoherence in a lossy cavity.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the creation time from manifests")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("config")
    p.add_argument("--out", help="results CSV (overrides run.output)")

    p = sub.add_parser("sweep", help="run a scenario once per value of one key")
    p.add_argument("config")
    p.add_argument("--vary", required=True, metavar="KEY=V1,V2,...")
    p.add_argument("--out", help="base results path (overrides run.output)")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("validate", help="check unitarity, calibration, displacement and route agreement")
    p.add_argument("config")
    p.add_argument("--bath", help="bath CSV (omega_j,M_j,phi_j) used instead of the generated grid")

    p = sub.add_parser("fig2", help="decoherence curve for alpha = 2 (closed form)")
    p.add_argument("--out", default="fig2.csv")
    p.add_argument(
        "--detuning-over-gamma",
        type=_detuning,
        default=FIG2_DETUNING,
        help=f"branch detuning in units of gamma, or 'model' for the device value (default {FIG2_DETUNING:g})",
    )
    return ap


def _simulate(args) -> int:
    sc = load_config(args.config)
    pipe = run_pipeline(sc)
    paths = write_outputs(pipe, args.out or sc.output, not args.no_timestamp)
    print(paths["results"])
    return EXIT_OK


def _sweep(args) -> int:
    sc = load_config(args.config)
    if "=" not in args.vary:
        raise ConfigParseError("--vary expects KEY=V1,V2,...")
    key, raw = args.vary.split("=", 1)
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not values:
        raise ConfigParseError("--vary needs at least one value")
    if args.out:
        sc.values["run"]["output"] = args.out
    rows, _ = sweep(sc, key.strip(), values, workers=max(1, args.workers), timestamp=not args.no_timestamp)
    for r in rows:
        print(f"{r['value']}\tfitted_rate={r['fitted_rate']:.6g}\tplateau={r['plateau']:.6g}")
    return EXIT_OK


def _validate(args) -> int:
    sc = load_config(args.config)
    bath = read_bath_csv(args.bath) if args.bath else None
    checks = validate(sc, bath)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


def _fig2(args) -> int:
    sc = fig2_scenario(args.detuning_over_gamma)
    pipe = run_pipeline(sc)
    paths = write_outputs(pipe, args.out, not args.no_timestamp)
    print(paths["results"])
    return EXIT_OK


COMMANDS = {"simulate": _simulate, "sweep": _sweep, "validate": _validate, "fig2": _fig2}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    try:
        return COMMANDS[args.command](args)
    except (ConfigParseError, InvalidConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QnmError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
