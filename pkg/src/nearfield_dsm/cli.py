"""Command-line experiment runner.

Subcommands::

    nearfield-dsm simulate      CONFIG [--out data.nfd] [--seed S] ...
    nearfield-dsm reconstruct   CONFIG --data data.nfd [--out grid.csv] [--image grid.pgm]
    nearfield-dsm verify        SUITE [SUITE ...]
    nearfield-dsm export-image  grid.csv grid.pgm

Exit status is 0 iff every requested action succeeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import nullcontext
from functools import partial

import numpy as np
import scipy.fft

from . import verification
from .config import ConfigError, ExperimentConfig, load_config, override
from .forward import SolverError
from .imaging import IndicatorGrid, build_fft, i_cd, i_cd_far, i_ff, scan
from .specfun import WaveContext
from .synth import NFDParseError, add_noise, build_circle, generate_data, load_nfd, save_nfd

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return override(
        cfg, k=args.k, R=args.R, m=args.m, n=args.n, tol=args.tol, preset=args.preset,
        contrast=args.contrast, delta=args.delta, seed=args.seed, functional=args.functional,
        rho=args.rho, M=args.M, resolution=None if args.resolution is None else (args.resolution,) * 2,
        data=getattr(args, "data", None), output=args.out, image=getattr(args, "image", None),
    )


def cmd_simulate(cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.output is None:
        raise UsageError("simulate needs an output path (--out or 'output =' in the config)")
    if cfg.delta > 0 and cfg.seed is None:
        raise UsageError("noisy runs need an explicit --seed (or 'seed =' in the config)")
    ctx = WaveContext(cfg.k)
    circle = build_circle(cfg.R, cfg.m)

    def report(j, res, its):
        print(f"source {j}: residual={res:.3e} iterations={its}", file=out)

    try:
        data = generate_data(cfg.medium(), ctx, circle, cfg.solver_options(), report=report)
    except SolverError as err:
        print(f"error: solver failed for source {err.source_index}: {err}", file=sys.stderr)
        return 1
    if cfg.delta > 0:
        data = add_noise(data, cfg.delta, cfg.seed, cfg.shared)
    save_nfd(data, cfg.output)
    print(f"wrote {cfg.output}", file=out)
    return 0


def _functional(cfg: ExperimentConfig, data):
    if cfg.functional == "ff":
        return partial(i_ff, data=data, fft=build_fft(data.ctx, data.circle.R, cfg.M, data.circle.m))
    if cfg.functional == "cd":
        return partial(i_cd, data=data, rho=cfg.rho)
    return partial(i_cd_far, data=data, rho=cfg.rho)


def cmd_reconstruct(cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.data is None:
        raise UsageError("reconstruct needs a data file (--data or 'data =' in the config)")
    if cfg.output is None:
        raise UsageError("reconstruct needs an output path (--out or 'output =' in the config)")
    data = load_nfd(cfg.data)
    mismatch = [f"{name}: file {a!r} vs config {b!r}"
                for name, a, b in (("k", data.k, cfg.k), ("R", data.circle.R, cfg.R), ("m", data.circle.m, cfg.m))
                if not np.isclose(a, b, rtol=1e-12, atol=0)]
    if mismatch:
        raise UsageError("data header does not match config: " + "; ".join(mismatch))
    grid = scan(_functional(cfg, data), cfg.region, cfg.resolution, normalize=True)
    grid.to_csv(cfg.output)
    print(f"wrote {cfg.output}", file=out)
    if cfg.image:
        grid.to_pgm(cfg.image)
        print(f"wrote {cfg.image}", file=out)
    x, y = grid.argmax_point()
    print(f"argmax: ({x:.6g}, {y:.6g})", file=out)
    return 0


def cmd_verify(suites, out=None) -> int:
    out = out or sys.stdout
    ok = True
    for name in suites:
        for check in verification.run_suite(name):
            print(check.line(), file=out)
            ok &= check.passed
    return 0 if ok else 1


def cmd_export_image(csv_path, pgm_path, out=None) -> int:
    out = out or sys.stdout
    IndicatorGrid.from_csv(csv_path).to_pgm(pgm_path)
    print(f"wrote {pgm_path}", file=out)
    return 0


def _add_experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("config", nargs="?", help="experiment config file (defaults when omitted)")
    p.add_argument("--out", help="output path")
    p.add_argument("--k", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int, help="grid points per axis")
    p.add_argument("--tol", type=float)
    p.add_argument("--preset")
    p.add_argument("--contrast")
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--functional", choices=("ff", "cd", "cd_far"))
    p.add_argument("--rho", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--resolution", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="cap on FFT worker threads")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="nearfield-dsm", description=__doc__.splitlines()[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_experiment_flags(sub.add_parser("simulate", parents=[common], help="synthesize near-field data"))
    rec = sub.add_parser("reconstruct", parents=[common], help="scan an indicator functional over a data file")
    _add_experiment_flags(rec)
    rec.add_argument("--data", help="input nfd file")
    rec.add_argument("--image", help="optional graymap output")
    ver = sub.add_parser("verify", parents=[common], help="run verification suites")
    ver.add_argument("suites", nargs="+", choices=verification.SUITES + ("all",))
    exp = sub.add_parser("export-image", parents=[common], help="convert an indicator CSV to a graymap")
    exp.add_argument("csv")
    exp.add_argument("pgm")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.threads = getattr(args, "threads", None)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    workers = scipy.fft.set_workers(args.threads) if args.threads else nullcontext()
    try:
        with workers:
            if args.command == "verify":
                suites = verification.SUITES if "all" in args.suites else args.suites
                return cmd_verify(suites)
            if args.command == "export-image":
                return cmd_export_image(args.csv, args.pgm)
            cfg = _config(args)
            return cmd_simulate(cfg) if args.command == "simulate" else cmd_reconstruct(cfg)
    except (UsageError, ConfigError, NFDParseError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
