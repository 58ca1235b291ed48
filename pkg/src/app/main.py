"""
polariton: multimode microcavity simulator.

  polariton simulate run.toml [--out NAME] [--output-dir DIR] [--kx-max X] [--no-heatmap]
  polariton sweep run.toml [--output-dir DIR] [--workers N]
  polariton critlen --n0 1.5 --gamma-mev 34 --f-ev2 0.037 [--json]
  polariton fit problem.json [--out result.json]

Exit codes: 0 success, 2 input error, 3 no solution, 4 fit not converged.
"""
from __future__ import annotations
from pathlib import Path
from typing import List, Optional, Sequence
import argparse
import json
import logging
import sys

from src.app.commands import cmd_critlen, cmd_fit, cmd_simulate, cmd_sweep, resolve_output_dir
from src.app.config import RunConfig, load_config
from src.config.settings import configure_logging, get_settings
from src.core.types import (
    ConfigError,
    FitError,
    MaterialRangeError,
    NoSolutionError,
    PolaritonError,
    PreconditionError,
    Result,
    SolverError,
)
from src.core.utils import dumps_json, truncate_for_display

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_NO_SOLUTION = 3
EXIT_NOT_CONVERGED = 4


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("--output-dir", help="output directory (overrides POLARITON_OUTPUT_DIR and the config)")
    p.add_argument("--kx-max", type=float, help="clip the momentum grid at this kx (um^-1)")
    p.add_argument("--polarization", choices=["TE", "TM", "te", "tm"])
    p.add_argument("--workers", type=int, help="worker threads (default: POLARITON_WORKERS)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. --set cavity.L=640 (repeatable)")
    p.add_argument("--json", action="store_true", help="print a machine-readable record")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polariton",
        description="Transfer-matrix dispersion maps, multimode polariton models and regime analysis",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  polariton simulate l628.toml --no-heatmap
  polariton sweep thickness.toml --workers 8
  polariton critlen --n0 1.5 --gamma-mev 34 --f-ev2 0.037 --json
  POLARITON_OUTPUT_DIR=out polariton fit problem.json
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="1-R dispersion map (CSV + JSON sidecar + PNG)")
    _add_run_flags(p)
    p.add_argument("--out", help="output file stem (default: output.name from the config)")
    p.add_argument("--no-heatmap", action="store_true", help="skip the PNG")

    p = sub.add_parser("sweep", help="kx = 0 spectra and regime labels over a thickness range")
    _add_run_flags(p)

    p = sub.add_parser("critlen", help="critical cavity length from film parameters")
    p.add_argument("--n0", type=float, default=1.5, help="background index")
    p.add_argument("--gamma-mev", type=float, default=34.0, help="exciton linewidth (FWHM), meV")
    p.add_argument("--f-ev2", type=float, default=0.037, help="oscillator strength, eV^2")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("fit", help="recover cavity parameters from a target map")
    p.add_argument("problem", help="FitProblem JSON")
    p.add_argument("--out", help="FitResult JSON path (default: <problem stem>.result.json)")
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--json", action="store_true")
    return parser


def _flag_overrides(args: argparse.Namespace) -> List[str]:
    out = list(args.overrides)
    if args.polarization:
        out.append(f'polarization="{args.polarization.upper()}"')
    return out


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config, _flag_overrides(args))
    if args.kx_max is not None:
        grid = cfg.grid
        if args.kx_max <= grid.kx_min:
            raise ConfigError(f"--kx-max {args.kx_max:g} must exceed grid.kx_min {grid.kx_min:g}")
        cfg = cfg.model_copy(update={"grid": grid.model_copy(update={"kx_max": min(grid.kx_max, args.kx_max)})})
    return cfg


def _workers(args: argparse.Namespace, cfg: Optional[RunConfig] = None) -> int:
    if getattr(args, "workers", None):
        return max(1, args.workers)
    if cfg is not None and cfg.workers:
        return cfg.workers
    return get_settings().workers


def _emit(res: Result, as_json: bool) -> None:
    if as_json:
        print(dumps_json(res.output))
    elif res.display_output:
        print(truncate_for_display(res.display_output))


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "critlen":
            res = cmd_critlen(args.n0, args.gamma_mev, args.f_ev2)
            _emit(res, args.json)
            return EXIT_OK

        if args.command == "fit":
            problem = Path(args.problem)
            out_dir = resolve_output_dir(None, args.output_dir)
            out = Path(args.out) if args.out else out_dir / f"{problem.stem}.result.json"
            res = cmd_fit(problem, out, workers=_workers(args))
            _emit(res, args.json)
            return EXIT_OK if res.success else EXIT_NOT_CONVERGED

        cfg = _load_run_config(args)
        out_dir = resolve_output_dir(cfg.output.dir, args.output_dir)
        if args.command == "simulate":
            res = cmd_simulate(cfg, out_dir, name=args.out,
                               heatmap=cfg.output.heatmap and not args.no_heatmap,
                               workers=_workers(args, cfg))
        else:
            res = cmd_sweep(cfg, out_dir, workers=_workers(args, cfg))
        _emit(res, args.json)
        return EXIT_OK if res.success else EXIT_FAILURE

    except (ConfigError, PreconditionError, MaterialRangeError, FitError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (NoSolutionError, SolverError) as e:
        print(f"no solution: {e}", file=sys.stderr)
        diagnostics = getattr(e, "diagnostics", None)
        if diagnostics:
            print(json.dumps(diagnostics, default=str), file=sys.stderr)
        return EXIT_NO_SOLUTION
    except PolaritonError as e:
        logger.exception("command failed")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    configure_logging(get_settings())
    sys.exit(run())


if __name__ == "__main__":
    main()
