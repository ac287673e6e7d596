"""Command-line runner: ``pydbqubit <scenario> --config run.yaml --out results/``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import LOG_LEVEL
from .errors import ConfigError, DbQubitError
from .version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PHYSICS = 2

_SCENARIO_HELP = {
    "fig2": "tunneling and phonon rates versus pair separation",
    "rabi": "free oscillation with optional drift and dephasing",
    "init": "tilted relaxation into |0>",
    "readout": "projective readout through a confusion channel",
    "entangle": "CPHASE(pi) fidelity and concurrence",
    "hubbard-check": "Hubbard projection against the qubit Hamiltonian",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pydbqubit", description="Silicon dangling-bond charge qubit experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="scenario", parser_class=_Parser)
    for name, text in _SCENARIO_HELP.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", type=Path, required=True, help="YAML configuration file")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
        p.add_argument("--seed", type=_u64, default=None, help="overrides run.seed")
        p.add_argument("--shots", type=_positive_int, default=None, help="overrides run.shots")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="dotted config assignment, e.g. noise.dephasing_rate_hz=1e9 (repeatable)",
        )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    from .experiments import ExperimentSpec, run_experiment

    try:
        spec = ExperimentSpec(
            scenario=args.scenario,
            config_path=args.config,
            out_dir=args.out,
            seed=args.seed,
            shots=args.shots,
            overrides=tuple(args.override),
        )
        result = run_experiment(spec)
    except (ConfigError, FileNotFoundError, PermissionError) as exc:
        logger.error("%s", exc)
        print(f"pydbqubit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DbQubitError as exc:
        logger.error("%s failed: %s: %s", args.scenario, type(exc).__name__, exc)
        print(f"pydbqubit: {args.scenario} failed: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    if not result.passed:
        print(f"pydbqubit: {args.scenario} checks failed, see {result.outputs['summary']}", file=sys.stderr)
        return EXIT_PHYSICS
    print(f"{args.scenario}: wrote {', '.join(str(p) for p in result.outputs.values())}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
