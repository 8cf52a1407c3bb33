"""``phase-lab`` command line.

Exit codes: 0 on success (whatever the verdict), 2 for configuration,
schema or file problems, 3 when a numerical precondition fails.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .errors import ConfigError, PhaseLabError
from .runner import load_config, run, sweep
from .serialization import dumps_csv, dumps_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phase-lab", description="Geometric phase and cloning audits on finite-dimensional quantum states.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out")
    p_run.add_argument("--format", choices=("json", "csv"))

    p_sweep = sub.add_parser("sweep", help="evaluate invariant residuals on seeded random instances")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--count", type=int, required=True)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--format", choices=("json", "csv"))

    p_audit = sub.add_parser("audit-cloning", help="audit a cloning spec file")
    p_audit.add_argument("--spec", required=True)
    p_audit.add_argument("--out")
    p_audit.add_argument("--format", choices=("json", "csv"))
    return parser


def _emit(report: dict, fmt: str, out: Optional[str]) -> None:
    text = dumps_csv(report) if fmt == "csv" else dumps_json(report)
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _format(args, config: dict) -> str:
    return args.format or config.get("output_format", "json")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
            report = run(config)
            _emit(report, _format(args, config), args.out)
        elif args.command == "sweep":
            config = load_config(args.config)
            if args.seed is not None and args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            report = sweep(config, args.count, args.seed, args.jobs)
            _emit(report, _format(args, config), args.out)
        else:
            spec = load_config(args.spec)
            if not isinstance(spec, dict):
                raise ConfigError("cloning spec must be a JSON object")
            tolerances = spec.pop("tolerances", None)
            config = {"scenario": "cloning-audit", "inputs": spec}
            if tolerances is not None:
                config["tolerances"] = tolerances
            report = run(config)
            _emit(report, args.format or "json", args.out)
    except ConfigError as exc:
        print(f"phase-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhaseLabError as exc:
        print(f"phase-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
