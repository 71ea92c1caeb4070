"""Command line for loopforge.

Usage:
    python -m loopforge verify --algebra O --mode exact
    python -m loopforge verify --algebra H --suites loop,tangent --out report.json
    python -m loopforge torsion --algebra C --config run.ini --out fields.csv
    python -m loopforge flow --algebra H --out flow.csv --summary flow.json
    python -m loopforge cs --algebra O --seed 3
    python -m loopforge companions --algebra O --map identity

Exit codes: 0 all identities passed, 1 an identity failed or a computation
aborted, 2 bad flags or configuration.
"""
import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from loopforge import __version__
from loopforge.commands.companions import run_companions
from loopforge.commands.cs import run_cs
from loopforge.commands.flow import run_flow
from loopforge.commands.run_config import CompanionMap, FieldKind, RunConfig, load_config
from loopforge.commands.torsion import run_torsion
from loopforge.commands.verify import run_verify
from loopforge.config import settings
from loopforge.errors import ConfigError, LoopforgeError
from loopforge.logging_config import get_logger, setup_logging
from loopforge.services.variational import Metric

logger = get_logger(__name__)

COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "verify": run_verify,
    "torsion": run_torsion,
    "flow": run_flow,
    "cs": run_cs,
    "companions": run_companions,
}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--algebra", choices=["C", "H", "O"], help="composition algebra (default O)")
    parser.add_argument("--mode", choices=["exact", "float"], help="scalar mode (default exact)")
    parser.add_argument("--seed", type=int, help=f"random seed (default {settings.LOOPFORGE_DEFAULT_SEED})")
    parser.add_argument("--config", type=Path, help="INI run configuration")
    parser.add_argument("--out", type=Path, help="report path (default stdout)")
    parser.add_argument("--tol", type=float, help="override every gated tolerance")
    parser.add_argument("--samples", type=int, help="samples per algebraic identity")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="logging verbosity (default from LOG_LEVEL)")


def _field_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", choices=[k.value for k in FieldKind], help="section/connection pair")
    parser.add_argument("--grid", type=int, help="grid points per axis")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopforge",
        description="Verify loop, pseudoautomorphism and loop-bundle identities numerically.",
    )
    parser.add_argument("--version", action="version", version=f"loopforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run identity suites and write a JSON report")
    _common(verify)
    verify.add_argument("--suites", help="comma separated suite names (default all)")
    verify.add_argument("--points", type=int, help="sample points per field identity")

    torsion = sub.add_parser("torsion", help="dump torsion, Fhat and residuals as CSV")
    _common(torsion)
    _field_flags(torsion)
    torsion.add_argument("--dimension", type=int, choices=[1, 2, 3], help="torus dimension")
    torsion.add_argument("--points", type=int, help="number of sample points")

    flow = sub.add_parser("flow", help="run the torsion energy flow")
    _common(flow)
    _field_flags(flow)
    flow.add_argument("--dimension", type=int, choices=[1, 2, 3], help="torus dimension (default 2)")
    flow.add_argument("--max-iterations", type=int, help="iteration cap")
    flow.add_argument("--metric", choices=[m.value for m in Metric], help="tangent inner product")
    flow.add_argument("--summary", type=Path, help="JSON summary path")

    cs = sub.add_parser("cs", help="evaluate the Chern-Simons type functional on T^3")
    _common(cs)
    _field_flags(cs)

    companions = sub.add_parser("companions", help="solve for the companions of a pseudoautomorphism")
    _common(companions)
    companions.add_argument("--map", choices=[m.value for m in CompanionMap], help="pseudoautomorphism")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, object]]:
    """Map parsed flags onto config sections; absent flags stay None."""
    def get(name: str):
        return getattr(args, name, None)

    field_section = "flow" if args.command == "flow" else "domain"
    overrides: Dict[str, Dict[str, object]] = {
        "run": {"algebra": get("algebra"), "mode": get("mode"), "seed": get("seed"),
                "samples": get("samples"), "suites": get("suites")},
        "domain": {"points": get("points")},
        "fields": {"kind": get("kind")},
        "flow": {"max_iterations": get("max_iterations"), "metric": get("metric")},
        "companions": {"map": get("map")},
        "output": {"path": get("out"), "summary": get("summary")},
    }
    overrides.setdefault(field_section, {}).update({"grid": get("grid"), "dimension": get("dimension")})
    return {section: values for section, values in overrides.items()
            if any(v is not None for v in values.values())}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or settings.LOG_LEVEL or None)

    try:
        config = load_config(args.config, _overrides(args), args.tol)
        code = COMMANDS[args.command](config)
    except ConfigError as exc:
        logger.error(f"Configuration error: {exc}", extra={"command": args.command})
        return exc.exit_code
    except LoopforgeError as exc:
        logger.error(f"{args.command} aborted: {exc}", exc_info=True, extra={"command": args.command})
        return exc.exit_code
    logger.info(f"{args.command} finished with exit code {code}", extra={"command": args.command})
    return code


if __name__ == "__main__":
    sys.exit(main())
