from __future__ import annotations

import argparse
import sys
from typing import Dict, Optional, Sequence

from pydantic import ValidationError

from persuasion import __version__
from persuasion.cli import commands
from persuasion.core.config import get_settings
from persuasion.core.errors import PersuasionError
from persuasion.core.logging import configure_logging, get_logger
from persuasion.service.analysis_service import FAMILIES
from persuasion.service.container import get_platform
from persuasion.service.platform_service import PersuasionPlatform


logger = get_logger(__name__)

# CLI option -> Settings field
SETTING_FLAGS: Dict[str, str] = {
    "tie_tol": "TIE_TOL",
    "lp_tol": "LP_TOL",
    "pivot_rule": "PIVOT_RULE",
    "bland_stall_factor": "BLAND_STALL_FACTOR",
    "c1": "VERIFY_C1",
    "c2": "VERIFY_C2",
    "bisect_tol": "BISECT_TOL",
    "newton_max_iter": "NEWTON_MAX_ITER",
}


def _add_utility_options(p: argparse.ArgumentParser, shapes: bool = True) -> None:
    p.add_argument("--v", help="anonymous utility values v(0),v(1),...,v(n)")
    p.add_argument("--utility-file", help="utility file (anonymous or full subset table)")
    if shapes:
        p.add_argument("--rho", type=float, help="two-receiver utility (0, rho, 1)")
        p.add_argument("--tau", type=float, help="power utility v(k) = k^tau, needs --n")


def _add_lp_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, default=None, help="grid points per axis (default 51)")
    p.add_argument("--K", type=int, default=None, help="atoms per segment when discretizing (default 512)")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="persuasion",
        description="Construct, verify and analyze symmetric equilibria of competitive Bayesian persuasion.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="logging level (default from settings)")
    parser.add_argument("--tie-tol", type=float, default=None)
    parser.add_argument("--lp-tol", type=float, default=None)
    parser.add_argument("--pivot-rule", choices=["dantzig", "bland"], default=None)
    parser.add_argument("--bland-stall-factor", type=int, default=None)
    parser.add_argument("--c1", type=float, default=None, help="grid term of the verification tolerance")
    parser.add_argument("--c2", type=float, default=None, help="discretization term of the verification tolerance")
    parser.add_argument("--bisect-tol", type=float, default=None)
    parser.add_argument("--newton-max-iter", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="write a closed-form equilibrium policy")
    p.add_argument(
        "--family",
        required=True,
        help=f"one of {', '.join(FAMILIES)} or example:<id> (ex31, ex31(c), ex42a, ex42b, ex43a, ex43b)",
    )
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--mu", type=float, help="mass parameter for sub-large, sub-multi-even and sub-multi-odd")
    p.add_argument("--K", type=int, default=None, help="atoms per marginal for the independent product")
    p.add_argument("--pieces", type=int, default=None, help="segments per curve for curved examples")
    p.add_argument("-o", "--output")
    _add_utility_options(p)
    p.set_defaults(handler=commands.cmd_construct)

    p = sub.add_parser("verify", help="best-response gap of a policy against itself")
    p.add_argument("--policy", required=True)
    p.add_argument(
        "--prior",
        type=float,
        help="prior lambda; optional because the policy file records it, a different value overrides it with a warning",
    )
    p.add_argument("--csv", help="write the CSV row here instead of stdout")
    _add_utility_options(p, shapes=False)
    _add_lp_options(p)
    p.set_defaults(handler=commands.cmd_verify)

    p = sub.add_parser("best-response", help="optimal policy against an opponent on a grid")
    p.add_argument("--opponent", required=True)
    p.add_argument(
        "--prior",
        type=float,
        help="prior lambda; optional because the opponent file records it, a different value overrides it with a warning",
    )
    p.add_argument("-o", "--output")
    _add_utility_options(p, shapes=False)
    _add_lp_options(p)
    p.set_defaults(handler=commands.cmd_best_response)

    p = sub.add_parser("pos", help="price-of-stability bound of one family")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("-o", "--output")
    _add_utility_options(p)
    p.set_defaults(handler=commands.cmd_pos)

    p = sub.add_parser("region", help="feasible-mass intervals over rho or tau")
    p.add_argument("--target", required=True, choices=["sub2", "sub-multi"])
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--scan-step", type=float, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=commands.cmd_region)

    p = sub.add_parser("sweep", help="one CSV per figure in a sweep file")
    p.add_argument("--spec", required=True)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=commands.cmd_sweep)

    return parser


def build_platform(args: argparse.Namespace) -> PersuasionPlatform:
    overrides = {
        field: getattr(args, flag)
        for flag, field in SETTING_FLAGS.items()
        if getattr(args, flag, None) is not None
    }
    if not overrides:
        return get_platform()
    settings = get_settings().model_copy(update=overrides)
    return PersuasionPlatform(settings)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = create_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or get_settings().LOG_LEVEL)
    try:
        return args.handler(args, build_platform(args))
    except PersuasionError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (ValidationError, ValueError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
