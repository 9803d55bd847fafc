"""Subcommand handlers.

Each handler takes the parsed namespace and the platform and returns an exit
code. Reports go to stdout, parameter echoes and logs to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

import pandas as pd

from persuasion.core.errors import PreconditionError
from persuasion.core.logging import get_logger
from persuasion.model.reports import IndependentConstruction, PoSResult
from persuasion.model.schemas import Prior, SignalingPolicy, UtilityFunction
from persuasion.service.platform_service import PersuasionPlatform
from persuasion.service.sweep_service import CSV_FLOAT_FORMAT, SweepSpec
from persuasion.utils.formats import dump_policy, parse_vector, read_policy, read_utility, write_policy
from persuasion.utils.paths import ensure_parent


logger = get_logger(__name__)

POS_COLUMNS = ["family", "lambda", "rho_or_tau", "n", "mu", "optimal_welfare", "eq_welfare", "pos_bound"]
VERIFY_COLUMNS = [
    "policy",
    "lambda",
    "n",
    "grid",
    "K",
    "payoff_self",
    "best_response",
    "gap",
    "cert_alpha_min",
    "cert_beta",
    "envelope_violation",
]
REGION_COLUMNS = ["lambda", "n", "rho", "feasible", "mu_lb", "mu_ub"]

INDEPENDENT_K = 32


# Shared helpers


def emit_csv(rows: Iterable[dict], columns: Sequence[str], path: Optional[str] = None, out: TextIO = None) -> None:
    frame = pd.DataFrame(list(rows), columns=list(columns))
    if path:
        frame.to_csv(ensure_parent(path), index=False, float_format=CSV_FLOAT_FORMAT)
        logger.info("Wrote %d rows to %s", len(frame), path)
    else:
        frame.to_csv(out or sys.stdout, index=False, float_format=CSV_FLOAT_FORMAT)


def resolve_utility(args: argparse.Namespace, n: Optional[int] = None) -> UtilityFunction:
    """Build V from exactly one of --v, --tau, --rho or --utility-file."""
    n = n if n is not None else getattr(args, "n", None)
    given = [
        name
        for name in ("v", "tau", "rho", "utility_file")
        if getattr(args, name, None) is not None
    ]
    if len(given) != 1:
        raise PreconditionError("give exactly one of --v, --tau, --rho or --utility-file")
    if getattr(args, "v", None) is not None:
        utility = UtilityFunction.anonymous(parse_vector(args.v))
    elif getattr(args, "tau", None) is not None:
        if n is None:
            raise PreconditionError("--tau needs --n")
        utility = UtilityFunction.power(n, args.tau)
    elif getattr(args, "rho", None) is not None:
        if n not in (None, 2):
            raise PreconditionError(f"--rho describes two receivers, got --n {n}")
        utility = UtilityFunction.two_receiver(args.rho)
    else:
        utility = read_utility(args.utility_file)
    if n is not None and utility.n != n:
        raise PreconditionError(f"utility has n={utility.n} receivers but --n is {n}")
    return utility


def resolve_prior(policy_prior: Prior, override: Optional[float]) -> Prior:
    if override is None:
        return policy_prior
    if abs(override - policy_prior.lam) > 1e-12:
        logger.warning("Prior %.12g overrides the policy file's lambda %.12g", override, policy_prior.lam)
    return Prior(lam=override)


def write_or_print_policy(policy: SignalingPolicy, prior: Prior, output: Optional[str]) -> None:
    if output:
        path = write_policy(output, policy, prior)
        logger.info("Wrote policy with %d atoms and %d segments to %s", len(policy.atoms), len(policy.segments), path)
    else:
        sys.stdout.write(dump_policy(policy, prior))


def echo(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


# construct


def cmd_construct(args: argparse.Namespace, platform: PersuasionPlatform) -> int:
    family: str = args.family
    if family.startswith("example:"):
        fixture = platform.example(family.split(":", 1)[1], args.pieces)
        echo({"example": fixture.id, "lambda": fixture.prior.lam, "utility": list(fixture.utility.anonymous_values)})
        write_or_print_policy(fixture.policy, fixture.prior, args.output)
        return 0

    if args.lam is None:
        raise PreconditionError("construct needs --lambda")
    prior = Prior(lam=args.lam)
    utility = resolve_utility(args)
    built = platform.construct(family, prior, utility, args.mu)

    if isinstance(built, IndependentConstruction):
        K = args.K or INDEPENDENT_K
        echo(built.model_dump(exclude={"policy"}) | {"K": K})
        write_or_print_policy(built.policy.joint(K), prior, args.output)
        return 0

    payload = {"family": built.family, "closed_form_welfare": built.closed_form_welfare, **built.params}
    if built.certificate is not None:
        payload["alpha"] = list(built.certificate.alpha)
        payload["beta"] = built.certificate.beta
    echo(payload)
    failed = built.failed_conditions()
    if failed:
        logger.warning("Certificate conditions not met: %s", ", ".join(failed))
    write_or_print_policy(built.policy, prior, args.output)
    return 0


# verify


def cmd_verify(args: argparse.Namespace, platform: PersuasionPlatform) -> int:
    policy, file_prior = read_policy(args.policy)
    prior = resolve_prior(file_prior, args.prior)
    utility = resolve_utility(args, n=policy.n)
    report = platform.verify(policy, prior, utility, args.grid, args.K)
    print(report.render())
    row = {
        "policy": Path(args.policy).name,
        "lambda": prior.lam,
        "n": policy.n,
        "grid": report.grid_points_per_axis,
        "K": report.K,
        "payoff_self": report.payoff_vs_self,
        "best_response": report.best_response_value,
        "gap": report.gap,
        "cert_alpha_min": report.certificate.alpha_min,
        "cert_beta": report.certificate.beta,
        "envelope_violation": report.max_envelope_violation,
    }
    emit_csv([row], VERIFY_COLUMNS, args.csv)
    return 0 if report.is_equilibrium else 1


# best-response


def cmd_best_response(args: argparse.Namespace, platform: PersuasionPlatform) -> int:
    opponent, file_prior = read_policy(args.opponent)
    prior = resolve_prior(file_prior, args.prior)
    utility = resolve_utility(args, n=opponent.n)
    result = platform.best_response(opponent, prior, utility, args.grid, args.K)
    print(f"value                 {result.value:.12g}")
    print(f"certificate alpha     {', '.join(f'{a:.12g}' for a in result.certificate.alpha)}")
    print(f"certificate beta      {result.certificate.beta:.12g}")
    print(f"envelope_violation    {result.envelope_violation:.12g}")
    print(f"duality_gap           {result.duality_gap:.12g}")
    print(f"support_points        {len(result.policy.atoms)}")
    if args.output:
        write_or_print_policy(result.policy, prior, args.output)
    return 0


# pos


def pos_row(result: PoSResult) -> dict:
    return {
        "family": result.family,
        "lambda": result.lam,
        "rho_or_tau": result.parameter,
        "n": result.n,
        "mu": result.mu,
        "optimal_welfare": result.optimal_welfare,
        "eq_welfare": result.equilibrium_welfare,
        "pos_bound": result.closed_form_bound if result.closed_form_bound is not None else result.ratio,
    }


def cmd_pos(args: argparse.Namespace, platform: PersuasionPlatform) -> int:
    utility = resolve_utility(args)
    parameter = args.rho if args.rho is not None else args.tau
    result = platform.pos(args.family, Prior(lam=args.lam), utility, parameter, args.mu)
    emit_csv([pos_row(result)], POS_COLUMNS, args.output)
    return 0


# region


def cmd_region(args: argparse.Namespace, platform: PersuasionPlatform) -> int:
    n = args.n if args.n is not None else (2 if args.target == "sub2" else 4)
    rows = platform.region(args.target, args.lam, n, args.scan_step)
    emit_csv(rows, REGION_COLUMNS, args.output)
    return 0


# sweep


def cmd_sweep(args: argparse.Namespace, platform: PersuasionPlatform) -> int:
    spec = SweepSpec.from_file(args.spec)
    if args.workers is not None:
        spec = spec.model_copy(update={"workers": args.workers})
    written = platform.sweep(spec, args.output)
    for figure, path in written.items():
        print(f"{figure}\t{path}")
    return 0
