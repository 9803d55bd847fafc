"""Line-oriented text formats for policies and utilities.

Floats are written with 17 significant digits so that a dump followed by a
parse reproduces every weight and coordinate bit for bit.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

from pydantic import ValidationError

from persuasion.core.errors import PolicyFormatError
from persuasion.model.schemas import Atom, Prior, Segment, SignalingPolicy, UtilityFunction
from persuasion.utils.paths import ensure_parent


POLICY_HEADER = "policy v1"
UTILITY_HEADER = "utility v1"

PathLike = Union[str, Path]


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def format_vector(values: Sequence[float]) -> str:
    return ",".join(format_float(x) for x in values)


def parse_vector(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as e:
        raise PolicyFormatError(f"bad number list {text!r}: {e}") from e


def _fields(tokens: Sequence[str], line_no: int) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not value:
            raise PolicyFormatError(f"line {line_no}: expected key=value, got {tok!r}")
        out[key] = value
    return out


def _content_lines(text: str) -> List[Tuple[int, str]]:
    return [
        (i, line.strip())
        for i, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]


# Policies


def dump_policy(policy: SignalingPolicy, prior: Prior) -> str:
    lines = [POLICY_HEADER, f"n={policy.n} lambda={format_float(prior.lam)}"]
    for a in policy.atoms:
        lines.append(f"atom w={format_float(a.weight)} q={format_vector(a.point)}")
    for s in policy.segments:
        lines.append(
            f"segment w={format_float(s.weight)} a={format_vector(s.start)} b={format_vector(s.end)}"
        )
    return "\n".join(lines) + "\n"


def parse_policy(text: str) -> Tuple[SignalingPolicy, Prior]:
    lines = _content_lines(text)
    if len(lines) < 2 or lines[0][1] != POLICY_HEADER:
        raise PolicyFormatError(f"policy file must start with {POLICY_HEADER!r}")
    head = _fields(lines[1][1].split(), lines[1][0])
    try:
        n = int(head["n"])
        prior = Prior(lam=float(head["lambda"]))
    except (KeyError, ValueError) as e:
        raise PolicyFormatError(f"line {lines[1][0]}: bad header ({e})") from e

    atoms: List[Atom] = []
    segments: List[Segment] = []
    try:
        for line_no, line in lines[2:]:
            kind, *rest = line.split()
            fields = _fields(rest, line_no)
            if kind == "atom":
                atoms.append(Atom(weight=float(fields["w"]), point=parse_vector(fields["q"])))
            elif kind == "segment":
                segments.append(
                    Segment(
                        weight=float(fields["w"]),
                        start=parse_vector(fields["a"]),
                        end=parse_vector(fields["b"]),
                    )
                )
            else:
                raise PolicyFormatError(f"line {line_no}: unknown entry {kind!r}")
        policy = SignalingPolicy(n=n, atoms=tuple(atoms), segments=tuple(segments))
    except (KeyError, ValueError, ValidationError) as e:
        if isinstance(e, PolicyFormatError):
            raise
        raise PolicyFormatError(f"invalid policy: {e}") from e
    return policy, prior


def write_policy(path: PathLike, policy: SignalingPolicy, prior: Prior) -> Path:
    p = ensure_parent(path)
    p.write_text(dump_policy(policy, prior))
    return p


def read_policy(path: PathLike) -> Tuple[SignalingPolicy, Prior]:
    return parse_policy(Path(path).read_text())


# Utilities


def dump_utility(utility: UtilityFunction) -> str:
    lines = [UTILITY_HEADER, f"n={utility.n}"]
    if utility.is_anonymous:
        lines.append(f"anonymous {format_vector(utility.anonymous_values)}")
    else:
        for mask, value in enumerate(utility.general_values):
            lines.append(f"set {mask} {format_float(value)}")
    return "\n".join(lines) + "\n"


def parse_utility(text: str) -> UtilityFunction:
    lines = _content_lines(text)
    if len(lines) < 3 or lines[0][1] != UTILITY_HEADER:
        raise PolicyFormatError(f"utility file must start with {UTILITY_HEADER!r}")
    try:
        n = int(_fields(lines[1][1].split(), lines[1][0])["n"])
    except (KeyError, ValueError) as e:
        raise PolicyFormatError(f"line {lines[1][0]}: bad header ({e})") from e

    try:
        first_kind = lines[2][1].split()[0]
        if first_kind == "anonymous":
            if len(lines) != 3:
                raise PolicyFormatError("anonymous utility takes exactly one value line")
            values = parse_vector(lines[2][1].split(maxsplit=1)[1])
            utility = UtilityFunction.anonymous(values)
            if utility.n != n:
                raise PolicyFormatError(f"dimension mismatch: header n={n}, values give n={utility.n}")
            return utility
        table: Dict[int, float] = {}
        for line_no, line in lines[2:]:
            parts = line.split()
            if len(parts) != 3 or parts[0] != "set":
                raise PolicyFormatError(f"line {line_no}: expected 'set <mask> <value>'")
            table[int(parts[1])] = float(parts[2])
        return UtilityFunction.general(n, table)
    except (IndexError, ValueError, ValidationError) as e:
        if isinstance(e, PolicyFormatError):
            raise
        raise PolicyFormatError(f"invalid utility: {e}") from e


def write_utility(path: PathLike, utility: UtilityFunction) -> Path:
    p = ensure_parent(path)
    p.write_text(dump_utility(utility))
    return p


def read_utility(path: PathLike) -> UtilityFunction:
    return parse_utility(Path(path).read_text())
