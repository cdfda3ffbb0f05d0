"""Spectrum-based suspiciousness formulas.

Each formula maps a :class:`~hybridfl.model.Tally` to a nonnegative float.
Degenerate denominators never produce NaN:

* Tarantula: a rate whose denominator is zero is taken as 0.
* Jaccard / Ochiai / DStar / Barinel: ``cf == 0`` scores 0.
* DStar with ``uf + cp == 0`` and ``cf >= 1`` scores :data:`DSTAR_CAP`.

Barinel is the usual simplified form ``1 - cp / (cp + cf)``; pass
``override=`` to :class:`Formula` to substitute another definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from hybridfl.model import Tally

DSTAR_CAP = 1e9
DEFAULT_DSTAR_EXPONENT = 2.0

KINDS = ("tarantula", "jaccard", "ochiai", "dstar", "barinel")


@dataclass(frozen=True)
class Formula:
    kind: str
    exponent: float = DEFAULT_DSTAR_EXPONENT
    override: Callable[[Tally], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown SBFL formula {self.kind!r}")
        if self.kind == "dstar" and not self.exponent >= 1:
            raise ValueError(f"DStar exponent must be >= 1, got {self.exponent}")

    @classmethod
    def parse(cls, text: str) -> Formula:
        """Parse ``tarantula``, ``jaccard``, ``ochiai``, ``dstar[:<exp>]`` or ``barinel``."""
        name, _, arg = text.strip().lower().partition(":")
        if name == "dstar":
            return cls("dstar", float(arg) if arg else DEFAULT_DSTAR_EXPONENT)
        if arg:
            raise ValueError(f"formula {name!r} takes no parameter")
        return cls(name)

    def __str__(self):
        if self.kind == "dstar":
            return f"dstar:{_fmt_exp(self.exponent)}"
        return self.kind

    def __call__(self, t: Tally) -> float:
        return score(self, t)


OCHIAI = Formula("ochiai")


def _fmt_exp(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def tarantula(t: Tally) -> float:
    fail_rate = t.cf / (t.cf + t.uf) if t.cf else 0.0
    pass_rate = t.cp / (t.cp + t.up) if t.cp else 0.0
    if fail_rate == 0.0:
        return 0.0
    return fail_rate / (fail_rate + pass_rate)


def jaccard(t: Tally) -> float:
    if t.cf == 0:
        return 0.0
    return t.cf / (t.cf + t.cp + t.uf)


def ochiai(t: Tally) -> float:
    if t.cf == 0:
        return 0.0
    return t.cf / math.sqrt((t.cf + t.uf) * (t.cf + t.cp))


def dstar(t: Tally, exponent: float = DEFAULT_DSTAR_EXPONENT) -> float:
    if t.cf == 0:
        return 0.0
    denom = t.uf + t.cp
    if denom == 0:
        return DSTAR_CAP
    return t.cf**exponent / denom


def barinel(t: Tally) -> float:
    if t.cf == 0:
        return 0.0
    return 1.0 - t.cp / (t.cp + t.cf)


_DISPATCH = {
    "tarantula": tarantula,
    "jaccard": jaccard,
    "ochiai": ochiai,
    "barinel": barinel,
}


def score(formula: Formula, t: Tally) -> float:
    if formula.override is not None:
        value = float(formula.override(t))
        if math.isnan(value) or value < 0:
            raise ValueError(f"override for {formula} returned {value} for {t}")
        return value
    if formula.kind == "dstar":
        return float(dstar(t, formula.exponent))
    return _DISPATCH[formula.kind](t)
