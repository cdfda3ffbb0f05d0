"""Online localization: rank the suspicious statements of one faulty version.

Scores are compared with exact float equality.  Entries with equal sort keys
form a tie group; within a group the listing order is by statement id and
every member receives the same rank according to the :class:`TiePolicy`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from hybridfl.learner import PriorityModel
from hybridfl.model import FaultyVersion
from hybridfl.sbfl import OCHIAI, Formula, score


class SortingMode(Enum):
    HYBRID = "hybrid"
    SBFL_ONLY = "sbfl-only"
    PRIORITY_ONLY = "priority-only"
    MULTI_LEVEL_SBFL_FIRST = "ml-sbfl-first"
    MULTI_LEVEL_PRIORITY_FIRST = "ml-priority-first"


class TiePolicy(Enum):
    MID = "mid"
    WORST = "worst"
    BEST = "best"


@dataclass(frozen=True)
class RankedEntry:
    statement_id: str
    type_label: str
    base_score: float
    priority: float
    adjusted_score: float
    rank: float


def sort_key(mode: SortingMode, base: float, priority: float, adjusted: float,
             quantize: int | None = None) -> tuple[float, ...]:
    if mode is SortingMode.HYBRID:
        return (adjusted,)
    if mode is SortingMode.SBFL_ONLY:
        return (base,)
    if mode is SortingMode.PRIORITY_ONLY:
        return (priority,)
    if mode is SortingMode.MULTI_LEVEL_SBFL_FIRST:
        first = round(base, quantize) if quantize is not None else base
        return (first, priority)
    if mode is SortingMode.MULTI_LEVEL_PRIORITY_FIRST:
        return (priority, base)
    raise ValueError(mode)


def assign_ranks(n_group: int, start: int, ties: TiePolicy) -> float:
    """Rank shared by a tie group occupying 1-based positions start..start+n-1."""
    if ties is TiePolicy.BEST:
        return float(start)
    if ties is TiePolicy.WORST:
        return float(start + n_group - 1)
    return start + (n_group - 1) / 2


def rank_scored(
    items: Iterable[tuple[str, str, float]],
    model: PriorityModel,
    mode: SortingMode = SortingMode.HYBRID,
    ties: TiePolicy = TiePolicy.MID,
    quantize: int | None = None,
) -> list[RankedEntry]:
    """Rank ``(statement_id, type_label, base_score)`` triples."""
    keyed = []
    for stmt_id, label, base in items:
        priority = model.weight(label)
        adjusted = base * priority
        key = sort_key(mode, base, priority, adjusted, quantize)
        keyed.append((tuple(-k for k in key), stmt_id, label, base, priority, adjusted))
    keyed.sort(key=lambda row: (row[0], row[1]))

    out: list[RankedEntry] = []
    i = 0
    while i < len(keyed):
        j = i
        while j < len(keyed) and keyed[j][0] == keyed[i][0]:
            j += 1
        r = assign_ranks(j - i, i + 1, ties)
        for _, stmt_id, label, base, priority, adjusted in keyed[i:j]:
            out.append(RankedEntry(stmt_id, label, base, priority, adjusted, r))
        i = j
    return out


def base_scores(version: FaultyVersion, formula: Formula = OCHIAI) -> list[tuple[str, str, float]]:
    spectrum = version.spectrum
    index = spectrum.statement_index
    return [
        (s, index[s].type_label, score(formula, spectrum.tally(s)))
        for s in sorted(spectrum.suspicious_set())
    ]


def rank(
    version: FaultyVersion,
    formula: Formula = OCHIAI,
    model: PriorityModel | None = None,
    mode: SortingMode = SortingMode.HYBRID,
    ties: TiePolicy = TiePolicy.MID,
    quantize: int | None = None,
) -> list[RankedEntry]:
    """Rank exactly the suspicious statements of ``version``; [] if there are none."""
    model = model if model is not None else PriorityModel.identity()
    return rank_scored(base_scores(version, formula), model, mode, ties, quantize)
