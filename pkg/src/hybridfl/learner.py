"""Offline analysis: statement-type error-proneness and priority weights.

For every project the suspicious statements of all its faulty versions are
pooled, one element per ``(version, statement)`` occurrence, and split by
type label.  The error-proneness of a type in a project is the fraction of
its suspicious occurrences that are faulty; the *relative* error-proneness
(RP) divides that by the project-wide fraction.

A type earns a special priority when its base-10 log RP values sit on one
side of zero in at least ``ceil(same_side_fraction * n)`` of the ``n``
projects where it occurs.  Its weight is ``10 ** aggregate(lg RP)``: with the
average this is the geometric mean of the RP values (0 if any RP is 0), with
the median it is the median RP (geometric mean of the middle pair for even
``n``).  Everything else weighs exactly 1.
"""

from __future__ import annotations

import logging
import math
import statistics
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from enum import Enum

from hybridfl.errors import ConfigurationError
from hybridfl.model import FaultRepository, Project

logger = logging.getLogger(__name__)


class Aggregation(Enum):
    AVERAGE = "avg"
    MEDIAN = "median"


@dataclass(frozen=True)
class LearnerConfig:
    same_side_fraction: float = 0.95
    aggregation: Aggregation = Aggregation.AVERAGE
    selection_enabled: bool = True
    min_type_share: float = 0.0

    def __post_init__(self):
        if not 0.5 < self.same_side_fraction <= 1.0:
            raise ConfigurationError(
                f"same_side_fraction must lie in (0.5, 1], got {self.same_side_fraction}",
                code="learner.config",
            )
        if self.min_type_share < 0:
            raise ConfigurationError("min_type_share must be >= 0", code="learner.config")
        if isinstance(self.aggregation, str):
            object.__setattr__(self, "aggregation", Aggregation(self.aggregation))

    def snapshot(self) -> dict:
        d = asdict(self)
        d["aggregation"] = self.aggregation.value
        return d


@dataclass(frozen=True)
class ProjectTypeStats:
    project_id: str
    type_label: str
    tss_count: int
    tfs_count: int
    ap_type: float
    ap_project: float
    rp: float


@dataclass(frozen=True)
class PriorityModel:
    weights: dict[str, float] = field(default_factory=dict)
    selected: dict[str, bool] = field(default_factory=dict)
    per_type_rp: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    DEFAULT_WEIGHT = 1.0

    @classmethod
    def identity(cls) -> PriorityModel:
        """The all-ones model: every type weighs 1."""
        return cls()

    def weight(self, type_label: str) -> float:
        return self.weights.get(type_label, self.DEFAULT_WEIGHT)

    def is_identity(self) -> bool:
        return all(w == 1.0 for w in self.weights.values())


def _project_counts(project: Project):
    """Per-type (suspicious, faulty) occurrence counts over all versions."""
    tss: dict[str, int] = defaultdict(int)
    tfs: dict[str, int] = defaultdict(int)
    for version in project.versions:
        spectrum = version.spectrum
        index = spectrum.statement_index
        for stmt_id in spectrum.suspicious_set():
            label = index[stmt_id].type_label
            tss[label] += 1
            if stmt_id in version.fault_labels:
                tfs[label] += 1
    return tss, tfs


def collect_type_stats(
    repo: FaultRepository, warnings: list[str] | None = None
) -> list[ProjectTypeStats]:
    """One row per (project, type) with at least one suspicious occurrence.

    Projects without any faulty suspicious statement have no defined RP; they
    are left out and a message is appended to ``warnings``.
    """
    rows = []
    for project in sorted(repo.projects, key=lambda p: p.project_id):
        tss, tfs = _project_counts(project)
        total_s, total_f = sum(tss.values()), sum(tfs.values())
        if total_f == 0:
            msg = (
                f"project {project.project_id!r} has no faulty suspicious statement; "
                "excluded from RP computation"
            )
            logger.warning(msg)
            if warnings is not None:
                warnings.append(msg)
            continue
        ap_project = total_f / total_s
        for label in sorted(tss):
            ap_type = tfs[label] / tss[label]
            rows.append(
                ProjectTypeStats(
                    project_id=project.project_id,
                    type_label=label,
                    tss_count=tss[label],
                    tfs_count=tfs[label],
                    ap_type=ap_type,
                    ap_project=ap_project,
                    rp=ap_type / ap_project,
                )
            )
    return rows


def side_of_one(rp: float) -> int:
    """Sign of lg(rp): +1 above 1, -1 below (including 0), 0 at exactly 1."""
    if rp > 1.0:
        return 1
    if rp < 1.0:
        return -1
    return 0


def required_same_side(fraction: float, n: int) -> int:
    # round() absorbs float noise such as 0.95 * 20 == 19.000000000000004
    return math.ceil(round(fraction * n, 9))


def is_steady(rps: list[float], fraction: float) -> bool:
    n = len(rps)
    if n == 0:
        return False
    sides = [side_of_one(r) for r in rps]
    need = required_same_side(fraction, n)
    return max(sides.count(1), sides.count(-1)) >= need


def geometric_mean(values: list[float]) -> float:
    """``10 ** mean(lg v)``; 0 when any value is 0."""
    if any(v == 0 for v in values):
        return 0.0
    return 10 ** (math.fsum(math.log10(v) for v in values) / len(values))


def log_median(values: list[float]) -> float:
    """``10 ** median(lg v)`` evaluated without taking lg(0)."""
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return geometric_mean(ordered[mid - 1 : mid + 1])


def aggregate(values: list[float], how: Aggregation) -> float:
    if how is Aggregation.AVERAGE:
        return geometric_mean(values)
    return log_median(values)


def learn(repo: FaultRepository, cfg: LearnerConfig | None = None) -> PriorityModel:
    cfg = cfg or LearnerConfig()
    if len(repo.projects) < 2:
        raise ConfigurationError(
            f"learning needs at least 2 projects, got {len(repo.projects)}",
            code="learner.too-few-projects",
        )
    rows = collect_type_stats(repo)
    if not rows:
        raise ConfigurationError(
            "no project has a faulty suspicious statement", code="learner.degenerate"
        )

    per_type: dict[str, list[tuple[str, float]]] = defaultdict(list)
    for row in rows:
        per_type[row.type_label].append((row.project_id, row.rp))

    excluded = set()
    if cfg.min_type_share > 0:
        shares = type_shares(rows)
        excluded = {t for t, share in shares.items() if share < cfg.min_type_share}

    weights, selected, kept_rp = {}, {}, {}
    for label in sorted(per_type):
        if label in excluded:
            continue
        pairs = sorted(per_type[label])
        rps = [rp for _, rp in pairs]
        kept_rp[label] = pairs
        steady = is_steady(rps, cfg.same_side_fraction)
        if steady or not cfg.selection_enabled:
            weights[label] = aggregate(rps, cfg.aggregation)
        else:
            weights[label] = 1.0
        selected[label] = steady if cfg.selection_enabled else True
    return PriorityModel(
        weights=weights, selected=selected, per_type_rp=kept_rp, config=cfg.snapshot()
    )


def type_shares(rows: list[ProjectTypeStats]) -> dict[str, float]:
    totals: dict[str, int] = defaultdict(int)
    for row in rows:
        totals[row.type_label] += row.tss_count
    grand = sum(totals.values())
    return {t: n / grand for t, n in totals.items()} if grand else {}


@dataclass(frozen=True)
class ErrorPronenessRow:
    type_label: str
    total_suspicious: int
    rp_min: float
    rp_max: float
    rp_avg: float
    rp_median: float


def report_error_proneness(
    repo: FaultRepository, min_share: float = 0.01
) -> list[ErrorPronenessRow]:
    """Per-type RP summary across projects, most common types first.

    ``rp_avg`` is the arithmetic mean and ``rp_median`` the plain median of the
    per-project RP values.  Types below ``min_share`` of all suspicious
    occurrences are omitted.
    """
    rows = collect_type_stats(repo)
    shares = type_shares(rows)
    by_type: dict[str, list[ProjectTypeStats]] = defaultdict(list)
    for row in rows:
        by_type[row.type_label].append(row)
    table = []
    for label, group in by_type.items():
        if shares[label] < min_share:
            continue
        rps = [r.rp for r in sorted(group, key=lambda r: r.project_id)]
        table.append(
            ErrorPronenessRow(
                type_label=label,
                total_suspicious=sum(r.tss_count for r in group),
                rp_min=min(rps),
                rp_max=max(rps),
                rp_avg=math.fsum(rps) / len(rps),
                rp_median=statistics.median(rps),
            )
        )
    table.sort(key=lambda r: (-r.total_suspicious, r.type_label))
    return table
