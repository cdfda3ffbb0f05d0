"""Absolute Wasted Effort (AWE) and take-one-out cross-validation.

AWE of a ranked list is the rank of its best-ranked faulty statement (rank
itself, not rank - 1).  Versions where no faulty statement was ranked are
*unlocatable*: they are counted and left out of every sum.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from hybridfl.errors import ConfigurationError, UnlocatableFault
from hybridfl.learner import LearnerConfig, PriorityModel, learn
from hybridfl.model import FaultRepository
from hybridfl.ranker import RankedEntry, SortingMode, TiePolicy, rank
from hybridfl.sbfl import OCHIAI, Formula

logger = logging.getLogger(__name__)


def best_fault(ranked: list[RankedEntry], faults) -> RankedEntry:
    """First faulty entry in list order, i.e. the one with minimum rank."""
    for entry in ranked:
        if entry.statement_id in faults:
            return entry
    raise UnlocatableFault(f"none of {sorted(faults)} appears in the ranked list")


def awe(ranked: list[RankedEntry], faults) -> float:
    if not faults:
        raise ValueError("fault set must be nonempty")
    return best_fault(ranked, faults).rank


@dataclass(frozen=True)
class AweResult:
    project_id: str
    version_id: str
    awe: float
    formula: str
    mode: str
    fold_id: str
    fault_statement: str
    fault_type: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.project_id, self.version_id)


@dataclass
class EvalReport:
    formula: str
    mode: str
    ties: str
    config: dict
    project_ids: list[str]
    results: list[AweResult] = field(default_factory=list)
    unlocatable: list[tuple[str, str]] = field(default_factory=list)
    skipped_folds: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    models: dict[str, PriorityModel] = field(default_factory=dict)

    def per_project(self) -> dict[str, float]:
        sums = {p: 0.0 for p in self.project_ids}
        for r in self.results:
            sums[r.project_id] += r.awe
        return sums

    @property
    def overall(self) -> float:
        return sum(self.per_project().values())

    def by_key(self) -> dict[tuple[str, str], AweResult]:
        return {r.key: r for r in self.results}

    def summary(self) -> dict:
        return {
            "formula": self.formula,
            "mode": self.mode,
            "ties": self.ties,
            "config": self.config,
            "per_project": self.per_project(),
            "overall": self.overall,
            "n_versions": len(self.results),
            "unlocatable": [list(k) for k in self.unlocatable],
            "skipped_folds": [list(k) for k in self.skipped_folds],
            "warnings": list(self.warnings),
        }


def fold_model(train: FaultRepository, cfg: LearnerConfig, warnings: list[str]) -> PriorityModel:
    """Learn a fold's model; fall back to all-ones when training has a single project.

    Raises ConfigurationError (``learner.degenerate``) when no training project
    has a faulty suspicious statement.
    """
    if len(train.projects) < 2:
        warnings.append(
            f"training set {train.project_ids} has fewer than 2 projects; "
            "using the all-ones model"
        )
        return PriorityModel.identity()
    return learn(train, cfg)


def _run_fold(repo, test_project, formula, mode, cfg, ties, quantize):
    warnings: list[str] = []
    try:
        model = fold_model(repo.without(test_project), cfg, warnings)
    except ConfigurationError as exc:
        return None, [], [], warnings, str(exc)
    results, unlocatable = [], []
    for version in repo.project(test_project).versions:
        ranked = rank(version, formula, model, mode, ties, quantize)
        try:
            hit = best_fault(ranked, version.fault_labels)
        except UnlocatableFault:
            unlocatable.append(version.key)
            continue
        results.append(
            AweResult(
                project_id=version.project_id,
                version_id=version.version_id,
                awe=hit.rank,
                formula=str(formula),
                mode=mode.value,
                fold_id=test_project,
                fault_statement=hit.statement_id,
                fault_type=hit.type_label,
            )
        )
    return model, results, unlocatable, warnings, None


def take_one_out(
    repo: FaultRepository,
    formula: Formula = OCHIAI,
    mode: SortingMode = SortingMode.HYBRID,
    cfg: LearnerConfig | None = None,
    ties: TiePolicy = TiePolicy.MID,
    quantize: int | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Each project in turn is ranked with a model learned on all the others.

    Folds are learned in every mode, including SBFL-only, so that skipped
    folds coincide across runs that are later paired.
    """
    cfg = cfg or LearnerConfig()
    if len(repo.projects) < 2:
        raise ConfigurationError(
            "take-one-out needs at least 2 projects", code="eval.too-few-projects"
        )
    project_ids = repo.project_ids
    args = [(repo, p, formula, mode, cfg, ties, quantize) for p in project_ids]
    if jobs > 1 and formula.override is None:
        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            outcomes = list(pool.map(_run_fold, *zip(*args)))
    else:
        outcomes = [_run_fold(*a) for a in args]

    report = EvalReport(
        formula=str(formula),
        mode=mode.value,
        ties=ties.value,
        config=cfg.snapshot(),
        project_ids=project_ids,
    )
    for project_id, (model, results, unlocatable, warnings, skipped) in zip(
        project_ids, outcomes
    ):
        report.warnings.extend(warnings)
        if skipped is not None:
            msg = f"fold {project_id!r} skipped: {skipped}"
            logger.warning(msg)
            report.warnings.append(msg)
            report.skipped_folds.append((project_id, skipped))
            continue
        report.models[project_id] = model
        report.results.extend(results)
        report.unlocatable.extend(unlocatable)
    return report


@dataclass(frozen=True)
class Reduction:
    baseline: dict[str, float]
    treatment: dict[str, float]
    per_project: dict[str, float | None]
    overall: float | None
    n_pairs: int


def _reduction(x: float, y: float) -> float | None:
    return 1.0 - y / x if x else None


def relative_reduction(baseline: EvalReport, treatment: EvalReport) -> Reduction:
    """``1 - y/x`` per project and overall, over versions present in both runs."""
    xb, yb = baseline.by_key(), treatment.by_key()
    paired = sorted(xb.keys() & yb.keys())
    projects = [p for p in baseline.project_ids if p in set(treatment.project_ids)]
    xs = {p: 0.0 for p in projects}
    ys = {p: 0.0 for p in projects}
    for k in paired:
        xs[k[0]] += xb[k].awe
        ys[k[0]] += yb[k].awe
    return Reduction(
        baseline=xs,
        treatment=ys,
        per_project={p: _reduction(xs[p], ys[p]) for p in projects},
        overall=_reduction(sum(xs.values()), sum(ys.values())),
        n_pairs=len(paired),
    )


@dataclass(frozen=True)
class TypeBreakdownRow:
    type_label: str
    priority: float | None
    improved: int
    decreased: int
    draw: int

    @property
    def total(self) -> int:
        return self.improved + self.decreased + self.draw

    @property
    def chance_improvement(self) -> float | None:
        return self.improved / self.total if self.total else None

    @property
    def chance_reduction(self) -> float | None:
        return self.decreased / self.total if self.total else None


def per_type_breakdown(
    treatment: EvalReport, baseline: EvalReport, model: PriorityModel | None = None
) -> list[TypeBreakdownRow]:
    """Improved / decreased / draw counts keyed by the faulty statement's type.

    A version is attributed to the type of its best-ranked faulty statement in
    the baseline ranking.  ``model`` only fills the priority column.
    """
    xb, yb = baseline.by_key(), treatment.by_key()
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for k in sorted(xb.keys() & yb.keys()):
        x, y = xb[k], yb[k]
        c = counts[x.fault_type]
        if y.awe < x.awe:
            c[0] += 1
        elif y.awe > x.awe:
            c[1] += 1
        else:
            c[2] += 1
    rows = [
        TypeBreakdownRow(t, model.weight(t) if model else None, *c)
        for t, c in counts.items()
    ]
    rows.sort(key=lambda r: (-r.total, r.type_label))
    return rows


# -- delimited tables ---------------------------------------------------------


def _fmt_num(x: float | None) -> str:
    if x is None:
        return "-"
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def _fmt_pct(x: float | None) -> str:
    return "-" if x is None else f"{100 * x:.1f}%"


def awe_table(rows: list[tuple[str, EvalReport]], reduction_of: tuple[int, int] | None = (0, 1)) -> str:
    """Projects as columns plus Overall; one row per labelled run.

    With ``reduction_of=(i, j)`` a final row gives ``1 - y/x`` for x = run i,
    y = run j.
    """
    projects = rows[0][1].project_ids
    lines = ["\t".join(["run", *projects, "Overall"])]
    for label, report in rows:
        sums = report.per_project()
        lines.append("\t".join([label, *(_fmt_num(sums.get(p)) for p in projects),
                                _fmt_num(report.overall)]))
    if reduction_of is not None and len(rows) > max(reduction_of):
        red = relative_reduction(rows[reduction_of[0]][1], rows[reduction_of[1]][1])
        lines.append("\t".join(["Relative Reduction (1-y/x)",
                                *(_fmt_pct(red.per_project.get(p)) for p in projects),
                                _fmt_pct(red.overall)]))
    return "\n".join(lines) + "\n"


def reduction_table(rows: list[tuple[str, EvalReport, EvalReport]]) -> str:
    """One row per (label, baseline, treatment): relative reduction per project."""
    projects = rows[0][1].project_ids
    lines = ["\t".join(["run", *projects, "Overall"])]
    for label, base, treat in rows:
        red = relative_reduction(base, treat)
        lines.append("\t".join([label, *(_fmt_pct(red.per_project.get(p)) for p in projects),
                                _fmt_pct(red.overall)]))
    return "\n".join(lines) + "\n"


def breakdown_table(rows: list[TypeBreakdownRow]) -> str:
    header = ["type", "priority", "improved", "decreased", "draw",
              "chance_improvement", "chance_reduction"]
    lines = ["\t".join(header)]
    for r in rows:
        prio = "-" if r.priority is None else f"{r.priority:.4g}"
        lines.append("\t".join([r.type_label, prio, str(r.improved), str(r.decreased),
                                str(r.draw), _fmt_pct(r.chance_improvement),
                                _fmt_pct(r.chance_reduction)]))
    return "\n".join(lines) + "\n"
