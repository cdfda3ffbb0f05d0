"""Domain types for coverage spectra and fault repositories.

A :class:`CoverageSpectrum` is the sparse test-by-statement coverage relation
of one faulty version together with the pass/fail outcome of every test.
Everything here is immutable; derived indexes are computed lazily and cached.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable


class Outcome(Enum):
    PASSED = "pass"
    FAILED = "fail"


@dataclass(frozen=True)
class StatementInfo:
    id: str
    file: str
    line_start: int
    line_end: int
    type_label: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("statement id must be nonempty")
        if not self.type_label:
            raise ValueError(f"statement {self.id!r}: empty type label")
        if self.line_start < 1 or self.line_end < self.line_start:
            raise ValueError(
                f"statement {self.id!r}: bad line range "
                f"{self.line_start}-{self.line_end}"
            )


@dataclass(frozen=True)
class TestRecord:
    __test__ = False  # not a pytest class

    test_id: str
    outcome: Outcome

    @property
    def failed(self) -> bool:
        return self.outcome is Outcome.FAILED


@dataclass(frozen=True)
class Tally:
    """Counts of failed/passed tests that cover (cf, cp) or miss (uf, up) a statement."""

    cf: int
    cp: int
    uf: int
    up: int

    def __post_init__(self):
        if min(self.cf, self.cp, self.uf, self.up) < 0:
            raise ValueError(f"negative count in {self}")

    @property
    def total_failed(self) -> int:
        return self.cf + self.uf

    @property
    def total_passed(self) -> int:
        return self.cp + self.up


@dataclass(frozen=True)
class CoverageSpectrum:
    statements: tuple[StatementInfo, ...]
    tests: tuple[TestRecord, ...]
    covered: frozenset[tuple[str, str]]

    def __post_init__(self):
        object.__setattr__(self, "statements", tuple(self.statements))
        object.__setattr__(self, "tests", tuple(self.tests))
        object.__setattr__(self, "covered", frozenset(self.covered))
        stmt_ids = [s.id for s in self.statements]
        if len(set(stmt_ids)) != len(stmt_ids):
            dup = _first_duplicate(stmt_ids)
            raise ValueError(f"duplicate statement id {dup!r}")
        test_ids = [t.test_id for t in self.tests]
        if len(set(test_ids)) != len(test_ids):
            raise ValueError(f"duplicate test id {_first_duplicate(test_ids)!r}")
        known_s, known_t = set(stmt_ids), set(test_ids)
        for test_id, stmt_id in self.covered:
            if test_id not in known_t:
                raise ValueError(f"coverage pair references unknown test {test_id!r}")
            if stmt_id not in known_s:
                raise ValueError(
                    f"coverage pair references unknown statement {stmt_id!r}"
                )

    @cached_property
    def statement_index(self) -> dict[str, StatementInfo]:
        return {s.id: s for s in self.statements}

    @cached_property
    def n_failed(self) -> int:
        return sum(1 for t in self.tests if t.failed)

    @property
    def n_passed(self) -> int:
        return len(self.tests) - self.n_failed

    @cached_property
    def _cover_counts(self) -> tuple[Counter, Counter]:
        failed = {t.test_id for t in self.tests if t.failed}
        cf: Counter = Counter()
        cp: Counter = Counter()
        for test_id, stmt_id in self.covered:
            if test_id in failed:
                cf[stmt_id] += 1
            else:
                cp[stmt_id] += 1
        return cf, cp

    def tally(self, stmt_id: str) -> Tally:
        if stmt_id not in self.statement_index:
            raise KeyError(f"unknown statement {stmt_id!r}")
        cf_counts, cp_counts = self._cover_counts
        cf, cp = cf_counts[stmt_id], cp_counts[stmt_id]
        return Tally(cf=cf, cp=cp, uf=self.n_failed - cf, up=self.n_passed - cp)

    def suspicious_set(self) -> frozenset[str]:
        cf_counts, _ = self._cover_counts
        return frozenset(s for s, n in cf_counts.items() if n > 0)


def suspicious_set(spectrum: CoverageSpectrum) -> frozenset[str]:
    """Statements covered by at least one failed test."""
    return spectrum.suspicious_set()


def tally(spectrum: CoverageSpectrum, stmt: str) -> Tally:
    return spectrum.tally(stmt)


@dataclass(frozen=True)
class FaultyVersion:
    project_id: str
    version_id: str
    spectrum: CoverageSpectrum
    fault_labels: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "fault_labels", frozenset(self.fault_labels))
        unknown = self.fault_labels - self.spectrum.statement_index.keys()
        if unknown:
            raise ValueError(
                f"{self.project_id}/{self.version_id}: fault labels reference "
                f"unknown statements {sorted(unknown)}"
            )

    @property
    def key(self) -> tuple[str, str]:
        return (self.project_id, self.version_id)


@dataclass(frozen=True)
class Project:
    project_id: str
    versions: tuple[FaultyVersion, ...]

    def __post_init__(self):
        object.__setattr__(self, "versions", tuple(self.versions))
        ids = [v.version_id for v in self.versions]
        if len(set(ids)) != len(ids):
            raise ValueError(
                f"project {self.project_id!r}: duplicate version id "
                f"{_first_duplicate(ids)!r}"
            )
        for v in self.versions:
            if v.project_id != self.project_id:
                raise ValueError(
                    f"version {v.version_id!r} belongs to {v.project_id!r}, "
                    f"not {self.project_id!r}"
                )
            if v.spectrum.n_failed == 0:
                raise ValueError(f"{v.project_id}/{v.version_id}: no failed test")
            if not v.fault_labels:
                raise ValueError(f"{v.project_id}/{v.version_id}: no fault labels")


@dataclass(frozen=True)
class FaultRepository:
    projects: tuple[Project, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "projects", tuple(self.projects))
        ids = [p.project_id for p in self.projects]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate project id {_first_duplicate(ids)!r}")

    @property
    def project_ids(self) -> list[str]:
        return [p.project_id for p in self.projects]

    def project(self, project_id: str) -> Project:
        for p in self.projects:
            if p.project_id == project_id:
                return p
        raise KeyError(project_id)

    def without(self, project_id: str) -> FaultRepository:
        return FaultRepository(
            tuple(p for p in self.projects if p.project_id != project_id)
        )

    def versions(self) -> Iterable[FaultyVersion]:
        for p in self.projects:
            yield from p.versions


def _first_duplicate(items):
    seen = set()
    for item in items:
        if item in seen:
            return item
        seen.add(item)
    return None
