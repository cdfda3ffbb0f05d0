"""Synthetic fault repositories with planted per-type error-proneness.

Random stream: numpy ``Generator(PCG64(seed))``, consumed in a fixed order
(projects, then versions, then the per-version draws listed in
:func:`_generate_version`).  Identical configs give identical corpora.

Per version the suspicious set is drawn first, independently of type, and
faults are then drawn among suspicious statements only, each with
probability ``fault_rate * planted_rp[type]``.  The measured RP of a type is
therefore an unbiased ratio estimate of its planted value, provided the
planted values average to 1 under ``type_mix`` (checked).  A draw without any
fault is repeated; conditioning on "at least one fault" rescales every
statement's fault probability by the same factor and so leaves RP intact.

Failed tests cover faulty statements with probability ``fault_cover_prob``
and other suspicious statements with ``coverage_density``; every suspicious
statement is then topped up to at least one failed test.  Passed tests cover
any statement with ``coverage_density``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hybridfl.errors import ConfigurationError
from hybridfl.model import (
    CoverageSpectrum,
    FaultRepository,
    FaultyVersion,
    Outcome,
    Project,
    StatementInfo,
    TestRecord,
)

MAX_REDRAWS = 1000
_MULTILINE_TYPES = {"If", "For", "EnhancedFor", "While", "Try", "Switch"}


def _default_mix():
    return {"If": 1 / 3, "Expression": 2 / 3}


def _default_rp():
    return {"If": 2.0, "Expression": 0.5}


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_projects: int = 4
    versions_per_project: int = 50
    statements_per_version: int = 200
    type_mix: dict[str, float] = field(default_factory=_default_mix)
    planted_rp: dict[str, float] = field(default_factory=_default_rp)
    tests_per_version: int = 20
    coverage_density: float = 0.3
    fail_fraction: float = 0.05
    suspicious_fraction: float = 0.5
    fault_rate: float = 0.05
    fault_cover_prob: float = 1.0
    statements_per_file: int = 50

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer", code="synth.config")
        for name in ("n_projects", "versions_per_project", "statements_per_version",
                     "tests_per_version", "statements_per_file"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1", code="synth.config")
        if not self.type_mix:
            raise ConfigurationError("type_mix is empty", code="synth.config")
        if abs(math.fsum(self.type_mix.values()) - 1.0) > 1e-9:
            raise ConfigurationError("type_mix proportions must sum to 1", code="synth.config")
        if any(p < 0 for p in self.type_mix.values()):
            raise ConfigurationError("type_mix proportions must be >= 0", code="synth.config")
        unknown = set(self.planted_rp) - set(self.type_mix)
        if unknown:
            raise ConfigurationError(f"planted_rp for types not in type_mix: {sorted(unknown)}",
                                     code="synth.config")
        for label, rp in self.planted_rp.items():
            if rp < 0:
                raise ConfigurationError(f"planted_rp[{label!r}] must be >= 0", code="synth.config")
        mean_rp = math.fsum(p * self.rp(t) for t, p in self.type_mix.items())
        if abs(mean_rp - 1.0) > 1e-6:
            raise ConfigurationError(
                f"planted RP values average to {mean_rp:.6g} under type_mix; "
                "relative error-proneness must average to 1",
                code="synth.config",
            )
        if not 0 < self.coverage_density <= 1:
            raise ConfigurationError("coverage_density must lie in (0, 1]", code="synth.config")
        if not 0 < self.fail_fraction < 1:
            raise ConfigurationError("fail_fraction must lie in (0, 1)", code="synth.config")
        if not 0 < self.suspicious_fraction <= 1:
            raise ConfigurationError("suspicious_fraction must lie in (0, 1]", code="synth.config")
        if not 0 <= self.fault_cover_prob <= 1:
            raise ConfigurationError("fault_cover_prob must lie in [0, 1]", code="synth.config")
        if not 0 < self.fault_rate <= 1:
            raise ConfigurationError("fault_rate must lie in (0, 1]", code="synth.config")
        for label in self.type_mix:
            q = self.fault_rate * self.rp(label)
            if q > 1:
                raise ConfigurationError(
                    f"type {label!r}: fault probability {q:.3g} exceeds 1", code="synth.infeasible"
                )

    def rp(self, label: str) -> float:
        return self.planted_rp.get(label, 1.0)


def generate(cfg: SynthConfig) -> FaultRepository:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    labels = sorted(cfg.type_mix)
    mix = np.array([cfg.type_mix[t] for t in labels])
    mix = mix / mix.sum()
    q = np.array([cfg.fault_rate * cfg.rp(t) for t in labels])
    projects = []
    for p in range(cfg.n_projects):
        project_id = f"proj{p + 1:02d}"
        versions = [
            _generate_version(rng, cfg, project_id, f"v{v + 1:03d}", labels, mix, q)
            for v in range(cfg.versions_per_project)
        ]
        projects.append(Project(project_id, tuple(versions)))
    return FaultRepository(tuple(projects))


def _generate_version(rng, cfg, project_id, version_id, labels, mix, q) -> FaultyVersion:
    n = cfg.statements_per_version
    type_idx = rng.choice(len(labels), size=n, p=mix)

    for _ in range(MAX_REDRAWS):
        suspicious = rng.random(n) < cfg.suspicious_fraction
        faulty = suspicious & (rng.random(n) < q[type_idx])
        if faulty.any():
            break
    else:
        raise ConfigurationError(
            f"{project_id}/{version_id}: no fault after {MAX_REDRAWS} draws; "
            "raise fault_rate or statements_per_version",
            code="synth.infeasible",
        )

    n_tests = cfg.tests_per_version
    n_failed = min(max(1, round(n_tests * cfg.fail_fraction)), n_tests)
    n_passed = n_tests - n_failed

    fail_prob = np.where(faulty, cfg.fault_cover_prob,
                         np.where(suspicious, cfg.coverage_density, 0.0))
    fail_cov = rng.random((n_failed, n)) < fail_prob
    orphans = np.flatnonzero(suspicious & ~fail_cov.any(axis=0))
    if orphans.size:
        fail_cov[rng.integers(0, n_failed, size=orphans.size), orphans] = True
    pass_cov = rng.random((n_passed, n)) < cfg.coverage_density

    stmt_ids = [f"s{i + 1:04d}" for i in range(n)]
    statements = []
    for i, sid in enumerate(stmt_ids):
        label = labels[type_idx[i]]
        unit, pos = divmod(i, cfg.statements_per_file)
        start = 3 * pos + 1
        end = start + (1 if label in _MULTILINE_TYPES else 0)
        statements.append(StatementInfo(sid, f"src/{project_id}/Unit{unit}.java", start, end, label))

    tests = [TestRecord(f"t{j + 1:03d}", Outcome.FAILED) for j in range(n_failed)]
    tests += [TestRecord(f"t{n_failed + j + 1:03d}", Outcome.PASSED) for j in range(n_passed)]
    covered = set()
    for rows, offset in ((fail_cov, 0), (pass_cov, n_failed)):
        for j, i in zip(*np.nonzero(rows)):
            covered.add((tests[offset + j].test_id, stmt_ids[i]))

    spectrum = CoverageSpectrum(tuple(statements), tuple(tests), frozenset(covered))
    faults = frozenset(stmt_ids[i] for i in np.flatnonzero(faulty))
    return FaultyVersion(project_id, version_id, spectrum, faults)
