"""On-disk corpus layout, validation, dataset filters and text formats.

Layout (UTF-8, LF line endings, header row on every CSV)::

    root/manifest.json
    root/<project>/<version>/statements.csv   statement_id,file,line_start,line_end,type_label
    root/<project>/<version>/tests.csv        test_id,outcome          (outcome: pass|fail)
    root/<project>/<version>/coverage.csv     test_id,statement_id
    root/<project>/<version>/faults.csv       statement_id
        or patch.diff + linemap.csv           file,line_start,line_end,statement_id

``faults.csv`` wins over ``patch.diff`` when both exist.

Versions that fail validation are rejected individually with a diagnostic;
only an unreadable manifest aborts loading.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from hybridfl.diffs import LineMap, faults_from_diff, is_insert_only
from hybridfl.errors import DiffParseError, IngestError
from hybridfl.learner import PriorityModel
from hybridfl.model import (
    CoverageSpectrum,
    FaultRepository,
    FaultyVersion,
    Outcome,
    Project,
    StatementInfo,
    TestRecord,
)
from hybridfl.ranker import RankedEntry

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SUPPORTED_SCHEMAS = {1}
MODEL_HEADER = "hybridfl-priorities v1"
RANKED_HEADER = "rank\tstatement_id\ttype_label\tbase\tpriority\tadjusted"

STATEMENTS_COLS = ["statement_id", "file", "line_start", "line_end", "type_label"]
TESTS_COLS = ["test_id", "outcome"]
COVERAGE_COLS = ["test_id", "statement_id"]
FAULTS_COLS = ["statement_id"]
LINEMAP_COLS = ["file", "line_start", "line_end", "statement_id"]

# diagnostic codes
MISSING_FILE = "ingest.missing-file"
MALFORMED_CSV = "ingest.malformed-csv"
DUPLICATE_ID = "ingest.duplicate-id"
REFERENTIAL = "ingest.referential-integrity"
NO_FAILED_TEST = "ingest.no-failed-test"
EMPTY_FAULTS = "ingest.empty-fault-labels"
DIFF_PARSE = "ingest.diff-parse"
INSERT_ONLY = "ingest.insert-only"
TOO_FEW_DEFECTS = "ingest.too-few-defects"
FAULTS_MISMATCH = "ingest.faults-diff-mismatch"
UNMAPPED_LINE = "ingest.unmapped-line"

# codes that mean the data is broken, as opposed to filtered out by policy
ERROR_CODES = {MISSING_FILE, MALFORMED_CSV, DUPLICATE_ID, REFERENTIAL, NO_FAILED_TEST,
               EMPTY_FAULTS, DIFF_PARSE}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    project_id: str | None
    version_id: str | None
    message: str

    def __str__(self):
        where = "/".join(x for x in (self.project_id, self.version_id) if x)
        return f"{self.code}: {where}: {self.message}" if where else f"{self.code}: {self.message}"


@dataclass(frozen=True)
class CorpusManifest:
    schema_version: int
    projects: list[tuple[str, list[str]]]
    min_defects_per_project: int = 30
    exclude_insert_only: bool = True

    def to_json(self) -> str:
        doc = {
            "schema_version": self.schema_version,
            "min_defects_per_project": self.min_defects_per_project,
            "exclude_insert_only": self.exclude_insert_only,
            "projects": [
                {"project_id": p, "versions": list(vs)} for p, vs in self.projects
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> CorpusManifest:
        try:
            doc = json.loads(text)
            schema = int(doc["schema_version"])
            projects = [(p["project_id"], list(p["versions"])) for p in doc["projects"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise IngestError(f"unreadable manifest: {exc}", code="ingest.manifest") from exc
        if schema not in SUPPORTED_SCHEMAS:
            raise IngestError(f"unsupported schema_version {schema}", code="ingest.schema-version")
        ids = [p for p, _ in projects]
        if len(set(ids)) != len(ids):
            raise IngestError("duplicate project id in manifest", code="ingest.manifest")
        for p, vs in projects:
            if len(set(vs)) != len(vs):
                raise IngestError(f"duplicate version id in project {p!r}", code="ingest.manifest")
        return cls(
            schema_version=schema,
            projects=projects,
            min_defects_per_project=int(doc.get("min_defects_per_project", 30)),
            exclude_insert_only=bool(doc.get("exclude_insert_only", True)),
        )


@dataclass
class LoadReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)
    excluded_projects: dict[str, str] = field(default_factory=dict)
    excluded_versions: dict[tuple[str, str], str] = field(default_factory=dict)

    def add(self, code, project_id, version_id, message):
        d = Diagnostic(code, project_id, version_id, message)
        self.diagnostics.append(d)
        logger.info("%s", d)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.code in ERROR_CODES]


@dataclass(frozen=True)
class LoadResult:
    repository: FaultRepository
    report: LoadReport
    manifest: CorpusManifest


class _VersionRejected(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _read_csv(path: Path, columns: list[str]) -> list[list[str]]:
    if not path.is_file():
        raise _VersionRejected(MISSING_FILE, f"missing {path.name}")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != columns:
        raise _VersionRejected(
            MALFORMED_CSV, f"{path.name}: header must be {','.join(columns)}"
        )
    body = []
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(columns):
            raise _VersionRejected(
                MALFORMED_CSV, f"{path.name}:{n}: expected {len(columns)} fields, got {len(row)}"
            )
        body.append(row)
    return body


def _unique(ids, what, filename):
    seen = set()
    for i in ids:
        if i in seen:
            raise _VersionRejected(DUPLICATE_ID, f"{filename}: duplicate {what} {i!r}")
        seen.add(i)


def _load_version(vdir: Path, project_id: str, version_id: str, exclude_insert_only: bool,
                  report: LoadReport) -> FaultyVersion:
    stmt_rows = _read_csv(vdir / "statements.csv", STATEMENTS_COLS)
    _unique([r[0] for r in stmt_rows], "statement id", "statements.csv")
    try:
        statements = [
            StatementInfo(r[0], r[1], int(r[2]), int(r[3]), r[4]) for r in stmt_rows
        ]
    except ValueError as exc:
        raise _VersionRejected(MALFORMED_CSV, f"statements.csv: {exc}") from exc

    test_rows = _read_csv(vdir / "tests.csv", TESTS_COLS)
    _unique([r[0] for r in test_rows], "test id", "tests.csv")
    try:
        tests = [TestRecord(r[0], Outcome(r[1])) for r in test_rows]
    except ValueError as exc:
        raise _VersionRejected(MALFORMED_CSV, f"tests.csv: bad outcome ({exc})") from exc

    cov_rows = _read_csv(vdir / "coverage.csv", COVERAGE_COLS)
    stmt_ids = {s.id for s in statements}
    test_ids = {t.test_id for t in tests}
    for n, (t, s) in enumerate(cov_rows, start=2):
        if t not in test_ids or s not in stmt_ids:
            raise _VersionRejected(
                REFERENTIAL, f"coverage.csv:{n}: pair ({t}, {s}) references an unknown id"
            )
    if not any(t.failed for t in tests):
        raise _VersionRejected(NO_FAILED_TEST, "no failed test")
    spectrum = CoverageSpectrum(tuple(statements), tuple(tests),
                                frozenset((t, s) for t, s in cov_rows))

    faults_path, diff_path = vdir / "faults.csv", vdir / "patch.diff"
    diff_faults = None
    if diff_path.is_file():
        diff_text = diff_path.read_text(encoding="utf-8")
        try:
            insert_only = is_insert_only(diff_text)
        except DiffParseError as exc:
            raise _VersionRejected(DIFF_PARSE, str(exc)) from exc
        if insert_only and exclude_insert_only:
            raise _VersionRejected(INSERT_ONLY, "patch only inserts statements")
        linemap_path = vdir / "linemap.csv"
        if linemap_path.is_file():
            line_map = LineMap.from_rows(_read_csv(linemap_path, LINEMAP_COLS))
            unknown = line_map.statement_ids() - stmt_ids
            if unknown:
                raise _VersionRejected(
                    REFERENTIAL, f"linemap.csv references unknown statements {sorted(unknown)}"
                )
            warnings: list[str] = []
            diff_faults = faults_from_diff(diff_text, line_map, warnings)
            for w in warnings:
                report.add(UNMAPPED_LINE, project_id, version_id, w)
        elif not faults_path.is_file():
            raise _VersionRejected(MISSING_FILE, "patch.diff present without linemap.csv")

    if faults_path.is_file():
        fault_rows = _read_csv(faults_path, FAULTS_COLS)
        faults = {r[0] for r in fault_rows}
        unknown = faults - stmt_ids
        if unknown:
            raise _VersionRejected(
                REFERENTIAL, f"faults.csv references unknown statements {sorted(unknown)}"
            )
        if diff_faults is not None and diff_faults != faults:
            report.add(FAULTS_MISMATCH, project_id, version_id,
                       "faults.csv disagrees with patch.diff; using faults.csv")
    elif diff_faults is not None:
        faults = diff_faults
    else:
        raise _VersionRejected(MISSING_FILE, "neither faults.csv nor patch.diff present")

    if not faults:
        raise _VersionRejected(EMPTY_FAULTS, "no fault labels")
    return FaultyVersion(project_id, version_id, spectrum, frozenset(faults))


def load_corpus(root, min_defects: int | None = None,
                exclude_insert_only: bool | None = None) -> LoadResult:
    """Load, validate and filter a corpus.

    ``min_defects`` and ``exclude_insert_only`` override the manifest policy.
    Projects are counted after version-level rejection.
    """
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise IngestError(f"{manifest_path} not found", code=MISSING_FILE)
    manifest = CorpusManifest.from_json(manifest_path.read_text(encoding="utf-8"))
    min_defects = manifest.min_defects_per_project if min_defects is None else min_defects
    if exclude_insert_only is None:
        exclude_insert_only = manifest.exclude_insert_only

    report = LoadReport()
    projects = []
    for project_id, version_ids in manifest.projects:
        versions = []
        for version_id in version_ids:
            try:
                versions.append(_load_version(root / project_id / version_id, project_id,
                                              version_id, exclude_insert_only, report))
            except _VersionRejected as exc:
                report.add(exc.code, project_id, version_id, str(exc))
                report.excluded_versions[(project_id, version_id)] = exc.code
            except ValueError as exc:
                report.add(MALFORMED_CSV, project_id, version_id, str(exc))
                report.excluded_versions[(project_id, version_id)] = MALFORMED_CSV
        if len(versions) < min_defects:
            msg = f"{len(versions)} defects < minimum {min_defects}; project excluded"
            report.add(TOO_FEW_DEFECTS, project_id, None, msg)
            report.excluded_projects[project_id] = msg
            continue
        projects.append(Project(project_id, tuple(versions)))
    return LoadResult(FaultRepository(tuple(projects)), report, manifest)


def load_repository(root, **kwargs) -> FaultRepository:
    return load_corpus(root, **kwargs).repository


def apply_filters(repo: FaultRepository, min_defects: int) -> FaultRepository:
    """Drop projects with fewer than ``min_defects`` versions (idempotent)."""
    return FaultRepository(tuple(p for p in repo.projects if len(p.versions) >= min_defects))


# -- writing ------------------------------------------------------------------


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _check_id(value: str, what: str):
    if any(c in value for c in ",\n\r\""):
        raise IngestError(f"{what} {value!r} contains a comma, quote or newline",
                          code="ingest.bad-id")


def version_files(version: FaultyVersion) -> dict[str, str]:
    """Canonical file contents for one version (faults given as faults.csv)."""
    sp = version.spectrum
    for s in sp.statements:
        _check_id(s.id, "statement id")
    for t in sp.tests:
        _check_id(t.test_id, "test id")
    s_order = {s.id: i for i, s in enumerate(sp.statements)}
    t_order = {t.test_id: i for i, t in enumerate(sp.tests)}
    pairs = sorted(sp.covered, key=lambda p: (t_order[p[0]], s_order[p[1]]))
    return {
        "statements.csv": _csv_text(
            STATEMENTS_COLS,
            [(s.id, s.file, s.line_start, s.line_end, s.type_label) for s in sp.statements],
        ),
        "tests.csv": _csv_text(TESTS_COLS, [(t.test_id, t.outcome.value) for t in sp.tests]),
        "coverage.csv": _csv_text(COVERAGE_COLS, pairs),
        "faults.csv": _csv_text(
            FAULTS_COLS, [(s,) for s in sorted(version.fault_labels, key=s_order.__getitem__)]
        ),
    }


def save_repository(repo: FaultRepository, root, min_defects: int = 30,
                    exclude_insert_only: bool = True) -> None:
    """Write ``repo`` in the canonical layout; the target directory is replaced atomically."""
    root = Path(root)
    manifest = CorpusManifest(
        schema_version=SCHEMA_VERSION,
        projects=[(p.project_id, [v.version_id for v in p.versions]) for p in repo.projects],
        min_defects_per_project=min_defects,
        exclude_insert_only=exclude_insert_only,
    )
    for p in repo.projects:
        _check_id(p.project_id, "project id")
    root.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{root.name}.", dir=root.parent))
    try:
        _write_text(tmp / "manifest.json", manifest.to_json())
        for p in repo.projects:
            for v in p.versions:
                vdir = tmp / p.project_id / v.version_id
                vdir.mkdir(parents=True)
                for name, text in version_files(v).items():
                    _write_text(vdir / name, text)
        if root.exists():
            shutil.rmtree(root)
        os.replace(tmp, root)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- priority model and ranked list files ------------------------------------


def format_model(model: PriorityModel) -> str:
    lines = [MODEL_HEADER]
    for label in sorted(model.weights):
        sel = 1 if model.selected.get(label, False) else 0
        lines.append(f"{label}\t{model.weights[label]!r}\t{sel}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> PriorityModel:
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise IngestError(f"priority file must start with {MODEL_HEADER!r}",
                          code="ingest.model-format")
    weights, selected = {}, {}
    for n, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[2] not in ("0", "1"):
            raise IngestError(f"priority file line {n}: {line!r}", code="ingest.model-format")
        try:
            w = float(parts[1])
        except ValueError as exc:
            raise IngestError(f"priority file line {n}: bad weight", code="ingest.model-format") from exc
        if not w >= 0:
            raise IngestError(f"priority file line {n}: negative weight", code="ingest.model-format")
        weights[parts[0]] = w
        selected[parts[0]] = parts[2] == "1"
    return PriorityModel(weights=weights, selected=selected)


def save_model(model: PriorityModel, path) -> None:
    atomic_write_text(path, format_model(model))


def load_model(path) -> PriorityModel:
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{path} not found", code=MISSING_FILE)
    return parse_model(path.read_text(encoding="utf-8"))


def _fmt_rank(r: float) -> str:
    return str(int(r)) if float(r).is_integer() else repr(r)


def format_ranked(entries: list[RankedEntry]) -> str:
    lines = [RANKED_HEADER]
    for e in entries:
        lines.append(
            f"{_fmt_rank(e.rank)}\t{e.statement_id}\t{e.type_label}\t"
            f"{e.base_score!r}\t{e.priority!r}\t{e.adjusted_score!r}"
        )
    return "\n".join(lines) + "\n"


def parse_ranked(text: str) -> list[RankedEntry]:
    lines = text.splitlines()
    if not lines or lines[0] != RANKED_HEADER:
        raise IngestError("ranked list has a bad header", code="ingest.ranked-format")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        r, sid, label, base, prio, adj = line.split("\t")
        out.append(RankedEntry(sid, label, float(base), float(prio), float(adj), float(r)))
    return out
