"""Fault labels from unified diffs.

A statement is faulty when the fixing patch deletes or modifies it.  In a
unified diff a modified line always appears as a ``-`` line (usually paired
with a ``+`` replacement), so it suffices to collect the old-side line
numbers of every ``-`` line and intersect them with statement ranges.  Pure
``+`` insertions label nothing.
"""

from __future__ import annotations

import bisect
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field

from hybridfl.errors import DiffParseError

logger = logging.getLogger(__name__)

HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


@dataclass
class LineMap:
    """Per-file sorted ``(line_start, line_end, statement_id)`` ranges."""

    ranges: dict[str, list[tuple[int, int, str]]] = field(default_factory=dict)

    def __post_init__(self):
        self.ranges = {f: sorted(rs) for f, rs in self.ranges.items()}

    @classmethod
    def from_rows(cls, rows) -> LineMap:
        ranges = defaultdict(list)
        for file, start, end, stmt_id in rows:
            ranges[file].append((int(start), int(end), stmt_id))
        return cls(dict(ranges))

    def statement_ids(self) -> set[str]:
        return {sid for rs in self.ranges.values() for _, _, sid in rs}

    def lookup(self, file: str, line: int) -> list[str]:
        rs = self.ranges.get(file)
        if not rs:
            return []
        # candidates start at or before `line`
        hi = bisect.bisect_right(rs, (line, float("inf"), ""))
        return [sid for start, end, sid in rs[:hi] if start <= line <= end]


@dataclass(frozen=True)
class FilePatch:
    old_path: str | None
    new_path: str | None
    deleted: tuple[int, ...]
    added: tuple[int, ...]


def _strip_path(raw: str) -> str | None:
    path = raw.split("\t", 1)[0].strip()
    if path == "/dev/null":
        return None
    if path.startswith(("a/", "b/")):
        path = path[2:]
    return path


def parse_unified_diff(text: str) -> list[FilePatch]:
    """Split a unified diff into per-file deleted/added line numbers.

    Deleted lines are numbered on the old side, added lines on the new side.
    Hunk bodies are consumed by their header counts, so content lines that
    happen to start with ``---`` are not mistaken for file headers.
    """
    patches: list[FilePatch] = []
    lines = text.splitlines()
    old_path = new_path = None
    deleted: list[int] = []
    added: list[int] = []
    in_file = False

    def flush():
        if in_file:
            patches.append(FilePatch(old_path, new_path, tuple(deleted), tuple(added)))

    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- ") and i + 1 < len(lines) and lines[i + 1].startswith("+++ "):
            flush()
            old_path, new_path = _strip_path(line[4:]), _strip_path(lines[i + 1][4:])
            deleted, added = [], []
            in_file = True
            i += 2
            continue
        if line.startswith("@@"):
            m = HUNK_RE.match(line)
            if not m:
                raise DiffParseError(f"malformed hunk header {line!r}", i + 1)
            if not in_file:
                raise DiffParseError("hunk before any file header", i + 1)
            old_no, new_no = int(m.group(1)), int(m.group(3))
            old_left = int(m.group(2)) if m.group(2) is not None else 1
            new_left = int(m.group(4)) if m.group(4) is not None else 1
            i += 1
            while (old_left > 0 or new_left > 0) and i < len(lines):
                body = lines[i]
                tag = body[:1]
                if tag == "-":
                    deleted.append(old_no)
                    old_no += 1
                    old_left -= 1
                elif tag == "+":
                    added.append(new_no)
                    new_no += 1
                    new_left -= 1
                elif tag == " " or body == "":
                    old_no += 1
                    new_no += 1
                    old_left -= 1
                    new_left -= 1
                elif tag == "\\":
                    pass
                else:
                    raise DiffParseError(f"unexpected line in hunk body {body!r}", i + 1)
                i += 1
            if old_left > 0 or new_left > 0:
                raise DiffParseError("hunk body shorter than its header", i)
            if old_left < 0 or new_left < 0:
                raise DiffParseError("hunk body longer than its header", i)
            continue
        i += 1
    flush()
    return patches


def is_insert_only(text: str) -> bool:
    """True when the diff deletes (and hence modifies) no line at all."""
    return not any(p.deleted for p in parse_unified_diff(text))


def faults_from_diff(
    diff_text: str, line_map: LineMap, warnings: list[str] | None = None
) -> set[str]:
    faults: set[str] = set()
    for patch in parse_unified_diff(diff_text):
        if not patch.deleted:
            continue
        path = patch.old_path
        for line in patch.deleted:
            hits = line_map.lookup(path, line)
            if not hits:
                msg = f"deleted line {path}:{line} maps to no statement; skipped"
                logger.warning(msg)
                if warnings is not None:
                    warnings.append(msg)
            faults.update(hits)
    return faults
