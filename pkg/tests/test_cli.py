import hashlib
import json
import shutil
import subprocess
import sys

import pytest

from hybridfl import ingest
from hybridfl.cli import main
from hybridfl.evaluation import awe
from hybridfl.learner import PriorityModel
from hybridfl.ranker import SortingMode, rank


def tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        h.update(str(p.relative_to(root)).encode())
        if p.is_file():
            h.update(p.read_bytes())
    return h.hexdigest()


SYNTH = ["synth", "--seed", "42", "--projects", "3", "--versions", "6",
         "--statements", "60", "--min-defects", "1", "--fault-rate", "0.05"]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "corpus"
    assert main(SYNTH + ["--out", str(root)]) == 0
    return root


def test_synth_twice_identical(corpus, tmp_path):
    other = tmp_path / "again"
    assert main(SYNTH + ["--out", str(other)]) == 0
    assert tree_digest(corpus) == tree_digest(other)


def test_synth_refuses_nonempty_out(corpus):
    assert main(SYNTH + ["--out", str(corpus)]) == 2


def test_validate(corpus, capsys):
    assert main(["validate", "--corpus", str(corpus)]) == 0
    assert "3 projects, 18 versions loaded" in capsys.readouterr().out


def test_validate_reports_data_errors(corpus, tmp_path, capsys):
    broken = tmp_path / "broken"
    shutil.copytree(corpus, broken)
    (broken / "proj01" / "v001" / "coverage.csv").write_text("test_id,statement_id\nt001,zz\n")
    assert main(["validate", "--corpus", str(broken)]) == 1
    assert ingest.REFERENTIAL in capsys.readouterr().out


def test_eval_reduction_row(corpus, tmp_path, capsys):
    out = tmp_path / "eval"
    before = tree_digest(corpus)
    rc = main(["eval", "--corpus", str(corpus), "--formula", "ochiai", "--mode", "hybrid",
               "--jobs", "1", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    lines = text.strip().splitlines()
    assert lines[0].split("\t")[-1] == "Overall"
    assert lines[-1].startswith("Relative Reduction (1-y/x)")
    summary = json.loads((out / "summary.json").read_text())
    x, y = summary["ochiai sbfl-only (x)"]["overall"], summary["ochiai hybrid (y)"]["overall"]
    assert lines[-1].split("\t")[-1] == f"{100 * (1 - y / x):.1f}%"
    assert (out / "per_type.tsv").is_file()
    assert sorted(p.name for p in (out / "models").iterdir()) == ["proj01.tsv", "proj02.tsv", "proj03.tsv"]
    assert tree_digest(corpus) == before


def test_eval_equals_learn_holdout_then_rank(corpus, tmp_path):
    out = tmp_path / "eval"
    assert main(["eval", "--corpus", str(corpus), "--jobs", "1", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    want = summary["ochiai hybrid (y)"]["per_project"]["proj02"]

    model_path = tmp_path / "m.tsv"
    assert main(["learn", "--corpus", str(corpus), "--holdout", "proj02", "--out", str(model_path)]) == 0
    ranked = tmp_path / "ranked"
    assert main(["rank", "--corpus", str(corpus), "--model", str(model_path),
                 "--project", "proj02", "--out", str(ranked)]) == 0
    repo = ingest.load_repository(corpus)
    total = 0.0
    for v in repo.project("proj02").versions:
        entries = ingest.parse_ranked((ranked / "proj02" / f"{v.version_id}.tsv").read_text())
        total += awe(entries, v.fault_labels)
    assert total == want


def test_rank_with_identity_model_equals_sbfl_only(corpus, tmp_path):
    model_path = tmp_path / "ones.tsv"
    model_path.write_text(ingest.MODEL_HEADER + "\nIf\t1.0\t0\nExpression\t1.0\t0\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["rank", "--corpus", str(corpus), "--model", str(model_path), "--out", str(a)]) == 0
    assert main(["rank", "--corpus", str(corpus), "--mode", "sbfl-only", "--out", str(b)]) == 0
    for f in a.rglob("*.tsv"):
        ea = ingest.parse_ranked(f.read_text())
        eb = ingest.parse_ranked((b / f.relative_to(a)).read_text())
        assert [(e.statement_id, e.rank) for e in ea] == [(e.statement_id, e.rank) for e in eb]
    repo = ingest.load_repository(corpus)
    v = repo.project("proj01").versions[0]
    direct = rank(v, model=PriorityModel.identity(), mode=SortingMode.SBFL_ONLY)
    assert ingest.parse_ranked((b / "proj01" / "v001.tsv").read_text()) == direct


def test_rank_requires_model_for_hybrid(corpus, tmp_path):
    assert main(["rank", "--corpus", str(corpus), "--out", str(tmp_path / "r")]) == 2


def test_report_types(corpus, capsys):
    assert main(["report-types", "--corpus", str(corpus)]) == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert header == "type\ttotal_suspicious\trp_min\trp_max\trp_avg\trp_median"


@pytest.mark.parametrize("table", ["selection", "aggregation", "sorting", "formulas"])
def test_other_tables(corpus, table, capsys):
    assert main(["eval", "--corpus", str(corpus), "--table", table, "--jobs", "1"]) == 0
    assert capsys.readouterr().out.strip()


def test_missing_corpus_is_data_error(tmp_path, capsys):
    assert main(["validate", "--corpus", str(tmp_path / "nope")]) == 1
    assert ingest.MISSING_FILE in capsys.readouterr().err


def test_learn_single_project_is_error(corpus, tmp_path, capsys):
    rc = main(["learn", "--corpus", str(corpus), "--holdout", "proj01", "--holdout", "proj02",
               "--out", str(tmp_path / "m.tsv")])
    assert rc == 1
    assert "learner.too-few-projects" in capsys.readouterr().err


def test_unknown_flag_exit_code():
    proc = subprocess.run([sys.executable, "-m", "hybridfl", "eval", "--bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_missing_required_flag():
    assert main(["learn", "--out", "x"]) == 2
