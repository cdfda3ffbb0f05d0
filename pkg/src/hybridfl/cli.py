"""``hybridfl`` command-line entry point.

Exit status: 0 on success, 1 on data errors, 2 on usage errors.  Errors are
printed to stderr prefixed with their module-qualified code.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from hybridfl import ingest
from hybridfl.errors import HybridFLError
from hybridfl.evaluation import (
    awe_table,
    breakdown_table,
    per_type_breakdown,
    reduction_table,
    take_one_out,
)
from hybridfl.learner import Aggregation, LearnerConfig, PriorityModel, learn, report_error_proneness
from hybridfl.ranker import SortingMode, TiePolicy, rank
from hybridfl.sbfl import Formula
from hybridfl.synth import SynthConfig, generate

log = logging.getLogger("hybridfl")

TABLES = ("awe", "selection", "aggregation", "sorting", "formulas")
TABLE_FORMULAS = ("ochiai", "jaccard", "dstar:2", "barinel")


class UsageError(Exception):
    pass


def _formula(text):
    try:
        return Formula.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _fraction(text):
    value = float(text)
    if not 0.5 < value <= 1:
        raise argparse.ArgumentTypeError("must lie in (0.5, 1]")
    return value


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return value


def _pairs(text):
    """``If=2.0,Expression=0.5`` -> dict."""
    out = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise argparse.ArgumentTypeError(f"expected LABEL=VALUE, got {item!r}")
        out[key.strip()] = float(value)
    return out


def _default_jobs():
    env = os.environ.get("HYBRIDFL_JOBS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", type=Path, help="corpus root directory")
    common.add_argument("--formula", type=_formula, default=Formula("ochiai"),
                        help="tarantula|jaccard|ochiai|dstar:<exp>|barinel (default ochiai)")
    common.add_argument("--model", type=Path, help="priority model file")
    common.add_argument("--mode", choices=[m.value for m in SortingMode], default="hybrid")
    common.add_argument("--aggregation", choices=[a.value for a in Aggregation], default="avg")
    common.add_argument("--selection", choices=["on", "off"], default="on")
    common.add_argument("--same-side", type=_fraction, default=0.95, dest="same_side")
    common.add_argument("--ties", choices=[t.value for t in TiePolicy], default="mid")
    common.add_argument("--min-defects", type=int, default=None, dest="min_defects",
                        help="minimum defects per project (default: manifest value, 30)")
    common.add_argument("--out", type=Path)
    common.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default $HYBRIDFL_JOBS or CPU count)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hybridfl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", parents=[common], help="learn a priority model")
    p.add_argument("--holdout", action="append", default=[],
                   help="leave this project out of training (repeatable)")

    p = sub.add_parser("rank", parents=[common], help="write ranked lists per version")
    p.add_argument("--project", action="append", default=[], help="only rank these projects")

    p = sub.add_parser("eval", parents=[common], help="take-one-out evaluation")
    p.add_argument("--table", choices=TABLES, default="awe")
    p.add_argument("--quantize", type=int, default=None,
                   help="round base scores to N digits before multi-level comparison")

    p = sub.add_parser("report-types", parents=[common], help="per-type error-proneness table")
    p.add_argument("--min-share", type=float, default=0.01, dest="min_share")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--projects", type=int, default=4)
    p.add_argument("--versions", type=int, default=50)
    p.add_argument("--statements", type=int, default=200)
    p.add_argument("--tests", type=int, default=20)
    p.add_argument("--mix", type=_pairs, default=None, help="type proportions, If=0.33,...")
    p.add_argument("--planted", type=_pairs, default=None, help="planted RP, If=2.0,...")
    p.add_argument("--coverage-density", type=float, default=0.3, dest="coverage_density")
    p.add_argument("--fail-fraction", type=float, default=0.05, dest="fail_fraction")
    p.add_argument("--fault-rate", type=float, default=0.05, dest="fault_rate")
    p.add_argument("--force", action="store_true", help="replace an existing --out directory")

    sub.add_parser("validate", parents=[common], help="load the corpus and report diagnostics")
    return parser


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"{args.command} requires --{name.replace('_', '-')}")


def _learner_config(args) -> LearnerConfig:
    return LearnerConfig(
        same_side_fraction=args.same_side,
        aggregation=Aggregation(args.aggregation),
        selection_enabled=args.selection == "on",
    )


def _load(args):
    _need(args, "corpus")
    result = ingest.load_corpus(args.corpus, min_defects=args.min_defects)
    for d in result.report.diagnostics:
        log.info("%s", d)
    return result


def cmd_learn(args) -> int:
    _need(args, "corpus", "out")
    repo = _load(args).repository
    for project_id in args.holdout:
        repo = repo.without(project_id)
    model = learn(repo, _learner_config(args))
    ingest.save_model(model, args.out)
    for label in sorted(model.weights):
        mark = "*" if model.selected.get(label) else " "
        print(f"{mark} {label}\t{model.weights[label]:.4f}")
    return 0


def cmd_rank(args) -> int:
    _need(args, "corpus", "out")
    mode = SortingMode(args.mode)
    if args.model is not None:
        model = ingest.load_model(args.model)
    elif mode is SortingMode.SBFL_ONLY:
        model = PriorityModel.identity()
    else:
        raise UsageError(f"--mode {mode.value} requires --model")
    repo = _load(args).repository
    wanted = set(args.project)
    n = 0
    for version in repo.versions():
        if wanted and version.project_id not in wanted:
            continue
        entries = rank(version, args.formula, model, mode, TiePolicy(args.ties))
        path = args.out / version.project_id / f"{version.version_id}.tsv"
        ingest.atomic_write_text(path, ingest.format_ranked(entries))
        n += 1
    print(f"wrote {n} ranked lists to {args.out}")
    return 0


def _eval_runs(args, repo):
    """Labelled EvalReports for the requested table, plus (x, y) reduction indices."""
    cfg = _learner_config(args)
    ties = TiePolicy(args.ties)
    mode = SortingMode(args.mode)
    jobs = args.jobs if args.jobs is not None else _default_jobs()

    def run(formula=args.formula, mode=mode, cfg=cfg):
        return take_one_out(repo, formula, mode, cfg, ties, args.quantize, jobs)

    if args.table == "awe":
        base = run(mode=SortingMode.SBFL_ONLY)
        if mode is SortingMode.SBFL_ONLY:
            return [(f"{args.formula} sbfl-only (x)", base)], None
        return [(f"{args.formula} sbfl-only (x)", base), (f"{args.formula} {mode.value} (y)", run())], (0, 1)
    if args.table == "selection":
        on = run(cfg=LearnerConfig(cfg.same_side_fraction, cfg.aggregation, True))
        off = run(cfg=LearnerConfig(cfg.same_side_fraction, cfg.aggregation, False))
        return [("selection enabled (x)", on), ("selection disabled (y)", off)], (0, 1)
    if args.table == "aggregation":
        avg = run(cfg=LearnerConfig(cfg.same_side_fraction, Aggregation.AVERAGE, cfg.selection_enabled))
        med = run(cfg=LearnerConfig(cfg.same_side_fraction, Aggregation.MEDIAN, cfg.selection_enabled))
        return [("average (x)", avg), ("median (y)", med)], (0, 1)
    if args.table == "sorting":
        order = [SortingMode.HYBRID, SortingMode.MULTI_LEVEL_SBFL_FIRST, SortingMode.SBFL_ONLY,
                 SortingMode.MULTI_LEVEL_PRIORITY_FIRST, SortingMode.PRIORITY_ONLY]
        return [(m.value, run(mode=m)) for m in order], None
    raise AssertionError(args.table)


def cmd_eval(args) -> int:
    repo = _load(args).repository
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    outputs = {}
    if args.table == "formulas":
        rows = []
        cfg, ties = _learner_config(args), TiePolicy(args.ties)
        for text in TABLE_FORMULAS:
            f = Formula.parse(text)
            base = take_one_out(repo, f, SortingMode.SBFL_ONLY, cfg, ties, args.quantize, jobs)
            treat = take_one_out(repo, f, SortingMode(args.mode), cfg, ties, args.quantize, jobs)
            rows.append((str(f), base, treat))
        outputs["formulas.tsv"] = reduction_table(rows)
        summary = {label: {"baseline": b.summary(), "treatment": t.summary()}
                   for label, b, t in rows}
    else:
        runs, red = _eval_runs(args, repo)
        outputs[f"{args.table}.tsv"] = awe_table(runs, red)
        summary = {label: report.summary() for label, report in runs}
        if red is not None:
            base, treat = runs[red[0]][1], runs[red[1]][1]
            outputs["per_type.tsv"] = breakdown_table(per_type_breakdown(treat, base))
            for fold, model in treat.models.items():
                outputs[f"models/{fold}.tsv"] = ingest.format_model(model)
    outputs["summary.json"] = json.dumps(summary, indent=2, sort_keys=True) + "\n"

    first = next(iter(outputs))
    sys.stdout.write(outputs[first])
    if args.out is not None:
        for name, text in outputs.items():
            ingest.atomic_write_text(args.out / name, text)
    return 0


def cmd_report_types(args) -> int:
    repo = _load(args).repository
    rows = report_error_proneness(repo, args.min_share)
    lines = ["type\ttotal_suspicious\trp_min\trp_max\trp_avg\trp_median"]
    for r in rows:
        lines.append(f"{r.type_label}\t{r.total_suspicious}\t{r.rp_min:.2f}\t{r.rp_max:.2f}\t"
                     f"{r.rp_avg:.2f}\t{r.rp_median:.2f}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out is not None:
        ingest.atomic_write_text(args.out, text)
    return 0


def cmd_synth(args) -> int:
    _need(args, "out")
    if args.out.exists() and any(args.out.iterdir()) and not args.force:
        raise UsageError(f"{args.out} exists and is not empty (use --force)")
    kwargs = {}
    if args.mix is not None:
        kwargs["type_mix"] = args.mix
    if args.planted is not None:
        kwargs["planted_rp"] = args.planted
    cfg = SynthConfig(
        seed=args.seed,
        n_projects=args.projects,
        versions_per_project=args.versions,
        statements_per_version=args.statements,
        tests_per_version=args.tests,
        coverage_density=args.coverage_density,
        fail_fraction=args.fail_fraction,
        fault_rate=args.fault_rate,
        **kwargs,
    )
    repo = generate(cfg)
    min_defects = 30 if args.min_defects is None else args.min_defects
    ingest.save_repository(repo, args.out, min_defects=min_defects)
    print(f"wrote {len(repo.projects)} projects x {args.versions} versions to {args.out}")
    return 0


def cmd_validate(args) -> int:
    result = _load(args)
    for d in result.report.diagnostics:
        print(d)
    repo = result.repository
    n_versions = sum(len(p.versions) for p in repo.projects)
    print(f"{len(repo.projects)} projects, {n_versions} versions loaded; "
          f"{len(result.report.excluded_versions)} versions and "
          f"{len(result.report.excluded_projects)} projects excluded")
    return 1 if result.report.errors else 0


COMMANDS = {
    "learn": cmd_learn,
    "rank": cmd_rank,
    "eval": cmd_eval,
    "report-types": cmd_report_types,
    "synth": cmd_synth,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hybridfl: usage: {exc}", file=sys.stderr)
        return 2
    except HybridFLError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
