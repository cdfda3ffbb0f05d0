import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import repo_from_counts, version_from_counts
from hybridfl.errors import ConfigurationError
from hybridfl.learner import (
    Aggregation,
    LearnerConfig,
    PriorityModel,
    aggregate,
    collect_type_stats,
    geometric_mean,
    is_steady,
    learn,
    log_median,
    report_error_proneness,
    required_same_side,
)
from hybridfl.model import FaultRepository, Project
from oracles import direct_median_weight, direct_weight

# Version recipes with a known RP for "If"; "Expression" absorbs the rest.
RP_2_5 = {"If": (4, 2), "Expression": (6, 0)}
RP_2_0 = {"If": (2, 1), "Expression": (2, 0)}
RP_0_5 = {"If": (4, 1), "Expression": (4, 3)}


def rp_of(repo, project, label):
    for row in collect_type_stats(repo):
        if row.project_id == project and row.type_label == label:
            return row.rp
    return None


def test_single_project_stats():
    repo = repo_from_counts({"p": [{"If": (2, 1), "Expression": (2, 0)}]})
    rows = {r.type_label: r for r in collect_type_stats(repo)}
    assert rows["If"].ap_project == 0.25
    assert rows["If"].ap_type == 0.5
    assert rows["Expression"].ap_type == 0.0
    assert rows["If"].rp == 2.0
    assert rows["Expression"].rp == 0.0


def test_absent_type_has_no_row():
    repo = repo_from_counts({"p": [{"If": (2, 1)}]})
    assert {r.type_label for r in collect_type_stats(repo)} == {"If"}


def test_same_statement_in_two_versions_counts_twice():
    v1 = version_from_counts("p", "v1", {"If": (1, 1), "Expression": (1, 0)})
    v2 = version_from_counts("p", "v2", {"If": (1, 0), "Expression": (1, 1)})
    assert "If-0" in v1.spectrum.suspicious_set() and "If-0" in v2.spectrum.suspicious_set()
    repo = FaultRepository((Project("p", (v1, v2)),))
    rows = {r.type_label: r for r in collect_type_stats(repo)}
    assert rows["If"].tss_count == 2
    assert rows["If"].tfs_count == 1


def test_zero_ap_project_excluded_with_warning():
    repo = repo_from_counts({"p": [{"If": (2, 1)}], "q": [{"If": (2, 0)}]})
    warnings = []
    rows = collect_type_stats(repo, warnings)
    assert {r.project_id for r in rows} == {"p"}
    assert warnings and "q" in warnings[0]


def test_learn_steady_positive():
    repo = repo_from_counts({"a": [RP_2_5], "b": [RP_2_5]})
    assert rp_of(repo, "a", "If") == pytest.approx(2.5)
    m = learn(repo, LearnerConfig(same_side_fraction=0.95))
    assert m.selected["If"]
    assert m.weight("If") == pytest.approx(2.5, rel=1e-12)


def test_learn_never_faulty_type_gets_zero():
    recipe = {"If": (2, 1), "ConstructorInvocation": (3, 0)}
    repo = repo_from_counts({p: [recipe] for p in "abc"})
    m = learn(repo)
    assert m.per_type_rp["ConstructorInvocation"] == [("a", 0.0), ("b", 0.0), ("c", 0.0)]
    assert m.selected["ConstructorInvocation"]
    assert m.weight("ConstructorInvocation") == 0.0


def test_learn_mixed_signs_unselected():
    repo = repo_from_counts({"a": [RP_2_0], "b": [RP_0_5]})
    assert rp_of(repo, "a", "If") == pytest.approx(2.0)
    assert rp_of(repo, "b", "If") == pytest.approx(0.5)
    m = learn(repo)
    assert not m.selected["If"]
    assert m.weight("If") == 1.0


def test_lg_spot_values():
    assert round(math.log10(2), 1) == 0.3
    assert round(math.log10(0.5), 1) == -0.3


def test_unknown_type_weight_is_one():
    repo = repo_from_counts({"a": [RP_2_5], "b": [RP_2_5]})
    assert learn(repo).weight("Lambda") == 1.0


def test_too_few_projects():
    repo = repo_from_counts({"a": [RP_2_5]})
    with pytest.raises(ConfigurationError) as e:
        learn(repo)
    assert e.value.code == "learner.too-few-projects"


def test_degenerate_training_raises():
    repo = repo_from_counts({"a": [{"If": (2, 0)}], "b": [{"If": (2, 0)}]})
    with pytest.raises(ConfigurationError) as e:
        learn(repo)
    assert e.value.code == "learner.degenerate"


def test_threshold_six_of_seven():
    rps = [2.0] * 6 + [0.5]
    assert required_same_side(0.95, 7) == 7
    assert not is_steady(rps, 0.95)
    assert is_steady(rps, 0.85)


def test_threshold_float_noise():
    assert required_same_side(0.95, 20) == 19


def test_rp_exactly_one_counts_for_neither_side():
    assert not is_steady([2.0, 1.0], 0.95)
    assert is_steady([0.0, 0.5], 0.95)


def test_selection_disabled_weights_everything():
    repo = repo_from_counts({"a": [RP_2_0], "b": [RP_0_5]})
    m = learn(repo, LearnerConfig(selection_enabled=False))
    assert m.selected["If"]
    assert m.weight("If") == pytest.approx(1.0, rel=1e-12)  # sqrt(2 * 0.5)
    assert m.weight("Expression") != 1.0


def test_min_type_share_drops_rare_types():
    recipe = {"If": (2, 1), "Expression": (96, 1), "Throw": (2, 0)}
    repo = repo_from_counts({"a": [recipe], "b": [recipe]})
    m = learn(repo, LearnerConfig(min_type_share=0.05))
    assert "Throw" not in m.weights and "If" not in m.weights
    assert "Expression" in m.weights


def test_median_aggregation():
    assert log_median([0.5, 2.0, 8.0]) == 2.0
    assert log_median([1.0, 4.0]) == pytest.approx(2.0)
    assert log_median([0.0, 0.0, 3.0]) == 0.0
    assert aggregate([1.0, 4.0], Aggregation.MEDIAN) == pytest.approx(2.0)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=12))
def test_geometric_mean_identity(rps):
    want = direct_weight(rps)
    assert abs(geometric_mean(rps) - want) / want <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(st.just(0.0), st.floats(0.01, 100.0)), min_size=1, max_size=12))
def test_median_matches_oracle(rps):
    want = direct_median_weight(rps)
    got = log_median(rps)
    assert got == pytest.approx(want, rel=1e-12, abs=0)


@given(st.lists(st.floats(0.01, 100.0), min_size=0, max_size=8))
def test_zero_absorbency(rps):
    assert geometric_mean(rps + [0.0]) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=3, max_size=3))
def test_scale_coherence(multipliers):
    # replicating every version of a project k times leaves its RP unchanged
    base = {"a": [RP_2_5], "b": [RP_2_0], "c": [RP_0_5]}
    scaled = {p: v * k for (p, v), k in zip(base.items(), multipliers)}
    m1, m2 = learn(repo_from_counts(base)), learn(repo_from_counts(scaled))
    for label in m1.weights:
        assert m1.weight(label) == pytest.approx(m2.weight(label), rel=1e-12)


def test_deterministic_under_project_order(small_repo):
    projects = list(small_repo.projects)
    random.Random(1).shuffle(projects)
    a = learn(small_repo)
    b = learn(FaultRepository(tuple(projects)))
    assert a.weights == b.weights
    assert a.selected == b.selected


def test_identity_model():
    m = PriorityModel.identity()
    assert m.is_identity()
    assert m.weight("If") == 1.0


def test_config_validation():
    with pytest.raises(ConfigurationError):
        LearnerConfig(same_side_fraction=0.5)
    assert LearnerConfig(aggregation="median").aggregation is Aggregation.MEDIAN


def test_report_error_proneness():
    repo = repo_from_counts({"a": [RP_2_0], "b": [RP_0_5], "c": [RP_2_5]})
    table = {r.type_label: r for r in report_error_proneness(repo)}
    row = table["If"]
    assert row.rp_min == pytest.approx(0.5)
    assert row.rp_max == pytest.approx(2.5)
    assert row.rp_avg == pytest.approx(5.0 / 3)
    assert row.rp_median == pytest.approx(2.0)
    assert row.total_suspicious == 2 + 4 + 4
