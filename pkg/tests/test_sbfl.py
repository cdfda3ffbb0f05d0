import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridfl.model import Tally
from hybridfl.sbfl import DSTAR_CAP, KINDS, Formula, score
from oracles import brute_score

tallies = st.builds(Tally, st.integers(0, 50), st.integers(0, 50),
                    st.integers(0, 50), st.integers(0, 50))


def test_worked_examples():
    assert score(Formula("ochiai"), Tally(1, 0, 0, 5)) == 1.0
    assert score(Formula("ochiai"), Tally(2, 1, 1, 0)) == pytest.approx(2 / 3, rel=1e-15)
    assert score(Formula("tarantula"), Tally(1, 1, 1, 1)) == 0.5
    assert score(Formula("jaccard"), Tally(3, 1, 0, 4)) == 0.75
    assert score(Formula("dstar"), Tally(2, 1, 1, 0)) == 2.0
    assert score(Formula("dstar"), Tally(2, 0, 0, 3)) == DSTAR_CAP


def test_tarantula_without_passed_tests():
    assert score(Formula("tarantula"), Tally(1, 0, 1, 0)) == 1.0


@pytest.mark.parametrize("kind", KINDS)
def test_zero_cf_scores_zero(kind):
    assert score(Formula(kind), Tally(0, 3, 2, 1)) == 0.0
    assert score(Formula(kind), Tally(0, 0, 1, 0)) == 0.0


@settings(max_examples=300, deadline=None)
@given(tallies, st.sampled_from(KINDS))
def test_matches_oracle(t, kind):
    got = score(Formula(kind), t)
    want = brute_score(kind, t.cf, t.cp, t.uf, t.up)
    assert not math.isnan(got)
    if want == 0:
        assert got == 0
    else:
        assert abs(got - want) / abs(want) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(tallies, st.sampled_from(["tarantula", "jaccard", "ochiai", "barinel"]))
def test_bounded_unit_interval(t, kind):
    assert 0.0 <= score(Formula(kind), t) <= 1.0


@settings(max_examples=200, deadline=None)
@given(tallies, st.sampled_from(KINDS))
def test_monotone_in_cf(t, kind):
    # moving one failed test from "not covering" to "covering" never lowers suspicion
    if t.uf == 0:
        return
    f = Formula(kind)
    assert score(f, Tally(t.cf + 1, t.cp, t.uf - 1, t.up)) >= score(f, t) - 1e-15


@settings(max_examples=200, deadline=None)
@given(tallies, st.sampled_from(KINDS))
def test_antitone_in_cp(t, kind):
    if t.up == 0:
        return
    f = Formula(kind)
    assert score(f, Tally(t.cf, t.cp + 1, t.uf, t.up - 1)) <= score(f, t) + 1e-15


@pytest.mark.parametrize("text", ["ochiai", "tarantula", "jaccard", "barinel", "dstar:2", "dstar:3"])
def test_parse_roundtrip(text):
    assert str(Formula.parse(text)) == text


def test_parse_defaults_and_errors():
    assert Formula.parse("dstar") == Formula("dstar", 2.0)
    assert Formula.parse("DStar:2.5").exponent == 2.5
    with pytest.raises(ValueError):
        Formula.parse("nope")
    with pytest.raises(ValueError):
        Formula.parse("ochiai:2")
    with pytest.raises(ValueError):
        Formula("dstar", 0.5)


def test_dstar_exponent():
    assert score(Formula("dstar", 3), Tally(2, 1, 1, 0)) == 4.0


def test_override_hook():
    f = Formula("ochiai", override=lambda t: 7.0 * t.cf)
    assert score(f, Tally(2, 0, 0, 0)) == 14.0
    bad = Formula("ochiai", override=lambda t: float("nan"))
    with pytest.raises(ValueError):
        score(bad, Tally(1, 0, 0, 0))
