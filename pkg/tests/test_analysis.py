from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from easinnova.analysis import (
    InnovationStatement,
    MotivationKind,
    MotivationRecord,
    SolutionRecord,
    StrategyRecord,
    UnknownSolution,
    check_strategy_coverage,
    parse_motivations,
    parse_solutions,
    parse_strategies,
    select_candidate,
    serialize_solutions,
    validate_motivations,
    validate_solutions,
    validate_statement,
)
from easinnova.jsonio import DocumentError
from helpers import PIZZALOVE

TRANSFORMATION = PIZZALOVE / "cim/transformation"


@pytest.fixture(scope="module")
def motivations():
    return parse_motivations(TRANSFORMATION / "motivations.json")


@pytest.fixture(scope="module")
def strategies():
    return parse_strategies(TRANSFORMATION / "strategies.json")


@pytest.fixture(scope="module")
def solutions():
    return parse_solutions(TRANSFORMATION / "solutions.json")


def test_fixture_motivations(motivations):
    assert [(m.label, m.kind) for m in motivations] == [
        ("Problem1", MotivationKind.PROBLEM),
        ("Problem2", MotivationKind.PROBLEM),
        ("Desire1", MotivationKind.DESIRE),
    ]
    assert validate_motivations(motivations) == []


def test_duplicate_label():
    records = [MotivationRecord("Problem1", MotivationKind.PROBLEM, "a"),
               MotivationRecord("Problem1", MotivationKind.PROBLEM, "b")]
    assert [d.code for d in validate_motivations(records)] == ["AN-DUP"]


def test_blank_description():
    records = [MotivationRecord("Desire1", MotivationKind.DESIRE, "   ")]
    assert [d.code for d in validate_motivations(records)] == ["AN-EMPTY"]


def test_unknown_kind_is_a_document_error():
    with pytest.raises(DocumentError):
        parse_motivations({"motivations": [{"label": "X", "kind": "Wish", "description": "d"}]})


def test_fixture_strategies_cover_everything(motivations, strategies):
    assert check_strategy_coverage(motivations, strategies) == []


def test_uncovered_motivation(motivations, strategies):
    remaining = [s for s in strategies if s.motivation_label != "Desire1"]
    (finding,) = check_strategy_coverage(motivations, remaining)
    assert (finding.code, finding.subject.split("#")[1]) == ("STRAT-UNCOVERED", "Desire1")


def test_dangling_strategy(motivations, strategies):
    extra = [*strategies, StrategyRecord("Problem9", "x")]
    assert [d.code for d in check_strategy_coverage(motivations, extra)] == ["STRAT-DANGLING"]


def test_vacuous_coverage():
    assert check_strategy_coverage([], []) == []


LABELS = st.sampled_from(["A", "B", "C", "D", "E"])


@given(st.sets(LABELS), st.lists(LABELS))
def test_coverage_is_a_bipartite_count(labels, targets):
    motivations = [MotivationRecord(x, MotivationKind.PROBLEM, "d") for x in labels]
    strategies = [StrategyRecord(x, "s") for x in targets]
    expected = len(labels - set(targets)) + len(set(targets) - labels)
    assert len(check_strategy_coverage(motivations, strategies)) == expected


def test_fixture_selects_solution2(solutions):
    assert [s.label for s in solutions if s.selected] == ["Solution2"]
    assert not [d for d in validate_solutions(solutions) if d.severity.value == "error"]


def test_select_switches_candidate(solutions):
    switched = select_candidate(solutions, "Solution1")
    assert [s.label for s in switched if s.selected] == ["Solution1"]
    assert select_candidate(switched, "Solution2") == list(solutions)


def test_select_unknown_label(solutions):
    with pytest.raises(UnknownSolution):
        select_candidate(solutions, "SolutionX")


@given(st.lists(LABELS, min_size=1, unique=True), st.data())
def test_selection_keeps_at_most_one_and_is_idempotent(labels, data):
    pool = [SolutionRecord(x, "d", ("p",), ("c",), selected=data.draw(st.booleans())) for x in labels]
    pick = data.draw(st.sampled_from(labels))
    once = select_candidate(pool, pick)
    assert [s.label for s in once if s.selected] == [pick]
    assert select_candidate(once, pick) == once
    assert not [d for d in validate_solutions(once) if d.code == "AN-MULTISELECT"]


def test_solution_checks():
    records = [SolutionRecord("S1", "d", ("p",), (), selected=True),
               SolutionRecord("S2", "", ("p",), ("c",), selected=True)]
    assert sorted(d.code for d in validate_solutions(records)) == ["AN-EMPTY", "AN-MULTISELECT", "AN-ONESIDED"]


def test_statement():
    assert validate_statement(InnovationStatement("Grow the business.")) == []
    assert [d.code for d in validate_statement(InnovationStatement(" "))] == ["AN-EMPTY"]


def test_solutions_round_trip(solutions):
    assert parse_solutions(serialize_solutions(solutions)) == solutions
