import pytest
from loguru import logger
from pinjected import design
from pinjected.test import injected_pytest

from tropical_vz import load_env_design
from tropical_vz.errors import DomainError, TruncationError
from tropical_vz.local_algebra import (
    check_two_delta,
    conductor,
    decomposability_check,
    delta_invariant,
    genus,
    germ_report,
    gorenstein_check,
    load_corpus,
    noether_degrees,
    same_ideal,
    table_germ,
    term,
)

test_design = load_env_design + design(logger=logger)


@injected_pytest(test_design)
def test_corpus_matches_its_expected_invariants(logger):
    entries = load_corpus()
    mismatches = []
    for entry in entries:
        report = germ_report(entry.algebra())
        logger.info(f"{entry.name}: δ={report.delta}, genus={report.genus}, gorenstein={report.gorenstein}")
        mismatches.extend(entry.mismatches(report))
    assert len(entries) >= 20
    assert mismatches == []


@injected_pytest(test_design)
def test_classical_delta_invariants(logger):
    assert delta_invariant(table_germ("typeI", 2)) == 3
    assert delta_invariant(table_germ("A4")) == 2
    assert delta_invariant(table_germ("tacnode")) == 2
    assert delta_invariant(table_germ("node")) == 1


@injected_pytest(test_design)
def test_table_germs_have_the_expected_genus(logger):
    for m in range(1, 6):
        assert genus(table_germ("typeI", m)) == 2, f"typeI m={m}"
    for m in range(2, 6):
        assert genus(table_germ("typeII", m)) == 2, f"typeII m={m}"
    for m in range(1, 6):
        assert genus(table_germ("elliptic", m)) == 1, f"elliptic m={m}"


@injected_pytest(test_design)
def test_tailed_ribbon_conductor(logger):
    for k in range(1, 4):
        algebra = table_germ("ribbon_tail", k)
        expected = [term(0, 1), *(term(i, 2) for i in range(1, k + 1))]
        assert same_ideal(algebra.ambient, conductor(algebra), expected), f"k={k}"
        assert gorenstein_check(algebra)
        assert not decomposability_check(algebra)


@injected_pytest(test_design)
def test_classical_conductors(logger):
    a4 = table_germ("A4")
    assert same_ideal(a4.ambient, conductor(a4), [term(0, 4)])
    node = table_germ("node")
    assert same_ideal(node.ambient, conductor(node), [term(0, 1), term(1, 1)])


@injected_pytest(test_design)
def test_decomposable_germs_other_than_the_node_are_not_gorenstein(logger):
    for kind in ("ribbon_line", "two_cusps"):
        algebra = table_germ(kind)
        assert decomposability_check(algebra), kind
        assert not gorenstein_check(algebra), kind
    node = table_germ("node")
    assert decomposability_check(node)
    assert gorenstein_check(node)


@injected_pytest(test_design)
def test_low_truncation_is_reported(logger):
    with pytest.raises(TruncationError) as e:
        delta_invariant(table_germ("A4", order=3))
    assert "How to fix this issue" in str(e.value)


@injected_pytest(test_design)
def test_unsupported_requests_are_domain_errors(logger):
    with pytest.raises(DomainError):
        table_germ("typeII", 1)
    with pytest.raises(DomainError):
        genus(table_germ("ribbon_tail", 1))
    assert noether_degrees(2) == (1, 0)


@injected_pytest(test_design)
def test_germ_report_through_the_design(tvz_germ_report, logger):
    report = tvz_germ_report("typeI", 2)
    logger.info(f"D5 report: {report.as_row()}")
    assert report.delta == 3
    assert report.genus == 2
    assert report.conductor_length == 6
    assert report.two_delta


@injected_pytest(test_design)
def test_gorenstein_germs_have_conductor_length_two_delta(logger):
    for kind, m in (("node", 1), ("cusp", 1), ("tacnode", 1), ("typeI", 3), ("typeII", 2)):
        assert check_two_delta(table_germ(kind, m)), kind
