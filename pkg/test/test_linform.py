from fractions import Fraction

import pytest
from loguru import logger
from pinjected import design
from pinjected.test import injected_pytest

from tropical_vz import load_env_design
from tropical_vz.errors import LatticeError
from tropical_vz.linform import LinForm, format_rational, form_sum, parse_rational

test_design = load_env_design + design(logger=logger)

NAMES = ["l1", "l2", "m"]


@injected_pytest(test_design)
def test_quarter_forms_evaluate_exactly(logger):
    bridge_break = LinForm.of({0: Fraction(1, 2), 1: Fraction(-1, 2), 2: Fraction(1, 4)})
    logger.info(f"position {bridge_break.render(NAMES)}")
    assert bridge_break.evaluate((3, 2, 8)) == Fraction(5, 2)
    assert bridge_break.denominator == 4
    assert not (bridge_break * 2).is_integral
    assert (bridge_break * 4).is_integral


@injected_pytest(test_design)
def test_thirds_and_eighths_leave_the_quarter_lattice(logger):
    with pytest.raises(LatticeError):
        LinForm.of({0: Fraction(1, 3)})
    with pytest.raises(LatticeError):
        LinForm.coordinate(2, Fraction(1, 4)) / 2
    with pytest.raises(LatticeError):
        LinForm.coordinate(1) / 3


@injected_pytest(test_design)
def test_arithmetic_drops_cancelled_terms(logger):
    a = LinForm.of({0: 1, 2: -1})
    b = LinForm.of({2: -1})
    assert (a - b) == LinForm.coordinate(0)
    assert (a - a).is_zero
    assert form_sum([a, b, -a]) == b
    assert a.support == frozenset({0, 2})


@injected_pytest(test_design)
def test_render_and_json_use_coordinate_names(logger):
    form = LinForm.of({0: 1, 1: 1, 2: -1})
    assert form.render(NAMES) == "l1 + l2 - m"
    assert form.to_json(NAMES) == {"l1": "1/1", "l2": "1/1", "m": "-1/1"}
    assert LinForm.from_json(form.to_json(NAMES), NAMES) == form
    assert LinForm.zero().render(NAMES) == "0"


@injected_pytest(test_design)
def test_rationals_are_written_as_p_over_q(logger):
    assert format_rational(3) == "3/1"
    assert format_rational(Fraction(-6, 4)) == "-3/2"
    assert parse_rational("7/2") == Fraction(7, 2)
    assert parse_rational("4") == Fraction(4)


@injected_pytest(test_design)
def test_integer_normal_is_primitive(logger):
    form = LinForm.of({0: Fraction(1, 2), 1: Fraction(3, 2)})
    assert form.integer_normal(3) == (1, 3, 0)
