import pytest
from loguru import logger
from pinjected import design
from pinjected.test import injected_pytest

from test.covers import fixture_cover
from tropical_vz import load_env_design
from tropical_vz.canonical_pl import lambda_at
from tropical_vz.errors import DomainError
from tropical_vz.fiber_classifier import (
    RIBBON_REDUCED,
    chain_euler_characteristics,
    classify_fiber,
    extract_delta,
    h1_vanishing,
    minimal_genus_two_weight,
    ribbon_numerics,
)

test_design = load_env_design + design(logger=logger)


def _fiber_at(name: str, point):
    cover = fixture_cover(name)
    delta = extract_delta(lambda_at(cover, point))
    return delta, classify_fiber(delta, cover)


@injected_pytest(test_design)
def test_light_tails_give_a_one_tailed_ribbon(logger):
    delta, fiber = _fiber_at("three_light_tails", (4, 9, 23))
    logger.info(f"{fiber.render()} with ρ₁ = {delta.rho1.evaluate(delta.sample)}")
    assert fiber.kind == "TailedRibbon"
    assert fiber.tails == (1,)
    assert delta.rho1.evaluate(delta.sample) == 15
    assert delta.d1_component == 2
    assert not delta.non_geometric
    assert delta.violations == ()


@injected_pytest(test_design)
def test_weierstrass_type_one_fibre(logger):
    delta, fiber = _fiber_at("weierstrass_tail", (2, 4))
    assert fiber.render() == "IsolatedTypeI(m=2)"
    assert not any(b.startswith("eTx") for b in fiber.branch_ids)
    assert delta.rho1.is_zero
    assert delta.d1_component is None
    assert "C" in delta.interior
    assert delta.special == ("W",)
    assert minimal_genus_two_weight(delta, fiber) == 3


@injected_pytest(test_design)
def test_h1_vanishing_for_isolated_fibres(logger):
    _, fiber = _fiber_at("weierstrass_tail", (2, 4))
    assert len(fiber.branch_ids) == 2
    assert not h1_vanishing(fiber, {b: 0 for b in fiber.branch_ids})
    assert h1_vanishing(fiber, {b: 1 for b in fiber.branch_ids})
    with pytest.raises(DomainError):
        h1_vanishing(fiber, {fiber.branch_ids[0]: -1})


@injected_pytest(test_design)
def test_h1_vanishing_for_ribbons(logger):
    _, fiber = _fiber_at("three_light_tails", (4, 9, 23))
    (tail,) = fiber.tail_groups
    assert h1_vanishing(fiber, {RIBBON_REDUCED: 1, tail: 1})
    assert not h1_vanishing(fiber, {RIBBON_REDUCED: 0, tail: 1})


@injected_pytest(test_design)
def test_empty_delta_is_nodal(logger):
    cover = fixture_cover("single_vertex")
    delta = extract_delta(lambda_at(cover, ()))
    assert delta.is_empty
    assert classify_fiber(delta, cover).kind == "Nodal"


@injected_pytest(test_design)
def test_ribbon_numerics(logger):
    numerics = ribbon_numerics(3)
    assert numerics.ideal_degree == 0
    assert numerics.euler_characteristic == 2
    assert (numerics.omega_on_reduced, numerics.omega_on_tail) == (1, 0)
    assert ribbon_numerics(1).ideal_degree == -2
    assert chain_euler_characteristics([2, 2], special=0) == (3, 4)
    assert chain_euler_characteristics([1, 0, 1], special=1) == (3, 3, 3)
