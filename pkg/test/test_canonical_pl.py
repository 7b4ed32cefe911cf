from fractions import Fraction

import pytest
from loguru import logger
from pinjected import design
from pinjected.test import injected_pytest

from test.covers import fixture_cover, fixture_path
from tropical_vz import load_env_design
from tropical_vz.canonical_pl import (
    enumerate_admissible,
    lambda_at,
    lambda_max,
    lift,
    lifts_at,
    pullback_divisor,
    specialize,
    sprout_markings,
)
from tropical_vz.cones import Cone
from tropical_vz.documents import load_cover_document
from tropical_vz.errors import DomainError
from tropical_vz.fan_engine import align
from tropical_vz.linform import LinForm
from tropical_vz.trop_graph import canonical_divisor, divisor_of

test_design = load_env_design + design(logger=logger)


def _abs_slopes(f) -> dict[str, Fraction]:
    return {e: abs(p.slopes[0]) for e, p in f.source_function.profiles.items()}


@injected_pytest(test_design)
def test_weierstrass_tail_has_three_admissible_functions(logger):
    cover = fixture_cover("weierstrass_tail")
    functions = enumerate_admissible(cover)
    slopes = {f.support_vertex: _abs_slopes(f) for f in functions}
    logger.info(f"slopes by support: {slopes}")
    assert [f.support_vertex for f in functions] == ["O", "Pt", "Pw"]
    assert slopes["O"] == {"eW": 1, "eT": 1, "eTx": 1}
    assert slopes["Pt"] == {"eW": 1, "eT": 2, "eTx": 2}
    assert slopes["Pw"] == {"eW": 3, "eT": 1, "eTx": 1}


@injected_pytest(test_design)
def test_admissible_functions_solve_the_divisor_equation(logger):
    cover = fixture_cover("weierstrass_tail")
    canonical = canonical_divisor(cover.source)
    for f in enumerate_admissible(cover):
        assert f.D.as_dict() == {f.support_vertex: 1}
        assert canonical + divisor_of(f.source_function) == pullback_divisor(cover, f.D)
        assert all(p.slopes[0].denominator == 1 for p in f.source_function.profiles.values())


@injected_pytest(test_design)
def test_heavy_core_has_exactly_one_nontrivial_lift(logger):
    cover = fixture_cover("heavy_core")
    lifts = lifts_at(cover, enumerate_admissible(cover), (1, 2, 3))
    for lifted in lifts:
        logger.info(f"{lifted.label}: {lifted.rule}, zero at {lifted.zero_vertex}, trivial={lifted.is_trivial}")
    nontrivial = [lifted for lifted in lifts if not lifted.is_trivial]
    assert len(lifts) == 4
    assert [lifted.label for lifted in nontrivial] == ["O"]
    assert nontrivial[0].rule == "exception"
    assert nontrivial[0].zero_vertex == "T1"
    assert all(lifted.rule == "default" for lifted in lifts if lifted.is_trivial)


@injected_pytest(test_design)
def test_exception_lift_zeroes_the_third_tail(logger):
    cover = fixture_cover("three_light_tails")
    point = (4, 9, 23)
    lifts = {lifted.label: lifted for lifted in lifts_at(cover, enumerate_admissible(cover), point)}
    assert lifts["P1"].rule == "exception"
    assert lifts["P1"].zero_vertex == "T3"
    assert lifts["P1"].normalized.vertex_values["C"].evaluate(point) == 23
    region_data = lambda_at(cover, point)
    assert region_data.value_at("C") == 23
    assert region_data.active["C"] == "P1"


@injected_pytest(test_design)
def test_lambda_is_the_max_of_the_lifts(logger):
    cover = fixture_cover("weierstrass_tail")
    functions = enumerate_admissible(cover)
    for point, expected in (((8, 1), 2), ((2, 4), 3), ((6, 2), 3)):
        lifts = lifts_at(cover, functions, point)
        region_data = lambda_max(lifts, cover, point)
        logger.info(f"λ(C) at {point} = {region_data.value_at('C')}")
        assert region_data.value_at("C") == expected
        for w in cover.source.vertex_ids:
            assert region_data.value_at(w) >= 0
            for lifted in lifts:
                if lifted.is_usable:
                    assert region_data.value_at(w) >= lifted.normalized.vertex_values[w].evaluate(point)
        assert region_data.pl().inconsistencies(point) == []


@injected_pytest(test_design)
def test_certificates_hold_at_the_sample(logger):
    cover = fixture_cover("elliptic_bridge")
    region_data = lambda_at(cover, (3, 2, 8))
    failing = [c.claim for c in region_data.certificates() if c.form.evaluate(region_data.sample) < 0]
    assert failing == []


@injected_pytest(test_design)
def test_bridge_breaks_at_a_half_integral_position(logger):
    cover = fixture_cover("elliptic_bridge")
    region_data = lambda_at(cover, (3, 2, 8))
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    (bridge_break,) = [b for b in region_data.breaks() if b.edge_id == "m"]
    assert bridge_break.vertex_id == "m.break1"
    assert bridge_break.position == LinForm.of({0: half, 1: -half, 2: quarter})
    level_curve = region_data.subdivided()
    assert level_curve.kind["m.break1"] == "break"
    assert level_curve.values["m.break1"] == LinForm.of({0: half, 1: half, 2: -quarter})


@injected_pytest(test_design)
def test_markings_do_not_change_the_admissible_functions(logger):
    marked = fixture_cover("marked")
    unmarked = load_cover_document(fixture_path("marked")).model_copy(update={"legs": []}).to_cover()
    with_marking = enumerate_admissible(marked)
    assert [f.support_vertex for f in with_marking] == [f.support_vertex for f in enumerate_admissible(unmarked)]
    assert all(f.target_shadow.leg_slopes == {"q": 1} for f in with_marking)


@injected_pytest(test_design)
def test_positive_marking_is_sprouted(logger):
    cover = fixture_cover("marked")
    region_data = lambda_at(cover, (4,))
    assert region_data.value_at("C") == 6
    level_curve = region_data.subdivided()
    assert level_curve.kind["p.sprout"] == "sprout"
    assert level_curve.values["p.sprout"].is_zero
    assert level_curve.curve.edge("p.stalk").length == LinForm.coordinate(0, Fraction(3, 2))
    assert [leg.base for leg in level_curve.curve.legs] == ["p.sprout"]

    sprouting = sprout_markings(cover, region_data)
    assert sprouting.new_vertices == ("p.sprout",)
    assert sprouting.cover.vertex_map["p.sprout"] == "q.sprout"


@injected_pytest(test_design)
def test_default_lift_zeroes_the_highest_weighted_vertex(logger):
    cover = fixture_cover("weierstrass_tail")
    point = (6, 2)
    weighted = [v.id for v in cover.source.vertices if v.weight > 0]
    for f in enumerate_admissible(cover):
        lifted = lift(f, cover, point)
        logger.debug(f"{f.label}: {lifted.rule} at {lifted.zero_vertex}")
        if lifted.rule != "default":
            continue
        values = {w: lifted.normalized.vertex_values[w].evaluate(point) for w in weighted}
        assert values[lifted.zero_vertex] == 0
        assert max(values.values()) == 0


@injected_pytest(test_design)
def test_lambda_max_needs_a_resolved_region(logger):
    cover = fixture_cover("weierstrass_tail")
    functions = enumerate_admissible(cover)
    point = (8, 1)
    lifts = lifts_at(cover, functions, point)
    with pytest.raises(DomainError):
        lambda_max(lifts, cover, point, region=Cone.orthant(2))
    region = align(cover).cone_containing(point).cone
    assert lambda_max(lifts, cover, point, region=region).region == region
    with pytest.raises(DomainError):
        lambda_max(lifts, cover, (1, 8), region=region)


@injected_pytest(test_design)
def test_specialize_takes_faces_only(logger):
    cover = fixture_cover("weierstrass_tail")
    region_data = align(cover).cone_containing((2, 4)).label.region_data
    assert set(region_data.region.rays) == {(0, 1), (2, 3)}
    for rays in ([(1, 2)], [(0, 1), (1, 2)], [(1, 0)]):
        with pytest.raises(DomainError):
            specialize(region_data, rays)
    assert specialize(region_data, [(0, 1)]).face_rays == ((0, 1),)
    assert specialize(region_data, [(2, 3), (0, 1)]).region is None
    with pytest.raises(DomainError):
        specialize(lambda_at(cover, (2, 4)), [(0, 1)])
