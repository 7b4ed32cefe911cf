from fractions import Fraction

from loguru import logger
from pinjected import design
from pinjected.test import injected_pytest

from test.covers import fixture_cover
from tropical_vz import load_env_design
from tropical_vz.canonical_pl import agree_on_face, specialize
from tropical_vz.cones import Cone
from tropical_vz.documents import FanDocument
from tropical_vz.fan_engine import (
    align,
    alignment_subdivision,
    check_fan,
    classify_ray,
    coarsen,
    cone_diagnostics,
    equidim_reducedness_check,
    generic_d1_points,
    interior_disjointness,
    lattice_surjectivity,
    level_count,
)
from tropical_vz.linform import LinForm

test_design = load_env_design + design(logger=logger)

L1, L2, M = (LinForm.coordinate(i) for i in range(3))


@injected_pytest(test_design)
def test_weierstrass_tail_fan_is_already_coarse(logger):
    cover = fixture_cover("weierstrass_tail")
    fan = align(cover)
    rays = sorted({r for c in fan.cones for r in c.cone.rays})
    logger.info(f"{len(fan.cones)} cones, rays {rays}")
    assert len(fan.cones) == 4
    assert rays == [(0, 1), (1, 0), (2, 1), (2, 3), (4, 1)]
    assert {w.origin for w in fan.walls} == {"alignment"}
    assert check_fan(fan).passed
    assert check_fan(fan).simplicial

    coarse = coarsen(fan)
    assert [c.cone.rays for c in coarse.cones] == [c.cone.rays for c in fan.cones]
    assert coarse.discrepancies == ()
    assert coarse.coarsened


@injected_pytest(test_design)
def test_weierstrass_tail_has_one_kummer_cone(logger):
    fan = align(fixture_cover("weierstrass_tail"))
    singular = [c for c in fan.cones if not c.diagnostics.smooth]
    assert len(singular) == 1
    (cone,) = singular
    logger.info(cone.diagnostics.render())
    assert set(cone.cone.rays) == {(2, 1), (2, 3)}
    assert cone.diagnostics.index == 2
    assert {"ray(2,1)/2", "ray(2,3)/2", "eW.position1"} <= set(cone.diagnostics.kummer_coords)
    assert cone.diagnostics.render().startswith("index 2, Kummer: ")
    assert all(c.diagnostics.index == 1 for c in fan.cones if c is not cone)

    checks = equidim_reducedness_check(fan)
    assert all(check.passed for check in checks)
    kummer = checks[fan.cones.index(cone)]
    assert not kummer.reduced_standard
    assert kummer.standard_index == 2
    assert kummer.reduced_kummer
    assert cone.diagnostics.half_coordinates == (0, 1)


@injected_pytest(test_design)
def test_weierstrass_tail_fibres(logger):
    fan = align(fixture_cover("weierstrass_tail"))
    type_two = fan.cone_containing((8, 1)).label.fiber
    type_one = fan.cone_containing((2, 4)).label.fiber
    chain = fan.cone_containing((6, 2)).label.fiber
    logger.info(f"{type_two.render()}, {type_one.render()}, {chain.render()}")
    assert type_two.render() == "IsolatedTypeII(m=2)"
    assert len(type_two.branch_ids) == 2
    assert type_two.attachment == "ConjugatePair"
    assert type_two.diagnostics["depth_ratio"] == "1/2"
    assert type_one.render() == "IsolatedTypeI(m=2)"
    assert type_one.attachment == "Weierstrass"
    assert type_one.diagnostics["depth_ratio"] == "1/3"
    assert chain.kind == "TailedRibbonChain"


@injected_pytest(test_design)
def test_diagonal_ray_is_a_generic_point_of_the_ribbon_divisor(logger):
    cover = fixture_cover("weierstrass_tail")
    ray = classify_ray(cover, (2, 1))
    assert ray.fiber.kind == "TailedRibbon"
    assert ray.fiber.tails == (1, 1)
    assert ray.level_count == 1
    assert ray.rho1 == 1
    assert (2, 1) in [r.ray for r in generic_d1_points(align(cover))]


@injected_pytest(test_design)
def test_neighbouring_cones_specialize_to_the_same_lambda(logger):
    fan = align(fixture_cover("weierstrass_tail"))
    below = fan.cone_containing((6, 1)).label.region_data
    above = fan.cone_containing((6, 2)).label.region_data
    face = [(4, 1)]
    assert agree_on_face(specialize(below, face), specialize(above, face), face)


@injected_pytest(test_design)
def test_level_count_matches_the_combinatorial_type(logger):
    fan = align(fixture_cover("weierstrass_tail"))
    for fan_cone in fan.cones:
        count = level_count(fan_cone.cone, fan_cone.label.region_data)
        assert count == fan_cone.label.ctype.level_count - 1
        assert count >= 1


@injected_pytest(test_design)
def test_bridge_wall_comes_from_the_bending_stage(logger):
    fan = align(fixture_cover("elliptic_bridge"))
    assert fan.wall_origin(2 * L1 + 2 * L2 - M) == "bending"
    assert fan.wall_origin(2 * L1 - 2 * L2 + M) == "alignment"
    assert fan.wall_origin(2 * L1 - M) == "alignment"
    assert check_fan(fan).passed


@injected_pytest(test_design)
def test_central_bridge_cone_is_smooth_but_its_break_is_half_integral(logger):
    fan = align(fixture_cover("elliptic_bridge"))
    central = fan.cone_containing((3, 2, 8))
    logger.info(f"central cone {central.cone.rays}: {central.diagnostics.render()}")
    assert set(central.cone.rays) == {(1, 0, 2), (1, 1, 2), (1, 1, 4)}
    assert central.diagnostics.smooth
    assert central.diagnostics.kummer_coords == ()
    check = equidim_reducedness_check(fan)[fan.cones.index(central)]
    assert check.equidimensional
    assert check.standard_index == 2
    assert not check.reduced_kummer
    assert not check.passed


@injected_pytest(test_design)
def test_lattice_surjectivity_sees_a_half_integral_break(logger):
    e, l1, l2 = (LinForm.coordinate(i) for i in range(3))
    half = (3 * e + l1 - l2) / 2
    cone = Cone.from_rays(3, [(1, 1, 0), (1, 0, 1), (0, 1, 1)])
    diagnostics = cone_diagnostics(cone)
    assert diagnostics.index == 2
    assert lattice_surjectivity([half, e], cone.coords, None, diagnostics.half_coordinates) == (2, 1)
    orthant = Cone.orthant(3)
    assert lattice_surjectivity([half, e], orthant.coords) == (2, 2)
    assert lattice_surjectivity([e + l1, l2], orthant.coords) == (1, 1)


@injected_pytest(test_design)
def test_three_tails_alignment_is_not_simplicial_but_its_coarsening_is(logger):
    cover = fixture_cover("three_tails")
    aligned = alignment_subdivision(cover)
    assert any(not c.diagnostics.simplicial for c in aligned.cones)
    assert all(c.label is None for c in aligned.cones)

    coarse = coarsen(align(cover))
    logger.info(f"Σ′ has {len(coarse.cones)} cones")
    assert len(coarse.cones) == 9
    assert all(c.diagnostics.simplicial for c in coarse.cones)
    assert coarse.discrepancies == ()
    assert check_fan(coarse).passed
    assert coarse.cone_containing((4, 9, 23)).label.fiber.render() == "IsolatedTypeII(m=3)"
    assert coarse.cone_containing((4, 6, 9)).label.fiber.kind == "TailedRibbonChain"


@injected_pytest(test_design)
def test_fan_document_keeps_the_cone_data(logger):
    fan = align(fixture_cover("weierstrass_tail"))
    document = FanDocument.from_fan(fan)
    assert FanDocument.model_validate_json(document.model_dump_json()) == document
    assert [c.id for c in document.cones] == ["c0", "c1", "c2", "c3"]
    assert sum(1 for c in document.cones if not c.smooth) == 1
    assert {w.origin for w in document.walls} == {"alignment"}
    assert all(c.level_count is not None and c.fiber for c in document.cones)


@injected_pytest(test_design)
async def test_threaded_alignment_matches_the_serial_one(a_tvz_fan, logger):
    cover = fixture_cover("weierstrass_tail")
    threaded = await a_tvz_fan(cover)
    assert FanDocument.from_fan(threaded) == FanDocument.from_fan(align(cover))
    coarse = await a_tvz_fan(cover, coarsen=True)
    assert coarse.coarsened
    assert sum((c.cone.volume() for c in coarse.cones), Fraction(0)) == 1


@injected_pytest(test_design)
def test_cone_diagnostics_flags_half_lengths(logger):
    orthant = Cone.from_rays(2, [(1, 0), (0, 1)])
    assert cone_diagnostics(orthant).render() == "smooth"
    half = cone_diagnostics(orthant, {"e.position1": LinForm.coordinate(0, Fraction(1, 2))})
    assert half.smooth
    assert half.kummer_coords == ()
    scaled = cone_diagnostics(Cone.from_rays(2, [(2, 1), (2, 3)]), scale=(2, 1))
    assert scaled.index == 2
    assert scaled.half_coordinates == (0, 1)
    assert cone_diagnostics(Cone.from_rays(2, [(2, 1), (2, 3)])).render() == "unexpected index 4"

    wide = cone_diagnostics(Cone.from_rays(2, [(1, 1), (1, 3)]))
    assert wide.index == 2
    assert wide.kummer_coords == ("ray(1,1)/2", "ray(1,3)/2")
    assert cone_diagnostics(Cone.from_rays(2, [(1, 0), (1, 3)])).render() == "unexpected index 3"
    assert cone_diagnostics(Cone.from_rays(3, [(1, 0, 0), (0, 1, 0), (1, 0, 1), (0, 1, 1)])).render() == "non-simplicial"


@injected_pytest(test_design)
def test_every_pair_of_cones_is_separated(logger):
    fan = align(fixture_cover("three_tails"))
    certificates = interior_disjointness(fan)
    n = len(fan.cones)
    assert len(certificates) == n * (n - 1) // 2
    assert all(c.holds for c in certificates)
