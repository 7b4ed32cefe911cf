from dataclasses import replace
from fractions import Fraction

import pytest
from loguru import logger
from pinjected import design
from pinjected.test import injected_pytest

from test.covers import fixture_cover
from tropical_vz import load_env_design
from tropical_vz.errors import DomainError
from tropical_vz.hyperelliptic_cover import (
    conjugate_involution,
    contract,
    local_degree,
    orbifold_canonical,
    require_valid,
    validate,
)
from tropical_vz.linform import LinForm

test_design = load_env_design + design(logger=logger)

VALID = [
    "weierstrass_tail",
    "heavy_core",
    "three_tails",
    "three_light_tails",
    "elliptic_bridge",
    "marked",
    "single_vertex",
    "dumbbell",
]


@injected_pytest(test_design)
def test_fixture_covers_are_admissible(logger):
    for name in VALID:
        report = validate(fixture_cover(name))
        logger.info(f"{name}: {[v.code for v in report.violations]}")
        assert report.passed, name
        assert report.violations == []


@injected_pytest(test_design)
def test_five_branch_legs_fail_validation(logger):
    cover = fixture_cover("five_branch_legs")
    report = validate(cover)
    codes = {v.code for v in report.violations}
    assert not report.passed
    assert {"branch-leg count", "riemann-hurwitz"} <= codes
    with pytest.raises(DomainError):
        require_valid(cover)


@injected_pytest(test_design)
def test_wrong_expansion_breaks_degree_and_lengths(logger):
    cover = fixture_cover("weierstrass_tail")
    broken = replace(cover, expansion={**cover.expansion, "eW": 1})
    codes = {v.code for v in validate(broken).violations}
    logger.info(f"violations: {codes}")
    assert {"degree", "length", "harmonicity"} <= codes


@injected_pytest(test_design)
def test_conjugate_leaf_of_weight_zero_is_flagged(logger):
    report = validate(fixture_cover("weierstrass_tail"))
    assert [(f.code, f.location) for f in report.flags] == [("unstable-conjugate", "Tx")]


@injected_pytest(test_design)
def test_orbifold_canonical_counts_half_branch_legs(logger):
    cover = fixture_cover("weierstrass_tail")
    orbifold = orbifold_canonical(cover)
    assert orbifold.as_dict() == {"O": Fraction(5, 2), "Pw": Fraction(-1, 2), "Pt": -1}
    assert orbifold.degree == 1


@injected_pytest(test_design)
def test_marking_counts_in_the_orbifold_valence(logger):
    orbifold = orbifold_canonical(fixture_cover("marked"))
    assert orbifold["O"] == Fraction(5, 2)
    assert orbifold.degree == 2


@injected_pytest(test_design)
def test_local_degree_and_involution(logger):
    cover = fixture_cover("weierstrass_tail")
    assert local_degree(cover, "C") == 2
    assert local_degree(cover, "W") == 2
    assert local_degree(cover, "T") == 1
    involution = conjugate_involution(cover)
    assert involution.vertices["T"] == "Tx"
    assert involution.vertices["C"] == "C"
    assert involution.edges["eT"] == "eTx"
    assert involution.compose(involution).is_identity()
    assert not involution.is_identity()


@injected_pytest(test_design)
def test_contracting_the_bridge_merges_the_elliptic_vertices(logger):
    cover = fixture_cover("dumbbell")
    contracted = contract(cover, [0])
    (core,) = contracted.source.vertices
    logger.info(f"contracted to {core}")
    assert core.genus == 2
    assert core.weight == 3
    assert contracted.branch_legs_at(contracted.vertex_map[core.id]) == 6
    assert contracted.fixed_zero == frozenset({0})
    assert validate(contracted).passed


@injected_pytest(test_design)
def test_coordinates_are_target_lengths(logger):
    cover = fixture_cover("elliptic_bridge")
    m = cover.coordinates.index("m")
    assert cover.target.edge("m").length == LinForm.coordinate(m)
    assert cover.source.edge("m").length == LinForm.coordinate(m, Fraction(1, 2))
    assert cover.lattice_scale == (1, 1, 2)
    assert cover.dim == 3
    assert cover.active_coordinates == (0, 1, 2)
