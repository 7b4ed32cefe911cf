import json
from fractions import Fraction

import pytest
from loguru import logger
from pinjected import design
from pinjected.test import injected_pytest
from pydantic import ValidationError

from test.covers import fixture_cover, fixture_path
from tropical_vz import load_env_design
from tropical_vz.documents import (
    CoverDocument,
    FanDocument,
    cover_hash,
    load_cover,
    load_cover_document,
    rational_map,
)
from tropical_vz.errors import DocumentError
from tropical_vz.fan_engine import align

test_design = load_env_design + design(logger=logger)

FIXTURES = [
    "weierstrass_tail",
    "heavy_core",
    "three_tails",
    "elliptic_bridge",
    "marked",
    "single_vertex",
    "dumbbell",
]


@injected_pytest(test_design)
def test_cover_survives_a_document_round_trip(logger):
    for name in FIXTURES:
        cover = fixture_cover(name)
        document = CoverDocument.from_cover(cover)
        assert document.to_cover() == cover, name
        reread = CoverDocument.model_validate_json(document.model_dump_json())
        assert reread == document, name


@injected_pytest(test_design)
def test_fixture_file_and_regenerated_document_agree(logger):
    original = load_cover_document(fixture_path("marked"))
    regenerated = CoverDocument.from_cover(original.to_cover())
    assert regenerated.legs == original.legs
    assert [v.id for v in regenerated.target.vertices] == [v.id for v in original.target.vertices]
    assert regenerated.options.coordinates == ["w"]


@injected_pytest(test_design)
def test_unknown_fields_are_rejected(logger):
    data = json.loads(fixture_path("single_vertex").read_text())
    data["vertices"][0]["colour"] = "red"
    with pytest.raises(ValidationError):
        CoverDocument.model_validate(data)


@injected_pytest(test_design)
def test_dangling_ids_are_document_errors(logger):
    data = json.loads(fixture_path("weierstrass_tail").read_text())
    data["edges"][0]["head"] = "nowhere"
    document = CoverDocument.model_validate(data)
    assert document.dangling() == ["edges[eW].head"]
    with pytest.raises(DocumentError) as e:
        document.to_cover("broken.json")
    assert "edges[eW].head" in str(e.value)


@injected_pytest(test_design)
def test_duplicate_ids_are_document_errors(logger):
    data = json.loads(fixture_path("weierstrass_tail").read_text())
    data["vertices"].append(dict(data["vertices"][0]))
    document = CoverDocument.model_validate(data)
    assert document.duplicates() == ["vertices[C]"]
    with pytest.raises(DocumentError):
        document.to_cover()


@injected_pytest(test_design)
def test_unreadable_files_explain_the_fix(logger):
    with pytest.raises(DocumentError) as e:
        load_cover(fixture_path("malformed"))
    logger.info(str(e.value))
    assert "How to fix this issue" in str(e.value)
    with pytest.raises(DocumentError):
        load_cover(fixture_path("does_not_exist"))


@injected_pytest(test_design)
def test_rational_map_writes_p_over_q(logger):
    assert rational_map({"b": Fraction(1, 2), "a": 3}) == {"a": "3/1", "b": "1/2"}


@injected_pytest(test_design)
def test_fan_document_records_provenance_levels_and_active_lifts(logger):
    cover = fixture_cover("weierstrass_tail")
    document = FanDocument.from_fan(align(cover))
    reread = FanDocument.model_validate_json(document.model_dump_json())
    assert reread == document
    assert reread.provenance.input_hash == cover_hash(cover)
    assert len(reread.provenance.input_hash) == 64
    assert reread.provenance.tool_version
    assert cover_hash(fixture_cover("marked")) != cover_hash(cover)
    for cone in reread.cones:
        assert set(cone.active) == set(cover.source.vertex_ids)
        assert set(cone.active) <= set(cone.levels)
        assert max(cone.levels.values()) == cone.level_count
    with pytest.raises(ValidationError):
        FanDocument.model_validate({**json.loads(document.model_dump_json()), "provenance": {}})
