"""JSON documents for covers and fans.

Ids are explicit everywhere and every rational is written as a "p/q" string,
so a document survives a round trip without losing exactness.
"""

from __future__ import annotations

import hashlib
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Literal

from beartype import beartype
from pydantic import BaseModel, ConfigDict, ValidationError
from returns.result import Failure, Success, safe

from tropical_vz.errors import DocumentError, DomainError, create_document_error_message
from tropical_vz.fan_engine import Fan, FanCone, WallOrigin
from tropical_vz.hyperelliptic_cover import SourceEdgeSpec, TropCover, assemble_cover
from tropical_vz.linform import format_rational
from tropical_vz.trop_graph import Leg, Vertex


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class VertexDoc(_Strict):
    id: str
    genus: int = 0
    weight: int = 0
    target: str


class EdgeDoc(_Strict):
    id: str
    tail: str
    head: str
    target: str
    expansion: Literal[1, 2] = 1


class TargetLegDoc(_Strict):
    id: str
    base: str


class LegDoc(_Strict):
    id: str
    base: str
    target: TargetLegDoc
    label: str | None = None


class TargetVertexDoc(_Strict):
    id: str
    branch_legs: int = 0


class TargetEdgeDoc(_Strict):
    id: str
    tail: str
    head: str


class TargetDoc(_Strict):
    vertices: list[TargetVertexDoc]
    edges: list[TargetEdgeDoc] = []


class OptionsDoc(_Strict):
    coordinates: list[str] | None = None
    fixed_zero: list[str] = []


class CoverDocument(_Strict):
    name: str = "cover"
    vertices: list[VertexDoc]
    edges: list[EdgeDoc] = []
    legs: list[LegDoc] = []
    target: TargetDoc
    options: OptionsDoc = OptionsDoc()

    def dangling(self) -> list[str]:
        source = {v.id for v in self.vertices}
        target = {v.id for v in self.target.vertices}
        target_edges = {e.id for e in self.target.edges}
        found = [f"vertices[{v.id}].target" for v in self.vertices if v.target not in target]
        for e in self.edges:
            found += [f"edges[{e.id}].{end}" for end in ("tail", "head") if getattr(e, end) not in source]
            if e.target not in target_edges:
                found.append(f"edges[{e.id}].target")
        for e in self.target.edges:
            found += [f"target.edges[{e.id}].{end}" for end in ("tail", "head") if getattr(e, end) not in target]
        for leg in self.legs:
            if leg.base not in source:
                found.append(f"legs[{leg.id}].base")
            if leg.target.base not in target:
                found.append(f"legs[{leg.id}].target.base")
        coordinates = self.options.coordinates or sorted(target_edges)
        found += [f"options.fixed_zero[{c}]" for c in self.options.fixed_zero if c not in coordinates]
        return found

    def duplicates(self) -> list[str]:
        found = []
        for section, ids in (
            ("vertices", [v.id for v in self.vertices]),
            ("edges", [e.id for e in self.edges]),
            ("legs", [leg.id for leg in self.legs]),
            ("target.vertices", [v.id for v in self.target.vertices]),
            ("target.edges", [e.id for e in self.target.edges]),
        ):
            found += [f"{section}[{i}]" for i in sorted({i for i in ids if ids.count(i) > 1})]
        return found

    def to_cover(self, path: str = "<document>") -> TropCover:
        problems = self.duplicates() + self.dangling()
        if problems:
            raise DocumentError(
                create_document_error_message(path, "duplicate or unknown ids", problems)
            )
        try:
            cover = assemble_cover(
                source_vertices=[Vertex(v.id, v.genus, v.weight) for v in self.vertices],
                vertex_map={v.id: v.target for v in self.vertices},
                source_edges=[
                    SourceEdgeSpec(e.id, e.tail, e.head, e.target, e.expansion) for e in self.edges
                ],
                target_vertices=[(v.id, v.branch_legs) for v in self.target.vertices],
                target_edges=[(e.id, e.tail, e.head) for e in self.target.edges],
                marking_legs=[
                    (Leg(leg.id, leg.base, "marking", leg.label), Leg(leg.target.id, leg.target.base, "marking", leg.label))
                    for leg in self.legs
                ],
                coordinates=self.options.coordinates,
                name=self.name,
            )
        except DomainError as e:
            raise DocumentError(create_document_error_message(path, str(e))) from e
        zero = frozenset(cover.coordinates.index(c) for c in self.options.fixed_zero)
        return TropCover(
            cover.source,
            cover.target,
            cover.vertex_map,
            cover.edge_map,
            cover.leg_map,
            cover.expansion,
            cover.coordinates,
            zero,
            cover.name,
        )

    @classmethod
    def from_cover(cls, cover: TropCover) -> CoverDocument:
        target_legs = {leg.id: leg for leg in cover.target.legs}
        return cls(
            name=cover.name,
            vertices=[
                VertexDoc(id=v.id, genus=v.genus, weight=v.weight, target=cover.vertex_map[v.id])
                for v in cover.source.vertices
            ],
            edges=[
                EdgeDoc(
                    id=e.id,
                    tail=e.tail,
                    head=e.head,
                    target=cover.edge_map[e.id],
                    expansion=cover.expansion[e.id],
                )
                for e in cover.source.edges
            ],
            legs=[
                LegDoc(
                    id=leg.id,
                    base=leg.base,
                    target=TargetLegDoc(id=cover.leg_map[leg.id], base=target_legs[cover.leg_map[leg.id]].base),
                    label=leg.label,
                )
                for leg in cover.source.legs
            ],
            target=TargetDoc(
                vertices=[
                    TargetVertexDoc(id=v.id, branch_legs=cover.branch_legs_at(v.id))
                    for v in cover.target.vertices
                ],
                edges=[TargetEdgeDoc(id=e.id, tail=e.tail, head=e.head) for e in cover.target.edges],
            ),
            options=OptionsDoc(
                coordinates=list(cover.coordinates),
                fixed_zero=[cover.coordinates[i] for i in sorted(cover.fixed_zero)],
            ),
        )


@safe
def _read_text(path: Path) -> str:
    return path.read_text()


@safe
def _parse_cover(text: str) -> CoverDocument:
    return CoverDocument.model_validate_json(text)


def _locations(error: Exception) -> list[str]:
    if isinstance(error, ValidationError):
        return [
            f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in error.errors()
        ]
    return []


@beartype
def load_cover_document(path: Path | str) -> CoverDocument:
    path = Path(path)
    match _read_text(path).bind(_parse_cover):
        case Success(document):
            return document
        case Failure(error):
            raise DocumentError(
                create_document_error_message(str(path), f"{type(error).__name__}: {error}", _locations(error))
            ) from error


@beartype
def load_cover(path: Path | str) -> TropCover:
    return load_cover_document(path).to_cover(str(path))


class WallDoc(_Strict):
    form: dict[str, str]
    origin: WallOrigin


class ConeDoc(_Strict):
    id: str
    rays: list[list[int]]
    inequalities: list[list[int]]
    simplicial: bool
    smooth: bool
    index: int | None
    kummer: list[str]
    members: list[int] = []
    fiber: str | None = None
    level_count: int | None = None
    levels: dict[str, int] = {}
    active: dict[str, str] = {}
    values: dict[str, dict[str, str]] = {}
    violations: list[str] = []


def tool_version() -> str:
    try:
        return version("tropical-vz")
    except PackageNotFoundError:
        return "0+unknown"


def cover_hash(cover: TropCover) -> str:
    """sha256 of the canonical cover document."""
    text = CoverDocument.from_cover(cover).model_dump_json()
    return hashlib.sha256(text.encode()).hexdigest()


class ProvenanceDoc(_Strict):
    input_hash: str
    tool_version: str


class FanDocument(_Strict):
    cover: str
    provenance: ProvenanceDoc
    coordinates: list[str]
    coarsened: bool
    walls: list[WallDoc]
    cones: list[ConeDoc]
    discrepancies: list[str] = []

    @classmethod
    def from_fan(cls, fan: Fan) -> FanDocument:
        names = list(fan.cover.coordinates)
        return cls(
            cover=fan.cover.name,
            provenance=ProvenanceDoc(input_hash=cover_hash(fan.cover), tool_version=tool_version()),
            coordinates=names,
            coarsened=fan.coarsened,
            walls=[
                WallDoc(form=w.form.to_json(names), origin=w.origin)
                for w in sorted(fan.walls, key=lambda w: (w.origin, w.form.render(names)))
            ],
            cones=[_cone_doc(f"c{i}", c, names) for i, c in enumerate(fan.cones)],
            discrepancies=list(fan.discrepancies),
        )


def _cone_doc(cone_id: str, fan_cone: FanCone, names: list[str]) -> ConeDoc:
    cone, diagnostics, label = fan_cone.cone, fan_cone.diagnostics, fan_cone.label
    extra = {}
    if label is not None:
        values = label.region_data.subdivided().values
        extra = {
            "fiber": label.fiber.render(),
            "level_count": label.ctype.level_count - 1,
            "levels": dict(label.ctype.vertex_level),
            "active": dict(sorted(label.region_data.active.items())),
            "values": {v: values[v].to_json(names) for v in sorted(values)},
            "violations": list(label.delta.violations),
        }
    return ConeDoc(
        id=cone_id,
        rays=[list(r) for r in cone.rays],
        inequalities=[list(a) for a in cone.inequalities],
        simplicial=diagnostics.simplicial,
        smooth=diagnostics.smooth,
        index=diagnostics.index,
        kummer=list(diagnostics.kummer_coords),
        members=list(fan_cone.members),
        **extra,
    )


def rational_map(values: dict[str, object]) -> dict[str, str]:
    return {k: format_rational(v) for k, v in sorted(values.items())}
