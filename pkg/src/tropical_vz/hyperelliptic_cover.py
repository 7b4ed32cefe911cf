"""Tropical weighted hyperelliptic admissible covers of genus two.

Base coordinates are the lengths of the target edges. A source edge has the
length of its image divided by its expansion, so the base lattice, which
must contain every source length, has ℓ/2 as a character for each target edge
under an expansion-2 source edge.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
from beartype import beartype
from loguru import logger
from pydantic import BaseModel

from tropical_vz.errors import DomainError
from tropical_vz.linform import LinForm
from tropical_vz.trop_graph import Divisor, Edge, Leg, TropCurve, Vertex

BRANCH_LEG_COUNT = 6
SOURCE_GENUS = 2


@dataclass(frozen=True)
class TropCover:
    source: TropCurve
    target: TropCurve
    vertex_map: Mapping[str, str]
    edge_map: Mapping[str, str]
    leg_map: Mapping[str, str]
    expansion: Mapping[str, int]
    coordinates: tuple[str, ...]
    fixed_zero: frozenset[int] = field(default_factory=frozenset)
    name: str = "cover"

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    @property
    def active_coordinates(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.dim) if i not in self.fixed_zero)

    def preimages(self, target_vertex: str) -> list[str]:
        return sorted(w for w, t in self.vertex_map.items() if t == target_vertex)

    def edge_preimages(self, target_edge: str) -> list[str]:
        return sorted(e for e, t in self.edge_map.items() if t == target_edge)

    def target_expansion(self, target_edge: str) -> int:
        return max((self.expansion[e] for e in self.edge_preimages(target_edge)), default=1)

    def target_weight(self, target_vertex: str) -> int:
        return sum(self.source.vertex(w).weight for w in self.preimages(target_vertex))

    def branch_legs_at(self, target_vertex: str) -> int:
        return len(self.target.legs_at(target_vertex, "branch"))

    @property
    def lattice_scale(self) -> tuple[int, ...]:
        """Expansion over each coordinate: coordinate / scale is a character of the base."""
        return tuple(self.target_expansion(c) for c in self.coordinates)


def local_degree(cover: TropCover, source_vertex: str) -> int:
    """2 when the vertex is the only preimage of its image, else 1."""
    return 2 if len(cover.preimages(cover.vertex_map[source_vertex])) == 1 else 1


@dataclass(frozen=True)
class SourceEdgeSpec:
    id: str
    tail: str
    head: str
    target_edge: str
    expansion: int = 1


@beartype
def assemble_cover(
    source_vertices: Sequence[Vertex],
    vertex_map: Mapping[str, str],
    source_edges: Sequence[SourceEdgeSpec],
    target_vertices: Sequence[tuple[str, int]],
    target_edges: Sequence[tuple[str, str, str]],
    marking_legs: Sequence[tuple[Leg, Leg]] = (),
    coordinates: Sequence[str] | None = None,
    name: str = "cover",
) -> TropCover:
    """Build a cover from combinatorial data, deriving every edge length.

    ``target_vertices`` pairs an id with its branch-leg count; ``marking_legs``
    pairs a source marking leg with the target leg it maps to.
    """
    coords = tuple(coordinates) if coordinates is not None else tuple(
        sorted(t[0] for t in target_edges)
    )
    index = {c: i for i, c in enumerate(coords)}
    missing = {t[0] for t in target_edges} - set(index)
    if missing:
        raise DomainError(f"target edges without a base coordinate: {sorted(missing)}")
    weight_over = Counter()
    for v in source_vertices:
        weight_over[vertex_map[v.id]] += v.weight

    t_edges = tuple(
        Edge(eid, tail, head, LinForm.coordinate(index[eid]))
        for eid, tail, head in target_edges
    )
    t_legs = [
        Leg(f"{tid}.B{k + 1}", tid, "branch")
        for tid, count in target_vertices
        for k in range(count)
    ]
    t_legs.extend({t.id: t for _, t in marking_legs}.values())
    target = TropCurve(
        tuple(Vertex(tid, 0, weight_over[tid]) for tid, _ in target_vertices),
        t_edges,
        tuple(t_legs),
    )
    s_edges = tuple(
        Edge(
            spec.id,
            spec.tail,
            spec.head,
            LinForm.coordinate(index[spec.target_edge], Fraction(1, spec.expansion)),
        )
        for spec in source_edges
    )
    source = TropCurve(tuple(source_vertices), s_edges, tuple(s for s, _ in marking_legs))
    return TropCover(
        source=source,
        target=target,
        vertex_map=dict(vertex_map),
        edge_map={spec.id: spec.target_edge for spec in source_edges},
        leg_map={s.id: t.id for s, t in marking_legs},
        expansion={spec.id: spec.expansion for spec in source_edges},
        coordinates=coords,
        name=name,
    )


class Violation(BaseModel):
    code: str
    location: str
    message: str


class ValidationReport(BaseModel):
    cover: str
    passed: bool
    violations: list[Violation]
    flags: list[Violation]


def _check_maps(cover: TropCover) -> list[Violation]:
    found = []
    target_vertices = set(cover.target.vertex_ids)
    target_edges = {e.id: e for e in cover.target.edges}
    for v in cover.source.vertices:
        if cover.vertex_map.get(v.id) not in target_vertices:
            found.append(Violation(code="map", location=v.id, message="vertex has no image"))
    for e in cover.source.edges:
        image = target_edges.get(cover.edge_map.get(e.id, ""))
        if image is None:
            found.append(Violation(code="map", location=e.id, message="edge has no image"))
            continue
        ends = {cover.vertex_map.get(e.tail), cover.vertex_map.get(e.head)}
        if ends != {image.tail, image.head}:
            found.append(Violation(code="map", location=e.id, message="edge endpoints do not map to the image edge"))
        if cover.expansion.get(e.id) not in (1, 2):
            found.append(Violation(code="expansion", location=e.id, message="expansion must be 1 or 2"))
    return found


def _check_degree(cover: TropCover) -> list[Violation]:
    found = []
    for t in cover.target.edges:
        expansions = sorted(cover.expansion.get(e, 0) for e in cover.edge_preimages(t.id))
        if expansions not in ([1, 1], [2]):
            found.append(Violation(
                code="degree", location=t.id,
                message=f"preimage expansions {expansions} do not add up to degree two",
            ))
    for t in cover.target.vertices:
        count = len(cover.preimages(t.id))
        if count not in (1, 2):
            found.append(Violation(
                code="degree", location=t.id, message=f"{count} preimages, expected 1 or 2"
            ))
    return found


def _check_harmonicity(cover: TropCover) -> list[Violation]:
    found = []
    for w in cover.source.vertices:
        image = cover.vertex_map.get(w.id)
        if image is None or len(cover.preimages(image)) not in (1, 2):
            continue
        degree = local_degree(cover, w.id)
        seen = Counter()
        for e, _ in cover.source.edge_ends(w.id):
            seen[cover.edge_map[e.id]] += cover.expansion.get(e.id, 0)
        for t, _ in cover.target.edge_ends(image):
            if seen[t.id] != degree:
                found.append(Violation(
                    code="harmonicity", location=f"{w.id}/{t.id}",
                    message=f"expansions over {t.id} sum to {seen[t.id]}, local degree is {degree}",
                ))
    return found


def _check_riemann_hurwitz(cover: TropCover) -> list[Violation]:
    found = []
    for w in cover.source.vertices:
        image = cover.vertex_map.get(w.id)
        if image is None:
            continue
        branch = cover.branch_legs_at(image)
        doubled = sum(
            1 for e, _ in cover.source.edge_ends(w.id) if cover.expansion.get(e.id) == 2
        )
        if local_degree(cover, w.id) == 2:
            ok = 2 * w.genus + 2 == branch + doubled
        else:
            ok = w.genus == 0 and doubled == 0 and branch == 0
        if not ok:
            found.append(Violation(
                code="riemann-hurwitz", location=w.id,
                message=f"genus {w.genus} with {branch} branch legs and {doubled} expansion-2 edge-ends",
            ))
    return found


def _check_global(cover: TropCover) -> list[Violation]:
    found = []
    branch = len([leg for leg in cover.target.legs if leg.kind == "branch"])
    if branch != BRANCH_LEG_COUNT:
        found.append(Violation(
            code="branch-leg count", location="target",
            message=f"{branch} branch legs, expected {BRANCH_LEG_COUNT}",
        ))
    if cover.source.vertices and cover.source.is_connected():
        genus = cover.source.total_genus
        if genus != SOURCE_GENUS:
            found.append(Violation(code="genus", location="source", message=f"total genus {genus}"))
    target_graph = cover.target.to_networkx()
    is_tree = bool(cover.target.vertices) and nx.is_connected(target_graph) and cover.target.first_betti() == 0
    if not is_tree or any(v.genus for v in cover.target.vertices):
        found.append(Violation(code="target-tree", location="target", message="target is not a rational tree"))
    return found


def _check_lengths(cover: TropCover) -> list[Violation]:
    found = []
    target_edges = {e.id: e for e in cover.target.edges}
    for e in cover.source.edges:
        image = target_edges.get(cover.edge_map.get(e.id, ""))
        if image is None:
            continue
        if e.length * cover.expansion.get(e.id, 1) != image.length:
            found.append(Violation(code="length", location=e.id, message="length times expansion differs from the image length"))
    return found


def _check_markings(cover: TropCover) -> list[Violation]:
    found = []
    target_legs = {leg.id: leg for leg in cover.target.legs}
    for leg in cover.source.legs:
        image = target_legs.get(cover.leg_map.get(leg.id, ""))
        if leg.kind != "marking" or image is None or image.kind != "marking":
            found.append(Violation(code="marking", location=leg.id, message="source legs must be markings over target markings"))
            continue
        if cover.vertex_map.get(leg.base) != image.base:
            found.append(Violation(code="marking", location=leg.id, message="marking base does not map to the image leg base"))
    for image in (leg for leg in cover.target.legs if leg.kind == "marking"):
        count = sum(1 for t in cover.leg_map.values() if t == image.id)
        if count not in (1, 2):
            found.append(Violation(code="marking", location=image.id, message=f"{count} preimage markings"))
    return found


def _check_stability(cover: TropCover) -> list[Violation]:
    found = []
    for t in cover.target.vertices:
        if cover.target_weight(t.id) == 0 and cover.target.valence(t.id) < 3:
            found.append(Violation(
                code="stability", location=t.id,
                message="weight-zero target vertex with fewer than three special points",
            ))
    return found


def _is_stable(cover: TropCover, vertex_id: str) -> bool:
    v = cover.source.vertex(vertex_id)
    return v.weight > 0 or v.genus > 0 or cover.source.valence(vertex_id) >= 3


def _unstable_conjugates(cover: TropCover) -> list[Violation]:
    flags = []
    involution = conjugate_involution(cover, check=False)
    for v in cover.source.vertices:
        partner = involution.vertices.get(v.id, v.id)
        if not _is_stable(cover, v.id) and partner != v.id and _is_stable(cover, partner):
            flags.append(Violation(
                code="unstable-conjugate", location=v.id,
                message=f"unstable rational component kept as the conjugate of {partner}",
            ))
    return flags


@beartype
def validate(cover: TropCover) -> ValidationReport:
    violations = [
        Violation(code="structure", location=part, message=p)
        for part, curve in (("source", cover.source), ("target", cover.target))
        for p in curve.problems()
    ]
    for check in (
        _check_maps,
        _check_degree,
        _check_harmonicity,
        _check_riemann_hurwitz,
        _check_global,
        _check_lengths,
        _check_markings,
        _check_stability,
    ):
        violations.extend(check(cover))
    flags = _unstable_conjugates(cover) if not violations else []
    logger.debug(f"validated {cover.name}: {len(violations)} violations, {len(flags)} flags")
    return ValidationReport(cover=cover.name, passed=not violations, violations=violations, flags=flags)


def require_valid(cover: TropCover) -> TropCover:
    report = validate(cover)
    if not report.passed:
        listing = "; ".join(f"{v.code} at {v.location}: {v.message}" for v in report.violations)
        raise DomainError(f"cover {cover.name} is not a valid admissible cover: {listing}")
    return cover


@beartype
def orbifold_canonical(cover: TropCover) -> Divisor:
    """val − 2 + ½·#branch legs on the target; val counts edges and markings."""
    values = {}
    for t in cover.target.vertices:
        valence = len(cover.target.edge_ends(t.id)) + len(cover.target.legs_at(t.id, "marking"))
        values[t.id] = valence - 2 + Fraction(cover.branch_legs_at(t.id), 2)
    return Divisor.of(values)


@dataclass(frozen=True)
class Involution:
    vertices: Mapping[str, str]
    edges: Mapping[str, str]
    legs: Mapping[str, str]

    def compose(self, other: Involution) -> Involution:
        return Involution(
            {k: other.vertices[v] for k, v in self.vertices.items()},
            {k: other.edges[v] for k, v in self.edges.items()},
            {k: other.legs[v] for k, v in self.legs.items()},
        )

    def is_identity(self) -> bool:
        return all(
            k == v
            for table in (self.vertices, self.edges, self.legs)
            for k, v in table.items()
        )


def _swap_fibres(objects: Iterable[str], image_of: Mapping[str, str]) -> dict[str, str]:
    fibres: dict[str, list[str]] = {}
    for obj in objects:
        fibres.setdefault(image_of[obj], []).append(obj)
    table = {}
    for members in fibres.values():
        if len(members) == 2:
            a, b = members
            table[a], table[b] = b, a
        else:
            table.update({m: m for m in members})
    return table


@beartype
def conjugate_involution(cover: TropCover, check: bool = True) -> Involution:
    """Deck involution: swaps the two preimages of an object, fixes single ones."""
    if check:
        require_valid(cover)
    return Involution(
        _swap_fibres(cover.source.vertex_ids, cover.vertex_map),
        _swap_fibres((e.id for e in cover.source.edges), cover.edge_map),
        _swap_fibres((leg.id for leg in cover.source.legs), cover.leg_map),
    )


class _Groups:
    def __init__(self, ids: Iterable[str]):
        self.graph = nx.Graph()
        self.graph.add_nodes_from(ids)

    def join(self, a: str, b: str) -> None:
        self.graph.add_edge(a, b)

    def representative(self) -> dict[str, str]:
        table = {}
        for component in nx.connected_components(self.graph):
            name = "+".join(sorted(component))
            table.update({member: name for member in component})
        return table


@beartype
def contract(cover: TropCover, zero_coordinates: Iterable[int]) -> TropCover:
    """Restrict the cover to the face where the given coordinates vanish."""
    zero = frozenset(zero_coordinates) | cover.fixed_zero
    dead_target = {cover.coordinates[i] for i in zero}
    dead_source = {e for e, t in cover.edge_map.items() if t in dead_target}

    source_groups = _Groups(cover.source.vertex_ids)
    for e in cover.source.edges:
        if e.id in dead_source:
            source_groups.join(e.tail, e.head)
    target_groups = _Groups(cover.target.vertex_ids)
    for e in cover.target.edges:
        if e.id in dead_target:
            target_groups.join(e.tail, e.head)
    s_rep, t_rep = source_groups.representative(), target_groups.representative()

    members: dict[str, list[Vertex]] = {}
    for v in cover.source.vertices:
        members.setdefault(s_rep[v.id], []).append(v)
    vertices = []
    for name, group in sorted(members.items()):
        inner = sum(1 for e in cover.source.edges if e.id in dead_source and s_rep[e.tail] == name)
        genus = sum(v.genus for v in group) + inner - (len(group) - 1)
        vertices.append(Vertex(name, genus, sum(v.weight for v in group)))
    t_members: dict[str, list[Vertex]] = {}
    for v in cover.target.vertices:
        t_members.setdefault(t_rep[v.id], []).append(v)
    t_vertices = tuple(
        Vertex(name, 0, sum(v.weight for v in group)) for name, group in sorted(t_members.items())
    )

    def remap(curve: TropCurve, rep: Mapping[str, str], dead: set[str], verts) -> TropCurve:
        return TropCurve(
            tuple(verts),
            tuple(Edge(e.id, rep[e.tail], rep[e.head], e.length) for e in curve.edges if e.id not in dead),
            tuple(Leg(leg.id, rep[leg.base], leg.kind, leg.label) for leg in curve.legs),
        )

    return TropCover(
        source=remap(cover.source, s_rep, dead_source, vertices),
        target=remap(cover.target, t_rep, dead_target, t_vertices),
        vertex_map={s_rep[w]: t_rep[t] for w, t in cover.vertex_map.items()},
        edge_map={e: t for e, t in cover.edge_map.items() if e not in dead_source},
        leg_map=dict(cover.leg_map),
        expansion={e: x for e, x in cover.expansion.items() if e not in dead_source},
        coordinates=cover.coordinates,
        fixed_zero=zero,
        name=f"{cover.name}/contracted",
    )
