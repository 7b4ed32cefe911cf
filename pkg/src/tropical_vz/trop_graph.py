"""Tropical curves metrised by LinForms, divisors and piecewise-linear functions."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import networkx as nx
from beartype import beartype

from tropical_vz.errors import DomainError
from tropical_vz.linform import LinForm, Rational, as_fraction, form_sum

LegKind = Literal["marking", "branch"]


@dataclass(frozen=True)
class Vertex:
    id: str
    genus: int = 0
    weight: int = 0


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: LinForm

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head

    def other_end(self, vertex_id: str) -> str:
        return self.head if vertex_id == self.tail else self.tail


@dataclass(frozen=True)
class Leg:
    id: str
    base: str
    kind: LegKind = "marking"
    label: str | None = None


@dataclass(frozen=True)
class TropCurve:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...] = ()
    legs: tuple[Leg, ...] = ()

    def vertex(self, vertex_id: str) -> Vertex:
        return self._vertex_index()[vertex_id]

    def edge(self, edge_id: str) -> Edge:
        return self._edge_index()[edge_id]

    def _vertex_index(self) -> dict[str, Vertex]:
        return {v.id: v for v in self.vertices}

    def _edge_index(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @property
    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.vertices)

    def edge_ends(self, vertex_id: str) -> list[tuple[Edge, str]]:
        """Edge-ends at a vertex as (edge, far endpoint); a loop appears twice."""
        ends = []
        for e in self.edges:
            if e.tail == vertex_id:
                ends.append((e, e.head))
            if e.head == vertex_id:
                ends.append((e, e.tail))
        return ends

    def legs_at(self, vertex_id: str, kind: LegKind | None = None) -> list[Leg]:
        return [
            leg
            for leg in self.legs
            if leg.base == vertex_id and (kind is None or leg.kind == kind)
        ]

    def valence(self, vertex_id: str) -> int:
        return len(self.edge_ends(vertex_id)) + len(self.legs_at(vertex_id))

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        for v in self.vertices:
            graph.add_node(v.id, genus=v.genus, weight=v.weight)
        for e in self.edges:
            graph.add_edge(e.tail, e.head, key=e.id, length=e.length)
        return graph

    def is_connected(self) -> bool:
        return bool(self.vertices) and nx.is_connected(self.to_networkx())

    def first_betti(self) -> int:
        graph = self.to_networkx()
        return (
            graph.number_of_edges()
            - graph.number_of_nodes()
            + nx.number_connected_components(graph)
        )

    @property
    def total_genus(self) -> int:
        return self.first_betti() + sum(v.genus for v in self.vertices)

    @property
    def total_weight(self) -> int:
        return sum(v.weight for v in self.vertices)

    def problems(self) -> list[str]:
        found = []
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            found.append("duplicate vertex id")
        for e in self.edges:
            if e.tail not in ids or e.head not in ids:
                found.append(f"edge {e.id} references an unknown vertex")
            if e.length.is_zero:
                found.append(f"edge {e.id} has identically zero length")
        if self.vertices and not self.is_connected():
            found.append("curve is not connected")
        return found


def genus_of_subgraph(curve: TropCurve, vertex_ids: Iterable[str]) -> int:
    """h¹ of the induced subgraph plus the vertex genera inside it."""
    chosen = set(vertex_ids)
    graph = nx.MultiGraph()
    graph.add_nodes_from(chosen)
    for e in curve.edges:
        if e.tail in chosen and e.head in chosen:
            graph.add_edge(e.tail, e.head, key=e.id)
    if not chosen:
        return 0
    betti = (
        graph.number_of_edges()
        - graph.number_of_nodes()
        + nx.number_connected_components(graph)
    )
    return betti + sum(curve.vertex(v).genus for v in chosen)


@dataclass(frozen=True)
class Divisor:
    values: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, Rational]) -> Divisor:
        cleaned = {k: as_fraction(v) for k, v in mapping.items() if v != 0}
        return cls(tuple(sorted(cleaned.items())))

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.values)

    def __getitem__(self, vertex_id: str) -> Fraction:
        return self.as_dict().get(vertex_id, Fraction(0))

    @property
    def degree(self) -> Fraction:
        return sum((v for _, v in self.values), Fraction(0))

    @property
    def is_effective(self) -> bool:
        return all(v >= 0 for _, v in self.values)

    @property
    def is_integral(self) -> bool:
        return all(v.denominator == 1 for _, v in self.values)

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(k for k, v in self.values if v > 0)

    def __add__(self, other: Divisor) -> Divisor:
        merged = self.as_dict()
        for k, v in other.values:
            merged[k] = merged.get(k, Fraction(0)) + v
        return Divisor.of(merged)

    def __sub__(self, other: Divisor) -> Divisor:
        return self + Divisor.of({k: -v for k, v in other.values})


@dataclass(frozen=True)
class EdgeProfile:
    """Slopes of a PL function along an edge, read from its tail.

    ``positions`` are the break distances from the tail, one fewer than
    ``slopes``; ``active`` optionally names the function realising each piece.
    """

    slopes: tuple[Fraction, ...]
    positions: tuple[LinForm, ...] = ()
    active: tuple[str, ...] = ()

    @classmethod
    def linear(cls, slope: Rational, active: str | None = None) -> EdgeProfile:
        return cls((as_fraction(slope),), (), (active,) if active else ())

    def segment_lengths(self, length: LinForm) -> list[LinForm]:
        cuts = [LinForm.zero(), *self.positions, length]
        return [b - a for a, b in zip(cuts, cuts[1:])]

    def increment(self, length: LinForm) -> LinForm:
        pieces = self.segment_lengths(length)
        return form_sum(s * piece for s, piece in zip(self.slopes, pieces))


@dataclass(frozen=True)
class PLFunction:
    carrier: TropCurve
    vertex_values: Mapping[str, LinForm]
    profiles: Mapping[str, EdgeProfile]
    leg_slopes: Mapping[str, Fraction] = field(default_factory=dict)

    @classmethod
    def linear(
        cls,
        carrier: TropCurve,
        values: Mapping[str, LinForm],
        slopes: Mapping[str, Rational],
        leg_slopes: Mapping[str, Rational] | None = None,
    ) -> PLFunction:
        return cls(
            carrier,
            dict(values),
            {k: EdgeProfile.linear(s) for k, s in slopes.items()},
            {k: as_fraction(s) for k, s in (leg_slopes or {}).items()},
        )

    def outgoing_slope(self, edge: Edge, vertex_id: str) -> Fraction:
        profile = self.profiles[edge.id]
        if vertex_id == edge.tail:
            return profile.slopes[0]
        return -profile.slopes[-1]

    def inconsistencies(self, sample: Sequence[Rational] | None = None) -> list[str]:
        """Edges whose slopes do not join the endpoint values, exactly or at ``sample``."""
        found = []
        for e in self.carrier.edges:
            profile = self.profiles.get(e.id)
            if profile is None:
                found.append(f"edge {e.id} has no slope data")
                continue
            expected = self.vertex_values[e.head] - self.vertex_values[e.tail]
            rise = profile.increment(e.length)
            if sample is not None:
                mismatch = rise.evaluate(sample) != expected.evaluate(sample)
            else:
                mismatch = rise != expected
            if mismatch:
                found.append(f"edge {e.id}: slopes do not match endpoint values")
        return found


@beartype
def canonical_divisor(curve: TropCurve) -> Divisor:
    return Divisor.of(
        {v.id: 2 * v.genus - 2 + curve.valence(v.id) for v in curve.vertices}
    )


@beartype
def divisor_of(pl: PLFunction, sample: Sequence[Rational] | None = None) -> Divisor:
    """Sum of outgoing slopes at each vertex; leg slopes are stored inward."""
    problems = pl.inconsistencies(sample)
    if problems:
        raise DomainError("; ".join(problems))
    curve = pl.carrier
    values = {}
    for v in curve.vertices:
        total = sum(
            (pl.outgoing_slope(e, v.id) for e, _ in curve.edge_ends(v.id)),
            Fraction(0),
        )
        total -= sum(
            (pl.leg_slopes.get(leg.id, Fraction(0)) for leg in curve.legs_at(v.id)),
            Fraction(0),
        )
        values[v.id] = total
    return Divisor.of(values)


@dataclass(frozen=True)
class EdgeBreak:
    edge_id: str
    index: int
    position: LinForm
    slope_before: Fraction
    slope_after: Fraction

    @property
    def vertex_id(self) -> str:
        return f"{self.edge_id}.break{self.index}"


def _check_positions(
    edge: Edge, positions: Sequence[LinForm], sample: Sequence[Rational] | None
) -> None:
    cuts = [LinForm.zero(), *positions, edge.length]
    for a, b in zip(cuts, cuts[1:]):
        gap = b - a
        bad = gap.evaluate(sample) <= 0 if sample is not None else gap.is_zero
        if bad:
            raise DomainError(
                f"break positions on edge {edge.id} are not strictly increasing inside the edge"
            )


@beartype
def bending_locus(
    pl: PLFunction, sample: Sequence[Rational] | None = None
) -> list[EdgeBreak]:
    breaks = []
    for e in sorted(pl.carrier.edges, key=lambda e: e.id):
        profile = pl.profiles[e.id]
        _check_positions(e, profile.positions, sample)
        index = 0
        for k, position in enumerate(profile.positions):
            before, after = profile.slopes[k], profile.slopes[k + 1]
            if before == after:
                continue
            index += 1
            breaks.append(EdgeBreak(e.id, index, position, before, after))
    return breaks


@dataclass(frozen=True)
class SubdividedCurve:
    curve: TropCurve
    edge_origin: Mapping[str, str]
    break_vertices: Mapping[str, str]

    def original_edge(self, edge_id: str) -> str:
        return self.edge_origin[edge_id]


@beartype
def subdivide_at_breaks(curve: TropCurve, breaks: Sequence[EdgeBreak]) -> SubdividedCurve:
    by_edge: dict[str, list[EdgeBreak]] = {}
    for b in breaks:
        by_edge.setdefault(b.edge_id, []).append(b)
    vertices = list(curve.vertices)
    edges = []
    origin = {}
    break_vertices = {}
    for e in curve.edges:
        cuts = by_edge.get(e.id, [])
        if not cuts:
            edges.append(e)
            origin[e.id] = e.id
            continue
        ends = [e.tail, *(b.vertex_id for b in cuts), e.head]
        positions = [LinForm.zero(), *(b.position for b in cuts), e.length]
        for b in cuts:
            vertices.append(Vertex(b.vertex_id))
            break_vertices[b.vertex_id] = e.id
        for k in range(len(ends) - 1):
            piece = Edge(f"{e.id}.{k + 1}", ends[k], ends[k + 1], positions[k + 1] - positions[k])
            edges.append(piece)
            origin[piece.id] = e.id
    return SubdividedCurve(
        TropCurve(tuple(vertices), tuple(edges), curve.legs), origin, break_vertices
    )
