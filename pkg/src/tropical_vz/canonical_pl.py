"""Admissible functions, their lifts and the maximum λ = max{0, λ₁, …, λₛ}."""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Literal

import networkx as nx
from beartype import beartype
from loguru import logger

from tropical_vz.cones import Cone
from tropical_vz.errors import DiscrepancyError, DomainError
from tropical_vz.hyperelliptic_cover import (
    TropCover,
    local_degree,
    orbifold_canonical,
    require_valid,
)
from tropical_vz.linform import LinForm, Rational, as_fraction
from tropical_vz.trop_graph import (
    Divisor,
    Edge,
    EdgeBreak,
    EdgeProfile,
    Leg,
    PLFunction,
    TropCurve,
    Vertex,
    bending_locus,
    canonical_divisor,
    divisor_of,
    subdivide_at_breaks,
)

ZERO_LABEL = "0"
LiftRule = Literal[
    "default", "exception", "exception-genus-one", "no-valid-lift", "no-positive-weight"
]


@dataclass(frozen=True)
class AdmissibleFunction:
    support_vertex: str
    target_shadow: PLFunction
    source_function: PLFunction
    D: Divisor

    @property
    def label(self) -> str:
        return self.support_vertex

    def source_slope(self, edge: Edge, from_vertex: str) -> Fraction:
        return self.source_function.outgoing_slope(edge, from_vertex)


def _target_slopes(cover: TropCover, support: str, orbifold: Divisor) -> dict[str, Fraction]:
    """Slope of λ̄_T along each target edge, read from its tail."""
    tree = nx.Graph()
    tree.add_nodes_from(cover.target.vertex_ids)
    for e in cover.target.edges:
        tree.add_edge(e.tail, e.head)
    slopes = {}
    for e in cover.target.edges:
        tree.remove_edge(e.tail, e.head)
        side = nx.node_connected_component(tree, e.tail)
        tree.add_edge(e.tail, e.head)
        excess = sum((int(v == support) - orbifold[v] for v in side), Fraction(0))
        markings = sum(len(cover.target.legs_at(v, "marking")) for v in side)
        slopes[e.id] = excess + markings
    return slopes


def _target_values(cover: TropCover, support: str, slopes: Mapping[str, Fraction]) -> dict[str, LinForm]:
    values = {support: LinForm.zero()}
    frontier = [support]
    while frontier:
        current = frontier.pop()
        for e, far in cover.target.edge_ends(current):
            if far in values:
                continue
            step = slopes[e.id] if current == e.tail else -slopes[e.id]
            values[far] = values[current] + e.length * step
            frontier.append(far)
    return values


def _pullback(cover: TropCover, shadow: PLFunction) -> PLFunction:
    target_edges = {e.id: e for e in cover.target.edges}
    slopes = {}
    for e in cover.source.edges:
        image = target_edges[cover.edge_map[e.id]]
        aligned = cover.vertex_map[e.tail] == image.tail
        slope = shadow.profiles[image.id].slopes[0] * cover.expansion[e.id]
        slopes[e.id] = slope if aligned else -slope
    values = {w: shadow.vertex_values[cover.vertex_map[w]] for w in cover.source.vertex_ids}
    return PLFunction.linear(
        cover.source, values, slopes, {leg.id: 1 for leg in cover.source.legs}
    )


def pullback_divisor(cover: TropCover, divisor: Divisor) -> Divisor:
    return Divisor.of({
        w: local_degree(cover, w) * divisor[cover.vertex_map[w]]
        for w in cover.source.vertex_ids
    })


@beartype
def enumerate_admissible(cover: TropCover) -> list[AdmissibleFunction]:
    require_valid(cover)
    orbifold = orbifold_canonical(cover)
    canonical = canonical_divisor(cover.source)
    found = []
    for support in sorted(cover.target.vertex_ids):
        slopes = _target_slopes(cover, support, orbifold)
        shadow = PLFunction.linear(
            cover.target,
            _target_values(cover, support, slopes),
            slopes,
            {leg.id: 1 for leg in cover.target.legs if leg.kind == "marking"},
        )
        source = _pullback(cover, shadow)
        if any(p.slopes[0].denominator != 1 for p in source.profiles.values()):
            logger.debug(f"{cover.name}: support {support} rejected, non-integral source slopes")
            continue
        D = Divisor.of({support: 1})
        corrected = canonical + divisor_of(source)
        if corrected != pullback_divisor(cover, D):
            raise DiscrepancyError(
                f"{cover.name}: K + div differs from the pullback of D at support {support}"
            )
        found.append(AdmissibleFunction(support, shadow, source, D))
    if not found:
        raise DiscrepancyError(f"{cover.name}: no admissible function found for a valid cover")
    logger.info(f"{cover.name}: {len(found)} admissible functions")
    return found


@dataclass(frozen=True)
class LiftedFunction:
    base: AdmissibleFunction
    normalized: PLFunction
    offset: LinForm
    zero_vertex: str | None
    rule: LiftRule
    is_trivial: bool

    @property
    def label(self) -> str:
        return self.base.label

    @property
    def is_usable(self) -> bool:
        return self.rule != "no-valid-lift"


def _exception_applies(cover: TropCover, f: AdmissibleFunction, vertex_id: str) -> LiftRule | None:
    v = cover.source.vertex(vertex_id)
    supports = cover.vertex_map[vertex_id] == f.support_vertex
    if v.genus == 2 and v.weight <= 2 and supports:
        return "exception"
    if v.genus == 1 and v.weight <= 1:
        return "exception-genus-one"
    if v.genus == 0 and v.weight <= 2 and supports:
        return "exception"
    return None


def _exception_level(cover: TropCover, values: Mapping[str, Fraction]) -> str | None:
    """Highest positive-weight vertex value c with w(>c) ≤ 2 and w(≥c) ≥ 3."""
    weights = {v.id: v.weight for v in cover.source.vertices}
    candidates = sorted(
        (w for w in values if weights[w] > 0), key=lambda w: (-values[w], w)
    )
    for w in candidates:
        c = values[w]
        above = sum(weights[u] for u in values if values[u] > c)
        at_least = sum(weights[u] for u in values if values[u] >= c)
        if above <= 2 and at_least >= 3:
            return w
    return None


def _shift(pl: PLFunction, offset: LinForm) -> PLFunction:
    return replace(pl, vertex_values={k: v - offset for k, v in pl.vertex_values.items()})


@beartype
def lift(f: AdmissibleFunction, cover: TropCover, sample: Sequence[Rational]) -> LiftedFunction:
    """Apply the lifting rule on the alignment region containing ``sample``."""
    forms = f.source_function.vertex_values
    values = {w: forms[w].evaluate(sample) for w in cover.source.vertex_ids}
    positive = sorted(w for w in values if cover.source.vertex(w).weight > 0)
    if not positive:
        top_vertex = max(sorted(values), key=lambda w: values[w])
        normalized = _shift(f.source_function, forms[top_vertex])
        return LiftedFunction(f, normalized, forms[top_vertex], None, "no-positive-weight", True)

    top = max(values[w] for w in positive)
    at_top = [w for w in positive if values[w] == top]
    rule: LiftRule = "default"
    zero_vertex: str | None = at_top[0]
    if len(at_top) == 1:
        special = _exception_applies(cover, f, at_top[0])
        if special is not None:
            rule = special
            zero_vertex = _exception_level(cover, values)
    if zero_vertex is None:
        logger.warning(f"{cover.name}: no valid lift for the function supported at {f.label}")
        top_vertex = max(sorted(values), key=lambda w: values[w])
        normalized = _shift(f.source_function, forms[top_vertex])
        return LiftedFunction(f, normalized, forms[top_vertex], None, "no-valid-lift", True)
    if rule == "exception-genus-one":
        logger.info(f"{cover.name}: genus-one exception clause used for {f.label}")

    offset = forms[zero_vertex]
    normalized = _shift(f.source_function, offset)
    trivial = all(
        normalized.vertex_values[w].evaluate(sample) <= 0 for w in cover.source.vertex_ids
    )
    return LiftedFunction(f, normalized, offset, zero_vertex, rule, trivial)


@dataclass(frozen=True)
class Certificate:
    """A form that must be nonnegative on the region, with what it asserts."""

    form: LinForm
    claim: str


@dataclass(frozen=True)
class LevelCurve:
    """The subdivided curve ⊏̃ with λ at every vertex, markings sprouted."""

    curve: TropCurve
    values: Mapping[str, LinForm]
    slopes: Mapping[str, Fraction]
    edge_origin: Mapping[str, str]
    kind: Mapping[str, Literal["original", "break", "sprout"]]

    def outgoing(self, edge: Edge, vertex_id: str) -> Fraction:
        return self.slopes[edge.id] if vertex_id == edge.tail else -self.slopes[edge.id]


@dataclass(frozen=True)
class Line:
    label: str
    intercept: LinForm
    slope: Fraction


@dataclass(frozen=True)
class LambdaRegionData:
    cover: TropCover
    sample: tuple[Fraction, ...]
    lifts: tuple[LiftedFunction, ...]
    value_forms: Mapping[str, LinForm]
    active: Mapping[str, str]
    profiles: Mapping[str, EdgeProfile]
    region: Cone | None = None
    face_rays: tuple[tuple[int, ...], ...] = ()
    contracted: frozenset[str] = field(default_factory=frozenset)

    def value_at(self, vertex_id: str) -> Fraction:
        return self.value_forms[vertex_id].evaluate(self.sample)

    def pl(self) -> PLFunction:
        legs = {
            leg.id: Fraction(int(self.value_at(leg.base) > 0))
            for leg in self.cover.source.legs
        }
        return PLFunction(self.cover.source, dict(self.value_forms), dict(self.profiles), legs)

    def breaks(self) -> list[EdgeBreak]:
        live = replace(
            self.pl(),
            carrier=replace(
                self.cover.source,
                edges=tuple(e for e in self.cover.source.edges if e.id not in self.contracted),
            ),
        )
        return bending_locus(live, self.sample)

    def lines_on(self, edge: Edge) -> list[Line]:
        return _lines_on(self.lifts, edge)

    def certificates(self) -> list[Certificate]:
        found = []
        for w in self.cover.source.vertex_ids:
            found.append(Certificate(self.value_forms[w], f"λ({w}) ≥ 0"))
            for lifted in self.lifts:
                if lifted.is_usable:
                    gap = self.value_forms[w] - lifted.normalized.vertex_values[w]
                    found.append(Certificate(gap, f"λ({w}) ≥ λ_{lifted.label}({w})"))
        for e in self.cover.source.edges:
            if e.id in self.contracted:
                continue
            profile = self.profiles[e.id]
            for piece in profile.segment_lengths(e.length):
                found.append(Certificate(piece, f"break order on {e.id}"))
            for k, position in enumerate(profile.positions):
                value = self.value_forms[e.tail] + _prefix_increment(profile, k + 1, e.length)
                for line in self.lines_on(e):
                    gap = value - (line.intercept + position * line.slope)
                    found.append(Certificate(gap, f"λ ≥ λ_{line.label} at {e.id}.break{k + 1}"))
        return found

    def subdivided(self) -> LevelCurve:
        return _level_curve(self)


def _prefix_increment(profile: EdgeProfile, pieces: int, length: LinForm) -> LinForm:
    lengths = profile.segment_lengths(length)
    total = LinForm.zero()
    for s, piece in list(zip(profile.slopes, lengths))[:pieces]:
        total = total + piece * s
    return total


def _lines_on(lifts: Sequence[LiftedFunction], edge: Edge) -> list[Line]:
    lines = [Line(ZERO_LABEL, LinForm.zero(), Fraction(0))]
    seen = {(LinForm.zero(), Fraction(0))}
    for lifted in lifts:
        if not lifted.is_usable:
            continue
        key = (
            lifted.normalized.vertex_values[edge.tail],
            lifted.normalized.profiles[edge.id].slopes[0],
        )
        if key not in seen:
            seen.add(key)
            lines.append(Line(lifted.label, *key))
    return lines


def _upper_envelope(
    lines: Sequence[Line], length: Fraction, point: Sequence[Fraction]
) -> tuple[list[Line], list[LinForm]]:
    """Active lines and break positions of max(lines) on [0, length] at ``point``."""
    numeric = {line.label: (line.intercept.evaluate(point), line.slope) for line in lines}
    current = max(
        lines, key=lambda line: (numeric[line.label][0], line.slope, -lines.index(line))
    )
    active, positions = [current], []
    x = Fraction(0)
    while True:
        a_cur, s_cur = numeric[current.label]
        best, best_x = None, None
        for line in lines:
            a, s = numeric[line.label]
            if s <= s_cur:
                continue
            crossing = (a_cur - a) / (s - s_cur)
            if crossing <= x:
                continue
            if best_x is None or crossing < best_x or (crossing == best_x and s > best.slope):
                best, best_x = line, crossing
        if best is None or best_x >= length:
            return active, positions
        position = (current.intercept - best.intercept) / (best.slope - current.slope)
        positions.append(position)
        active.append(best)
        current, x = best, best_x


def lambda_comparisons(lifts: Sequence[LiftedFunction], cover: TropCover) -> list[LinForm]:
    """Forms whose signs decide which lift is largest at each vertex."""
    usable = [lifted for lifted in lifts if lifted.is_usable]
    found = []
    for w in cover.source.vertex_ids:
        forms = [lifted.normalized.vertex_values[w] for lifted in usable]
        found.extend(forms)
        found.extend(a - b for a, b in itertools.combinations(forms, 2))
    return found


@beartype
def unresolved_comparisons(
    lifts: Sequence[LiftedFunction], cover: TropCover, region: Cone
) -> list[LinForm]:
    return [form for form in lambda_comparisons(lifts, cover) if region.cuts(form)]


@beartype
def lambda_max(
    lifts: Sequence[LiftedFunction],
    cover: TropCover,
    sample: Sequence[Rational],
    region: Cone | None = None,
) -> LambdaRegionData:
    """Pointwise maximum of 0 and the lifts, resolved on the region of ``sample``.

    A region must be sign-resolved: no comparison between the lifts, or between
    a lift and 0, may change sign inside it.
    """
    point = tuple(as_fraction(x) for x in sample)
    if region is not None:
        if not region.contains(point):
            raise DomainError(f"{point} is not in the region")
        cut = unresolved_comparisons(lifts, cover, region)
        if cut:
            raise DomainError(
                f"{cover.name}: {len(cut)} comparisons between lifts change sign on the region, e.g. {cut[0].render(cover.coordinates)}"
            )
    usable = [lifted for lifted in lifts if lifted.is_usable]
    values, active = {}, {}
    for w in cover.source.vertex_ids:
        best_label, best_form = ZERO_LABEL, LinForm.zero()
        best_value = Fraction(0)
        for lifted in usable:
            form = lifted.normalized.vertex_values[w]
            value = form.evaluate(point)
            if value > best_value:
                best_label, best_form, best_value = lifted.label, form, value
        values[w], active[w] = best_form, best_label

    profiles = {}
    for e in cover.source.edges:
        lines = _lines_on(usable, e)
        length = e.length.evaluate(point)
        chosen, positions = _upper_envelope(lines, length, point)
        profiles[e.id] = EdgeProfile(
            tuple(line.slope for line in chosen),
            tuple(positions),
            tuple(line.label for line in chosen),
        )
    region_data = LambdaRegionData(cover, point, tuple(lifts), values, active, profiles, region)
    problems = region_data.pl().inconsistencies(point)
    if problems:
        raise DiscrepancyError(f"{cover.name}: λ is inconsistent at {point}: {problems}")
    return region_data


def lifts_at(cover: TropCover, functions: Sequence[AdmissibleFunction], sample: Sequence[Rational]) -> list[LiftedFunction]:
    return [lift(f, cover, sample) for f in functions]


@beartype
def lambda_at(cover: TropCover, point: Sequence[Rational]) -> LambdaRegionData:
    functions = enumerate_admissible(cover)
    return lambda_max(lifts_at(cover, functions, point), cover, point)


def _collapse(profile: EdgeProfile, length: LinForm, point: Sequence[Fraction]) -> EdgeProfile:
    """Drop pieces of zero length at ``point`` and merge equal neighbouring slopes."""
    pieces = profile.segment_lengths(length)
    labels = list(profile.active) + [""] * (len(profile.slopes) - len(profile.active))
    slopes, positions, kept = [], [], []
    offset = LinForm.zero()
    for s, piece, label in zip(profile.slopes, pieces, labels):
        if piece.evaluate(point) != 0 and (not slopes or slopes[-1] != s):
            if slopes:
                positions.append(offset)
            slopes.append(s)
            kept.append(label)
        offset = offset + piece
    if not slopes:
        slopes, kept = [profile.slopes[0]], labels[:1]
    return EdgeProfile(tuple(slopes), tuple(positions), tuple(kept))


@beartype
def specialize(region_data: LambdaRegionData, face_rays: Sequence[Sequence[int]]) -> LambdaRegionData:
    """Restrict λ to a face of its region, collapsing pieces of length zero."""
    rays = tuple(tuple(int(x) for x in r) for r in face_rays)
    cone = region_data.region
    if cone is None:
        raise DomainError("λ was resolved at a point, not on a region with faces")
    if not cone.is_face(rays):
        raise DomainError(f"{list(rays)} are not the rays of a face of the region")
    dim = region_data.cover.dim
    point = tuple(Fraction(sum(r[i] for r in rays)) for i in range(dim))
    contracted = frozenset(
        e.id for e in region_data.cover.source.edges if e.length.evaluate(point) == 0
    )
    profiles = {
        e.id: region_data.profiles[e.id]
        if e.id in contracted
        else _collapse(region_data.profiles[e.id], e.length, point)
        for e in region_data.cover.source.edges
    }
    return replace(
        region_data,
        sample=point,
        profiles=profiles,
        region=None,
        face_rays=rays,
        contracted=contracted,
    )


def agree_on_face(a: LambdaRegionData, b: LambdaRegionData, rays: Sequence[Sequence[int]]) -> bool:
    """Whether two region data describe the same λ on the cone spanned by ``rays``."""

    def same(x: LinForm, y: LinForm) -> bool:
        return all(x.evaluate(r) == y.evaluate(r) for r in rays)

    for w in a.cover.source.vertex_ids:
        if not same(a.value_forms[w], b.value_forms[w]):
            return False
    for e in a.cover.source.edges:
        if e.length.evaluate(a.sample) == 0:
            continue
        pa = _collapse(a.profiles[e.id], e.length, a.sample)
        pb = _collapse(b.profiles[e.id], e.length, b.sample)
        if pa.slopes != pb.slopes:
            return False
        if not all(same(x, y) for x, y in zip(pa.positions, pb.positions)):
            return False
    return True


def _level_curve(region_data: LambdaRegionData) -> LevelCurve:
    source = region_data.cover.source
    breaks = region_data.breaks()
    subdivided = subdivide_at_breaks(source, breaks)
    values = dict(region_data.value_forms)
    kind = {w: "original" for w in source.vertex_ids}
    for b in breaks:
        e = source.edge(b.edge_id)
        profile = region_data.profiles[e.id]
        k = list(profile.positions).index(b.position)
        values[b.vertex_id] = values[e.tail] + _prefix_increment(profile, k + 1, e.length)
        kind[b.vertex_id] = "break"
    slopes = {}
    for piece in subdivided.curve.edges:
        origin = subdivided.edge_origin[piece.id]
        if origin in region_data.contracted:
            slopes[piece.id] = Fraction(0)
            continue
        pieces = _distinct_slopes(region_data.profiles[origin])
        index = 0 if piece.id == origin else int(piece.id.rsplit(".", 1)[1]) - 1
        slopes[piece.id] = pieces[index]

    vertices = list(subdivided.curve.vertices)
    edges = list(subdivided.curve.edges)
    legs = []
    origin_map = dict(subdivided.edge_origin)
    for leg in source.legs:
        height = values[leg.base]
        if height.evaluate(region_data.sample) <= 0:
            legs.append(leg)
            continue
        sprout = f"{leg.id}.sprout"
        stalk = Edge(f"{leg.id}.stalk", leg.base, sprout, height)
        vertices.append(Vertex(sprout))
        edges.append(stalk)
        legs.append(Leg(leg.id, sprout, leg.kind, leg.label))
        values[sprout] = LinForm.zero()
        slopes[stalk.id] = Fraction(-1)
        origin_map[stalk.id] = leg.id
        kind[sprout] = "sprout"
    return LevelCurve(
        TropCurve(tuple(vertices), tuple(edges), tuple(legs)),
        values,
        slopes,
        origin_map,
        kind,
    )


def _distinct_slopes(profile: EdgeProfile) -> list[Fraction]:
    merged = []
    for s in profile.slopes:
        if not merged or merged[-1] != s:
            merged.append(s)
    return merged


@dataclass(frozen=True)
class Sprouting:
    cover: TropCover
    values: Mapping[str, LinForm]
    new_vertices: tuple[str, ...]


@beartype
def sprout_markings(cover: TropCover, region_data: LambdaRegionData) -> Sprouting:
    """Blow up every marking whose base vertex has λ > 0.

    The result is a prestable record of the sprouted curves and is not
    re-validated: sprouted vertices carry two special points.
    """
    values = dict(region_data.value_forms)
    s_vertices, s_edges, s_legs = list(cover.source.vertices), list(cover.source.edges), []
    t_vertices, t_edges = list(cover.target.vertices), list(cover.target.edges)
    t_legs = list(cover.target.legs)
    vertex_map, edge_map, expansion = dict(cover.vertex_map), dict(cover.edge_map), dict(cover.expansion)
    fresh = []
    sprouted_targets: set[str] = set()
    for leg in cover.source.legs:
        height = values[leg.base]
        if height.evaluate(region_data.sample) <= 0:
            s_legs.append(leg)
            continue
        target_leg = cover.leg_map[leg.id]
        sprout, t_sprout = f"{leg.id}.sprout", f"{target_leg}.sprout"
        s_vertices.append(Vertex(sprout))
        s_edges.append(Edge(f"{leg.id}.stalk", leg.base, sprout, height))
        s_legs.append(Leg(leg.id, sprout, leg.kind, leg.label))
        vertex_map[sprout] = t_sprout
        edge_map[f"{leg.id}.stalk"] = f"{target_leg}.stalk"
        expansion[f"{leg.id}.stalk"] = 1
        values[sprout] = LinForm.zero()
        fresh.append(sprout)
        if target_leg not in sprouted_targets:
            sprouted_targets.add(target_leg)
            base = next(t for t in t_legs if t.id == target_leg).base
            t_vertices.append(Vertex(t_sprout))
            t_edges.append(Edge(f"{target_leg}.stalk", base, t_sprout, height))
            t_legs = [Leg(t.id, t_sprout, t.kind, t.label) if t.id == target_leg else t for t in t_legs]
    sprouted = replace(
        cover,
        source=TropCurve(tuple(s_vertices), tuple(s_edges), tuple(s_legs)),
        target=TropCurve(tuple(t_vertices), tuple(t_edges), tuple(t_legs)),
        vertex_map=vertex_map,
        edge_map=edge_map,
        expansion=expansion,
        name=f"{cover.name}/sprouted",
    )
    return Sprouting(sprouted, values, tuple(fresh))
