"""Δ, the support of λ, and the Gorenstein fibre it contracts to."""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import networkx as nx
from beartype import beartype
from loguru import logger
from pydantic import BaseModel, ConfigDict

from tropical_vz.canonical_pl import LambdaRegionData, LevelCurve
from tropical_vz.errors import DomainError
from tropical_vz.hyperelliptic_cover import TropCover, conjugate_involution, local_degree
from tropical_vz.linform import LinForm, format_rational
from tropical_vz.local_algebra import noether_degrees
from tropical_vz.trop_graph import genus_of_subgraph

FiberKind = Literal[
    "Nodal",
    "IsolatedTypeI",
    "IsolatedTypeII",
    "RamphoidalCusp",
    "TailedRibbon",
    "TailedRibbonChain",
    "GenusOneCompound",
    "Unclassified",
]
Attachment = Literal["Weierstrass", "ConjugatePair", "none"]
TopShape = Literal["core", "loop", "dumbbell", "theta"]
ISOLATED_KINDS = ("IsolatedTypeI", "IsolatedTypeII", "RamphoidalCusp")
RIBBON_KINDS = ("TailedRibbon", "TailedRibbonChain")
RIBBON_REDUCED = "R_red"


@dataclass(frozen=True)
class Crossing:
    edge_id: str
    outer: str
    inner: str


@dataclass(frozen=True)
class DeltaData:
    level_curve: LevelCurve
    sample: tuple[Fraction, ...]
    interior: frozenset[str]
    boundary: frozenset[str]
    crossings: tuple[Crossing, ...]
    interior_weight: int
    interior_genus: int
    delta_weight: int
    rho1: LinForm
    rho_max: LinForm
    d1_component: int | None
    special: tuple[str, ...]
    boundary_degree: Mapping[str, Fraction]
    top_shape: TopShape | None
    violations: tuple[str, ...] = ()
    diagnostics: Mapping[str, str] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.interior

    @property
    def delta(self) -> frozenset[str]:
        return self.interior | self.boundary

    @property
    def non_geometric(self) -> bool:
        return self.d1_component == 1

    def value(self, vertex_id: str) -> Fraction:
        return self.level_curve.values[vertex_id].evaluate(self.sample)


def _top_shape(curve, top: set[str]) -> TopShape | None:
    edges = [e for e in curve.edges if e.tail in top and e.head in top]
    loops = [e for e in edges if e.is_loop]
    if len(top) == 1:
        return "loop" if loops else "core"
    if len(top) == 2:
        joining = len(edges) - len(loops)
        if joining == 1:
            return "dumbbell"
        if joining == 3 and not loops:
            return "theta"
    return None


def _canonical_plus_div(lc: LevelCurve, vertex_id: str) -> Fraction:
    v = lc.curve.vertex(vertex_id)
    canonical = 2 * v.genus - 2 + lc.curve.valence(vertex_id)
    return canonical + sum(
        (lc.outgoing(e, vertex_id) for e, _ in lc.curve.edge_ends(vertex_id)), Fraction(0)
    )


def _argmax_form(lc: LevelCurve, ids, sample) -> LinForm:
    ids = sorted(ids)
    if not ids:
        return LinForm.zero()
    best = max(ids, key=lambda v: lc.values[v].evaluate(sample))
    return lc.values[best]


@beartype
def extract_delta(region_data: LambdaRegionData) -> DeltaData:
    """Support of λ with its boundary, weights and the 𝒟₁ data ρ₁, ρ_max."""
    cover = region_data.cover
    lc = region_data.subdivided()
    sample = region_data.sample
    value = {v: form.evaluate(sample) for v, form in lc.values.items()}
    interior = frozenset(v for v, x in value.items() if x > 0)

    crossings = []
    for e in lc.curve.edges:
        for outer, inner in ((e.tail, e.head), (e.head, e.tail)):
            if value[outer] == 0 and inner in interior:
                crossings.append(Crossing(e.id, outer, inner))
    boundary = frozenset(c.outer for c in crossings)
    weight = {v.id: v.weight for v in lc.curve.vertices}
    interior_weight = sum(weight[v] for v in interior)
    delta_weight = interior_weight + sum(weight[v] for v in boundary)
    interior_genus = genus_of_subgraph(lc.curve, interior)

    supporting = [v for v in interior if _canonical_plus_div(lc, v) > 0]
    rho1 = _argmax_form(lc, supporting, sample)
    rho_max = _argmax_form(lc, value, sample)
    diagnostics = {}
    if len({value[v] for v in supporting}) > 1:
        diagnostics["rho1_values"] = ",".join(
            format_rational(x) for x in sorted({value[v] for v in supporting})
        )
    rho1_value = rho1.evaluate(sample)
    d1_component = interior_weight if rho1_value != 0 else None

    originals = {v.id for v in cover.source.vertices}
    boundary_degree = {}
    for v in sorted(boundary & originals):
        vertex = lc.curve.vertex(v)
        into = [c for c in crossings if c.outer == v]
        rise = sum((abs(lc.slopes[c.edge_id]) for c in into), Fraction(0))
        boundary_degree[v] = Fraction(2 * vertex.genus - 2 + len(into), 1) + rise
        boundary_degree[v] /= local_degree(cover, v)
    special = tuple(v for v, d in boundary_degree.items() if d > 0)

    top = {v for v, x in value.items() if x == rho_max.evaluate(sample)} if interior else set()
    shape = _top_shape(lc.curve, top) if interior else None

    violations = []
    if interior:
        positive_boundary = [v for v in sorted(boundary) if weight[v] > 0]
        if not positive_boundary:
            violations.append("boundary-weight: no positive-weight vertex on the boundary of Δ")
        if interior_weight == 0 and len(positive_boundary) == 1:
            v = positive_boundary[0]
            if boundary_degree.get(v) != 1 or weight[v] < 3:
                violations.append(
                    f"unique-boundary-vertex: {v} has D = {boundary_degree.get(v)} and weight {weight[v]}"
                )
        for v in sorted(boundary & originals):
            g = lc.curve.vertex(v).genus
            if g > 0 and not (boundary_degree[v] > 0 and g == 1 and interior_genus == 1):
                violations.append(f"boundary-genus: {v} has genus {g} on the boundary of Δ")
        if interior_weight > 2:
            violations.append(f"interior-weight: w(Δ°) = {interior_weight} exceeds two")
        if delta_weight < 3:
            violations.append(f"delta-weight: w(Δ) = {delta_weight} is below three")
        if rho1_value != 0 and rho1_value == rho_max.evaluate(sample) and interior_genus == 2 and shape is None:
            violations.append("top-shape: the top level of Δ is not a recognised configuration")
    for problem in violations:
        logger.warning(f"{cover.name}: {problem}")

    return DeltaData(
        level_curve=lc,
        sample=sample,
        interior=interior,
        boundary=boundary,
        crossings=tuple(crossings),
        interior_weight=interior_weight,
        interior_genus=interior_genus,
        delta_weight=delta_weight,
        rho1=rho1,
        rho_max=rho_max,
        d1_component=d1_component,
        special=special,
        boundary_degree=boundary_degree,
        top_shape=shape,
        violations=tuple(violations),
        diagnostics=diagnostics,
    )


class FiberClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: FiberKind
    branches: int = 0
    attachment: Attachment = "none"
    tails: tuple[int, ...] = ()
    tail_groups: tuple[str, ...] = ()
    signature: tuple[int, ...] = ()
    description: str = ""
    branch_ids: tuple[str, ...] = ()
    special_branches: tuple[str, ...] = ()
    non_geometric: bool = False
    low_confidence: bool = False
    diagnostics: dict[str, str] = {}

    def render(self) -> str:
        if self.kind in ("IsolatedTypeI", "IsolatedTypeII"):
            return f"{self.kind}(m={self.branches})"
        if self.kind == "TailedRibbon":
            return f"TailedRibbon({','.join(map(str, self.tails))})"
        if self.kind == "TailedRibbonChain":
            return f"TailedRibbonChain({','.join(map(str, self.signature))})"
        if self.kind == "GenusOneCompound":
            return f"GenusOneCompound({self.description})"
        return self.kind


def _components(lc: LevelCurve, interior: frozenset[str]) -> list[set[str]]:
    graph = nx.MultiGraph()
    graph.add_nodes_from(interior)
    for e in lc.curve.edges:
        if e.tail in interior and e.head in interior:
            graph.add_edge(e.tail, e.head)
    return [set(c) for c in nx.connected_components(graph)]


def _is_stable_outer(lc: LevelCurve, vertex_id: str) -> bool:
    kind = lc.kind.get(vertex_id)
    if kind == "sprout":
        return True
    if kind == "break":
        return False
    v = lc.curve.vertex(vertex_id)
    return v.weight > 0 or v.genus > 0 or lc.curve.valence(vertex_id) >= 3


def _tail_key(cover: TropCover, lc: LevelCurve, edge_id: str) -> str:
    origin = lc.edge_origin[edge_id]
    return cover.edge_map.get(origin) or cover.leg_map.get(origin, origin)


def _tails(cover: TropCover, delta: DeltaData, crossings: Sequence[Crossing]) -> tuple[tuple[int, ...], tuple[str, ...]]:
    groups: Counter[str] = Counter()
    for c in crossings:
        key = _tail_key(cover, delta.level_curve, c.edge_id)
        groups[key] += int(_is_stable_outer(delta.level_curve, c.outer))
    ordered = sorted(((k, n) for k, n in groups.items() if n > 0), key=lambda kn: (-kn[1], kn[0]))
    return tuple(n for _, n in ordered), tuple(k for k, _ in ordered)


def _essential(lc: LevelCurve, vertex_id: str) -> bool:
    if lc.kind.get(vertex_id) != "original":
        return False
    v = lc.curve.vertex(vertex_id)
    return v.weight > 0 or v.genus > 0 or lc.curve.valence(vertex_id) >= 3


def _chain_signature(delta: DeltaData, crossings: Sequence[Crossing]) -> tuple[int, ...]:
    """Tails per essential level of Δ°, each tail walked up to its first essential vertex."""
    lc = delta.level_curve
    levels = sorted({delta.value(v) for v in delta.interior if _essential(lc, v)})
    counts = Counter()
    for c in crossings:
        current = c.inner
        while not _essential(lc, current):
            higher = sorted(
                far for e, far in lc.curve.edge_ends(current)
                if far in delta.interior and delta.value(far) > delta.value(current)
            )
            if not higher:
                break
            current = higher[0]
        if delta.value(current) in levels:
            counts[levels.index(delta.value(current))] += 1
    return tuple(counts[k] for k in range(len(levels)))


def _depth_ratio(delta: DeltaData, component: set[str], crossings: Sequence[Crossing], special: set[str]) -> Fraction | None:
    lc = delta.level_curve
    top = [v for v in component if delta.value(v) == delta.rho_max.evaluate(delta.sample)]
    if len(top) != 1:
        return None
    graph = nx.Graph()
    for e in lc.curve.edges:
        if e.tail in delta.delta and e.head in delta.delta and not e.is_loop:
            span = e.length.evaluate(delta.sample)
            if graph.has_edge(e.tail, e.head):
                span = min(span, graph[e.tail][e.head]["span"])
            graph.add_edge(e.tail, e.head, span=span)
    depth = nx.single_source_dijkstra_path_length(graph, top[0], weight="span")
    near = [depth[c.outer] for c in crossings if c.outer in special and c.outer in depth]
    far = [depth[c.outer] for c in crossings if c.outer not in special and c.outer in depth]
    if not near or not far:
        return None
    return Fraction(max(near)) / Fraction(min(far))


def _outside_graph(delta: DeltaData) -> nx.MultiGraph:
    lc = delta.level_curve
    graph = nx.MultiGraph()
    graph.add_nodes_from(v.id for v in lc.curve.vertices if v.id not in delta.interior)
    for e in lc.curve.edges:
        if e.tail not in delta.interior and e.head not in delta.interior:
            graph.add_edge(e.tail, e.head)
    return graph


def _contracted_tails(delta: DeltaData) -> set[str]:
    """Vertices outside Δ° on rational trees of weight zero without markings.

    Stabilisation contracts such a tree, so an edge crossing into Δ° from it
    is not a branch of the singularity.
    """
    lc = delta.level_curve
    graph = _outside_graph(delta)
    based = {leg.base for leg in lc.curve.legs}
    found = set()
    for component in nx.connected_components(graph):
        vertices = [lc.curve.vertex(v) for v in component]
        if (
            all(v.weight == 0 and v.genus == 0 for v in vertices)
            and graph.subgraph(component).number_of_edges() == len(component) - 1
            and not component & based
        ):
            found.update(component)
    return found


@beartype
def classify_fiber(delta: DeltaData, cover: TropCover) -> FiberClass:
    if delta.is_empty:
        return FiberClass(kind="Nodal")
    lc = delta.level_curve
    components = [
        (c, genus_of_subgraph(lc.curve, c)) for c in _components(lc, delta.interior)
    ]
    positive = [(c, g) for c, g in components if g > 0]
    if not positive:
        return FiberClass(kind="Nodal")
    if len(positive) > 1:
        return FiberClass(kind="GenusOneCompound", description="two elliptic singularities")

    component, genus = positive[0]
    crossings = [c for c in delta.crossings if c.inner in component]
    contracted = _contracted_tails(delta)
    branches = [c for c in crossings if c.outer not in contracted]
    m = len(branches)
    branch_ids = tuple(c.edge_id for c in branches)
    adjacent = {c.outer for c in crossings}
    special = set(delta.special) & adjacent
    rho1 = delta.rho1.evaluate(delta.sample)
    diagnostics = dict(delta.diagnostics)

    if rho1 == 0:
        if genus == 1:
            genus_one_branch = any(lc.curve.vertex(v).genus == 1 for v in adjacent if lc.kind.get(v) == "original")
            note = " with a genus-one branch" if genus_one_branch else ""
            return FiberClass(
                kind="GenusOneCompound",
                branches=m,
                description=f"elliptic {m}-fold point{note}",
                branch_ids=branch_ids,
                special_branches=tuple(c.edge_id for c in branches if c.outer in special),
            )
        involution = conjugate_involution(cover, check=False)
        special_branches = tuple(c.edge_id for c in branches if c.outer in special)
        ratio = _depth_ratio(delta, component, crossings, special)
        if len(special) == 1 and involution.vertices[next(iter(special))] in special:
            kind = "RamphoidalCusp" if m == 1 else "IsolatedTypeI"
            expected, attachment = Fraction(1, 3), "Weierstrass"
        elif len(special) == 2 and {involution.vertices[v] for v in special} == special:
            kind, expected, attachment = "IsolatedTypeII", Fraction(1, 2), "ConjugatePair"
        else:
            diagnostics["special"] = ",".join(sorted(special))
            return FiberClass(kind="Unclassified", branches=m, branch_ids=branch_ids, diagnostics=diagnostics)
        if ratio is not None:
            diagnostics["depth_ratio"] = format_rational(ratio)
            if ratio != expected:
                diagnostics["depth_ratio_expected"] = format_rational(expected)
        return FiberClass(
            kind=kind,
            branches=m,
            attachment=attachment,
            branch_ids=branch_ids,
            special_branches=special_branches,
            diagnostics=diagnostics,
        )

    tails, groups = _tails(cover, delta, crossings)
    non_geometric = delta.d1_component == 1
    if delta.d1_component == 2 or rho1 == delta.rho_max.evaluate(delta.sample):
        return FiberClass(
            kind="TailedRibbon",
            branches=m,
            tails=tails,
            tail_groups=groups,
            branch_ids=branch_ids,
            non_geometric=non_geometric,
            diagnostics=diagnostics,
        )
    signature = _chain_signature(delta, crossings)
    logger.debug(f"{cover.name}: ribbon chain {signature} at {delta.sample}")
    return FiberClass(
        kind="TailedRibbonChain",
        branches=m,
        tails=tails,
        tail_groups=groups,
        signature=signature,
        branch_ids=branch_ids,
        non_geometric=non_geometric,
        low_confidence=True,
        diagnostics=diagnostics,
    )


def _omega_pattern(fiber: FiberClass) -> dict[str, int]:
    if fiber.kind == "IsolatedTypeII":
        return {b: 1 for b in fiber.special_branches}
    return {b: 2 for b in fiber.special_branches}


@beartype
def h1_vanishing(fiber: FiberClass, multidegree: Mapping[str, int]) -> bool:
    """Whether the vanishing lemma for this fibre type applies to the multidegree."""
    if any(d < 0 for d in multidegree.values()):
        raise DomainError(f"multidegree {dict(multidegree)} is negative on some component")
    if fiber.kind in ISOLATED_KINDS:
        degree = {b: multidegree.get(b, 0) for b in fiber.branch_ids}
        if sum(degree[b] for b in fiber.special_branches) <= 0:
            return False
        if sum(degree.values()) < 2:
            return False
        omega = _omega_pattern(fiber)
        return degree != {b: omega.get(b, 0) for b in fiber.branch_ids}
    if fiber.kind in RIBBON_KINDS:
        positive_tails = sum(1 for g in fiber.tail_groups if multidegree.get(g, 0) > 0)
        if positive_tails >= 2:
            return True
        return multidegree.get(RIBBON_REDUCED, 0) == 1 and positive_tails >= 1
    raise DomainError(f"no vanishing criterion is known for fibres of kind {fiber.kind}")


def _hanging_weight(delta: DeltaData, roots: set[str]) -> int:
    """Weight of the components of ⊏̃ ∖ Δ° that touch ``roots``."""
    lc = delta.level_curve
    total = 0
    for component in nx.connected_components(_outside_graph(delta)):
        if component & roots:
            total += sum(lc.curve.vertex(v).weight for v in component)
    return total


@beartype
def minimal_genus_two_weight(delta: DeltaData, fiber: FiberClass) -> int | None:
    if fiber.kind in ISOLATED_KINDS:
        return delta.interior_weight + _hanging_weight(delta, set(delta.special))
    if fiber.kind in RIBBON_KINDS:
        return delta.interior_weight + _hanging_weight(delta, set(delta.boundary))
    if fiber.kind == "GenusOneCompound":
        lc = delta.level_curve
        genus_one = {
            v for v in delta.boundary
            if lc.kind.get(v) == "original" and lc.curve.vertex(v).genus == 1
        }
        if not genus_one:
            return None
        return delta.interior_weight + _hanging_weight(delta, genus_one)
    return None


@dataclass(frozen=True)
class RibbonNumerics:
    noded_points: int
    ideal_degree: int
    euler_characteristic: int
    omega_on_reduced: int
    omega_on_tail: int


def ribbon_numerics(noded_points: int) -> RibbonNumerics:
    """Ideal O(r−3), χ(O_R) = r − 1 and ω restrictions of an r-tailed ribbon."""
    on_reduced, on_tail = noether_degrees(noded_points)
    return RibbonNumerics(
        noded_points,
        noded_points - 3,
        noded_points - 1,
        on_reduced,
        on_tail,
    )


def chain_euler_characteristics(noded_points: Sequence[int], special: int) -> tuple[int, ...]:
    """χ(O_{R_i}) along a tailed ribbon chain, one lower on the special component."""
    last = len(noded_points) - 1
    values = []
    for i, r in enumerate(noded_points):
        chi = r + 2 if i in (0, last) else r + 4
        values.append(chi - 1 if i == special else chi)
    return tuple(values)
