"""The alignment fan Σ, its bending refinement and the coarsening Σ′.

Cells are always those of a hyperplane arrangement restricted to the base
orthant, so the fan is face to face by construction. Walls come in three
stages: alignment hyperplanes are added up front; then, cell by cell, the
comparisons needed to resolve max{0, λ₁, …, λₛ}; then the bending and level
walls. A stage only runs once the previous one adds nothing.
"""

from __future__ import annotations

import asyncio
import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Literal

import networkx as nx
from beartype import beartype
from loguru import logger

from tropical_vz.canonical_pl import (
    AdmissibleFunction,
    LambdaRegionData,
    enumerate_admissible,
    lambda_at,
    lambda_max,
    lifts_at,
    unresolved_comparisons,
)
from tropical_vz.cones import (
    Cone,
    IntVector,
    lattice_coefficients,
    primitive,
    quotient_order,
    separating_normal,
)
from tropical_vz.errors import DiscrepancyError, DomainError
from tropical_vz.fiber_classifier import DeltaData, FiberClass, classify_fiber, extract_delta
from tropical_vz.hyperelliptic_cover import TropCover
from tropical_vz.linform import LinForm, format_rational

WallOrigin = Literal["alignment", "lambda_max", "bending"]
MAX_ROUNDS = 20


@dataclass(frozen=True)
class Wall:
    form: LinForm
    origin: WallOrigin


def wall_key(form: LinForm, coords: Sequence[int], dim: int) -> IntVector | None:
    """Primitive normal on the active coordinates, first nonzero entry positive."""
    kept = set(coords)
    vector = [form.coefficient(i) if i in kept else Fraction(0) for i in range(dim)]
    if not any(vector):
        return None
    normal = primitive(vector)
    lead = next(x for x in normal if x)
    return normal if lead > 0 else tuple(-x for x in normal)


@dataclass(frozen=True)
class CombinatorialType:
    """λ on ⊏̃ with the metric forgotten: level order and slopes."""

    levels: int
    vertex_level: tuple[tuple[str, int], ...]
    edge_span: tuple[tuple[str, int, int, Fraction], ...]

    @property
    def level_count(self) -> int:
        return self.levels


@beartype
def combinatorial_type(region_data: LambdaRegionData) -> CombinatorialType:
    lc = region_data.subdivided()
    sample = region_data.sample
    value = {v: form.evaluate(sample) for v, form in lc.values.items()}
    distinct = sorted(set(value.values()))
    level = {v: distinct.index(x) for v, x in value.items()}
    spans = []
    for e in sorted(lc.curve.edges, key=lambda e: e.id):
        lo, hi = sorted((level[e.tail], level[e.head]))
        spans.append((e.id, lo, hi, abs(lc.slopes[e.id])))
    return CombinatorialType(len(distinct), tuple(sorted(level.items())), tuple(spans))


@dataclass(frozen=True)
class ConeDiagnostics:
    simplicial: bool
    smooth: bool
    index: int | None
    kummer_coords: tuple[str, ...] = ()
    unexpected_index: bool = False
    half_coordinates: tuple[int, ...] = ()

    def render(self) -> str:
        if not self.simplicial:
            return "non-simplicial"
        if self.smooth:
            return "smooth"
        if self.unexpected_index:
            return f"unexpected index {self.index}"
        return f"index {self.index}, Kummer: {', '.join(self.kummer_coords)}"


def _is_integral(form: LinForm, coords: Sequence[int], scale: Sequence[int] | None) -> bool:
    return all(x.denominator == 1 for x in lattice_coefficients(form, coords, scale))


@beartype
def cone_diagnostics(
    cone: Cone,
    derived: Mapping[str, LinForm] | None = None,
    scale: Sequence[int] | None = None,
) -> ConeDiagnostics:
    """Simpliciality, smoothness and the Kummer data of an index-2 cone.

    Indices are taken in the base lattice of the cover, whose characters are
    coordinate / ``scale``. A cone is smooth when its ray generators form a
    lattice basis. For index 2 the rays halved by the lattice and the derived
    lengths that are not integral are listed, and ``half_coordinates`` names
    the coordinates whose characters acquire a half.
    """
    derived = derived or {}
    index = cone.lattice_index(scale)
    if index is None:
        return ConeDiagnostics(False, False, None)
    if index == 1:
        return ConeDiagnostics(True, True, 1)
    if index > 2:
        logger.warning(f"cone with rays {cone.rays} has unexpected index {index}")
        return ConeDiagnostics(True, False, index, unexpected_index=True)
    flagged = [
        name for name, form in sorted(derived.items()) if not _is_integral(form, cone.coords, scale)
    ]
    in_halves = sorted({
        r for mask in cone.half_lattice_masks(scale) for e, r in zip(mask, cone.rays) if e
    })
    flagged.extend(f"ray({','.join(map(str, r))})/2" for r in in_halves)
    return ConeDiagnostics(True, False, 2, tuple(flagged), half_coordinates=cone.kummer_coordinates(scale))


def derived_forms(region_data: LambdaRegionData) -> dict[str, LinForm]:
    """Every length the subdivided curve is built from, by name."""
    lc = region_data.subdivided()
    forms = {f"λ({v})": form for v, form in lc.values.items()}
    for e in region_data.cover.source.edges:
        if e.id in region_data.contracted:
            continue
        profile = region_data.profiles[e.id]
        for k, position in enumerate(profile.positions):
            forms[f"{e.id}.position{k + 1}"] = position
        for k, piece in enumerate(profile.segment_lengths(e.length)):
            forms[f"{e.id}.piece{k + 1}"] = piece
    return forms


@dataclass(frozen=True)
class ConeLabel:
    region_data: LambdaRegionData
    ctype: CombinatorialType
    delta: DeltaData
    fiber: FiberClass


@beartype
def label_cone(cover: TropCover, functions: Sequence[AdmissibleFunction], cell: Cone) -> ConeLabel:
    sample = cell.sample
    region_data = lambda_max(lifts_at(cover, functions, sample), cover, sample, region=cell)
    delta = extract_delta(region_data)
    return ConeLabel(region_data, combinatorial_type(region_data), delta, classify_fiber(delta, cover))


@dataclass(frozen=True)
class FanCone:
    cone: Cone
    label: ConeLabel | None
    diagnostics: ConeDiagnostics
    members: tuple[int, ...] = ()

    @property
    def sample(self) -> tuple[Fraction, ...]:
        return self.cone.sample


@dataclass(frozen=True)
class Fan:
    cover: TropCover
    cones: tuple[FanCone, ...]
    walls: tuple[Wall, ...]
    coarsened: bool = False
    discrepancies: tuple[str, ...] = ()

    @property
    def base(self) -> Cone:
        return Cone.orthant(self.cover.dim, self.cover.active_coordinates)

    def cone_containing(self, point: Sequence[Fraction | int]) -> FanCone:
        for fan_cone in self.cones:
            if fan_cone.cone.contains(point, strict=True):
                return fan_cone
        raise DomainError(f"{point} is not in the interior of a maximal cone of {self.cover.name}")

    def adjacency(self) -> list[tuple[int, int]]:
        """Pairs of maximal cones sharing a facet."""
        owners: dict[frozenset[IntVector], list[int]] = {}
        for i, fan_cone in enumerate(self.cones):
            for rays in fan_cone.cone.facet_rays():
                owners.setdefault(rays, []).append(i)
        pairs = set()
        for members in owners.values():
            pairs.update(itertools.combinations(sorted(members), 2))
        return sorted(pairs)

    def wall_origin(self, form: LinForm) -> WallOrigin | None:
        key = wall_key(form, self.cover.active_coordinates, self.cover.dim)
        for wall in self.walls:
            if wall_key(wall.form, self.cover.active_coordinates, self.cover.dim) == key:
                return wall.origin
        return None


def _fan_cone(
    cover: TropCover, cell: Cone, label: ConeLabel | None, members: tuple[int, ...] = ()
) -> FanCone:
    derived = derived_forms(label.region_data) if label is not None else {}
    return FanCone(cell, label, cone_diagnostics(cell, derived, cover.lattice_scale), members)


def _bending_candidates(region_data: LambdaRegionData) -> list[LinForm]:
    found = [c.form for c in region_data.certificates()]
    values = region_data.subdivided().values
    ids = sorted(values)
    found.extend(values[a] - values[b] for a, b in itertools.combinations(ids, 2))
    return found


def alignment_walls(cover: TropCover, functions: Sequence[AdmissibleFunction]) -> list[Wall]:
    walls = []
    for f in functions:
        forms = f.source_function.vertex_values
        for v, w in itertools.combinations(sorted(cover.source.vertex_ids), 2):
            difference = forms[v] - forms[w]
            if not difference.is_zero:
                walls.append(Wall(difference, "alignment"))
    return walls


class _Refinement:
    """A hyperplane arrangement over the base orthant, grown stage by stage."""

    def __init__(self, cover: TropCover, functions: Sequence[AdmissibleFunction]):
        self.cover = cover
        self.functions = list(functions)
        self.base = Cone.orthant(cover.dim, cover.active_coordinates)
        self.walls: dict[IntVector, Wall] = {}
        self.cells = [self.base]
        for wall in alignment_walls(cover, self.functions):
            self.add(wall)

    def add(self, wall: Wall) -> bool:
        key = wall_key(wall.form, self.base.coords, self.cover.dim)
        if key is None or key in self.walls:
            return False
        self.walls[key] = wall
        cells = []
        for cell in self.cells:
            cells.extend(cell.split(key) if cell.cuts(key) else (cell,))
        self.cells = cells
        return True

    def label(self, cell: Cone) -> ConeLabel:
        return label_cone(self.cover, self.functions, cell)

    def resolve(self) -> None:
        """Split cells until the comparisons deciding λ are one-signed on each."""
        for _ in range(MAX_ROUNDS):
            added = 0
            for cell in list(self.cells):
                if cell not in self.cells:
                    continue
                lifts = lifts_at(self.cover, self.functions, cell.sample)
                for form in unresolved_comparisons(lifts, self.cover, cell):
                    if self.add(Wall(form, "lambda_max")):
                        added += 1
            if not added:
                return
            logger.info(f"{self.cover.name}: {added} lambda_max walls, {len(self.cells)} cells")
        raise DiscrepancyError(f"{self.cover.name}: λ was not resolved in {MAX_ROUNDS} rounds")

    def advance(self, labels: Sequence[ConeLabel]) -> bool:
        """Add every bending wall that still cuts a cell; False once none does."""
        added = 0
        for label in labels:
            region = label.region_data.region
            for form in _bending_candidates(label.region_data):
                if region.cuts(form) and self.add(Wall(form, "bending")):
                    added += 1
        if added:
            logger.info(f"{self.cover.name}: {added} bending walls, {len(self.cells)} cells")
        return bool(added)

    def fan(self, labels: Sequence[ConeLabel]) -> Fan:
        ordered = sorted(zip(self.cells, labels), key=lambda cl: cl[0].rays)
        cones = tuple(_fan_cone(self.cover, cell, label) for cell, label in ordered)
        return Fan(self.cover, cones, tuple(self.walls.values()))


def _functions(cover: TropCover, functions: Sequence[AdmissibleFunction] | None) -> list[AdmissibleFunction]:
    return list(functions) if functions is not None else enumerate_admissible(cover)


@beartype
def alignment_subdivision(
    cover: TropCover, functions: Sequence[AdmissibleFunction] | None = None
) -> Fan:
    """The arrangement of the alignment hyperplanes alone, unlabelled."""
    refinement = _Refinement(cover, _functions(cover, functions))
    cells = sorted(refinement.cells, key=lambda c: c.rays)
    return Fan(cover, tuple(_fan_cone(cover, c, None) for c in cells), tuple(refinement.walls.values()))


@beartype
def align(cover: TropCover, functions: Sequence[AdmissibleFunction] | None = None) -> Fan:
    refinement = _Refinement(cover, _functions(cover, functions))
    for _ in range(MAX_ROUNDS):
        refinement.resolve()
        labels = [refinement.label(cell) for cell in refinement.cells]
        if not refinement.advance(labels):
            logger.info(f"{cover.name}: Σ has {len(labels)} maximal cones")
            return refinement.fan(labels)
    raise DiscrepancyError(f"{cover.name}: the refinement did not stabilise in {MAX_ROUNDS} rounds")


async def a_label_cones(refinement: _Refinement, threads: int) -> list[ConeLabel]:
    semaphore = asyncio.Semaphore(max(1, threads))

    async def task(cell: Cone) -> ConeLabel:
        async with semaphore:
            return await asyncio.to_thread(refinement.label, cell)

    return list(await asyncio.gather(*[task(cell) for cell in refinement.cells]))


async def a_align(
    cover: TropCover, functions: Sequence[AdmissibleFunction] | None = None, threads: int = 1
) -> Fan:
    """``align`` with the per-cell labelling spread over worker threads."""
    refinement = _Refinement(cover, _functions(cover, functions))
    for _ in range(MAX_ROUNDS):
        refinement.resolve()
        labels = await a_label_cones(refinement, threads)
        if not refinement.advance(labels):
            logger.info(f"{cover.name}: Σ has {len(labels)} maximal cones")
            return refinement.fan(labels)
    raise DiscrepancyError(f"{cover.name}: the refinement did not stabilise in {MAX_ROUNDS} rounds")


@beartype
def coarsen(fan: Fan) -> Fan:
    """Merge adjacent cones of one combinatorial type into the cones of Σ′."""
    graph = nx.Graph()
    graph.add_nodes_from(range(len(fan.cones)))
    for i, j in fan.adjacency():
        a, b = fan.cones[i].label, fan.cones[j].label
        if a is not None and b is not None and a.ctype == b.ctype:
            graph.add_edge(i, j)

    cones, discrepancies = [], []
    coords = fan.base.coords
    for component in sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0]):
        members = [fan.cones[i] for i in component]
        first = members[0]
        if len(members) == 1:
            cones.append(_fan_cone(fan.cover, first.cone, first.label, tuple(component)))
            continue
        hull = Cone.from_rays(fan.cover.dim, [r for m in members for r in m.cone.rays], coords)
        if hull.volume() != sum((m.cone.volume() for m in members), Fraction(0)):
            raise DiscrepancyError(
                f"{fan.cover.name}: cones {component} share a combinatorial type but their union is not convex"
            )
        if any(m.label.fiber != first.label.fiber for m in members[1:]):
            discrepancies.append(
                f"cones {component} share a combinatorial type but not a fibre label: "
                + ", ".join(m.label.fiber.render() for m in members)
            )
        region_data = replace(first.label.region_data, region=hull)
        label = replace(first.label, region_data=region_data)
        cones.append(_fan_cone(fan.cover, hull, label, tuple(component)))

    for fan_cone in cones:
        if not fan_cone.diagnostics.simplicial:
            discrepancies.append(f"Σ′ cone with rays {list(fan_cone.cone.rays)} is not simplicial")
    for problem in discrepancies:
        logger.warning(f"{fan.cover.name}: {problem}")
    logger.info(f"{fan.cover.name}: Σ′ has {len(cones)} maximal cones")
    ordered = tuple(sorted(cones, key=lambda c: c.cone.rays))
    return Fan(fan.cover, ordered, fan.walls, True, tuple(discrepancies))


@dataclass(frozen=True)
class DisjointnessCertificate:
    first: int
    second: int
    normal: IntVector | None

    @property
    def holds(self) -> bool:
        return self.normal is not None


@beartype
def interior_disjointness(fan: Fan) -> list[DisjointnessCertificate]:
    """A separating form for every pair of maximal cones."""
    candidates = [
        wall_key(w.form, fan.base.coords, fan.cover.dim) for w in fan.walls
    ]
    found = []
    for (i, a), (j, b) in itertools.combinations(enumerate(fan.cones), 2):
        normal = separating_normal(a.cone, b.cone, [c for c in candidates if c is not None])
        found.append(DisjointnessCertificate(i, j, normal))
    return found


def volume(cone: Cone) -> Fraction:
    return cone.volume()


@dataclass(frozen=True)
class FanReport:
    covered: bool
    disjoint: bool
    simplicial: bool
    problems: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.covered and self.disjoint


@beartype
def check_fan(fan: Fan) -> FanReport:
    problems = []
    total = sum((volume(c.cone) for c in fan.cones), Fraction(0))
    expected = volume(fan.base)
    covered = total == expected
    if not covered:
        problems.append(f"cone volumes sum to {format_rational(total)}, expected {format_rational(expected)}")
    missing = [c for c in interior_disjointness(fan) if not c.holds]
    for c in missing:
        problems.append(f"cones {c.first} and {c.second} have no separating form")
    simplicial = all(c.diagnostics.simplicial for c in fan.cones)
    return FanReport(covered, not missing, simplicial, tuple(problems))


@dataclass(frozen=True)
class ConeCheck:
    cone: int
    equidimensional: bool
    standard_index: int
    kummer_index: int

    @property
    def reduced_standard(self) -> bool:
        return self.standard_index == 1

    @property
    def reduced_kummer(self) -> bool:
        return self.kummer_index == 1

    @property
    def passed(self) -> bool:
        return self.equidimensional and (self.reduced_standard or self.reduced_kummer)


@beartype
def lattice_surjectivity(
    forms: Sequence[LinForm],
    coords: Sequence[int],
    scale: Sequence[int] | None = None,
    half_coordinates: Sequence[int] = (),
) -> tuple[int, int]:
    """Index of the base lattice in the lattice the lengths generate over it.

    The first index is over the standard lattice, the second over its Kummer
    extension by half the characters of ``half_coordinates``. The projection
    of the subdivided curve is surjective on lattices exactly when the index
    is one.
    """
    vectors = [lattice_coefficients(form, coords, scale) for form in forms]
    halved = set(half_coordinates)
    doubled = [
        tuple(x * 2 if c in halved else x for c, x in zip(coords, vector)) for vector in vectors
    ]
    return quotient_order(vectors), quotient_order(doubled)


def _check_cone(position: int, fan_cone: FanCone, scale: Sequence[int]) -> ConeCheck:
    label = fan_cone.label
    if label is None:
        raise DomainError("equidimensionality needs a labelled fan; run align first")
    cone = fan_cone.cone
    values = label.region_data.subdivided().values
    equidim = not any(
        cone.cuts(values[a] - values[b]) for a, b in itertools.combinations(sorted(values), 2)
    )
    forms = list(derived_forms(label.region_data).values())
    standard, kummer = lattice_surjectivity(
        forms, cone.coords, scale, fan_cone.diagnostics.half_coordinates
    )
    return ConeCheck(position, equidim, standard, kummer)


@beartype
def equidim_reducedness_check(fan: Fan) -> list[ConeCheck]:
    """Per cone: level order constant on the cone, and the lengths of the
    subdivided curve in the base lattice or in its Kummer extension."""
    scale = fan.cover.lattice_scale
    return [_check_cone(i, c, scale) for i, c in enumerate(fan.cones)]


@beartype
def level_count(cone: Cone, region_data: LambdaRegionData) -> int:
    """Rank of the locally free log structure: finite level intervals of λ."""
    if not cone.contains(region_data.sample):
        raise DomainError("λ was resolved at a point outside the cone")
    return combinatorial_type(region_data).level_count - 1


@dataclass(frozen=True)
class RayClass:
    ray: IntVector
    fiber: FiberClass
    level_count: int
    rho1: Fraction = field(default=Fraction(0))


@beartype
def classify_ray(cover: TropCover, ray: Sequence[int]) -> RayClass:
    region_data = lambda_at(cover, ray)
    delta = extract_delta(region_data)
    return RayClass(
        tuple(int(x) for x in ray),
        classify_fiber(delta, cover),
        combinatorial_type(region_data).level_count - 1,
        delta.rho1.evaluate(region_data.sample),
    )


@beartype
def generic_d1_points(fan: Fan) -> list[RayClass]:
    """Rays of the fan over 𝒟₁ with a single level: the generic points of 𝒟₁."""
    rays = sorted({r for c in fan.cones for r in c.cone.rays})
    found = []
    for ray in rays:
        classified = classify_ray(fan.cover, ray)
        if classified.rho1 != 0 and classified.level_count == 1:
            found.append(classified)
    return found
