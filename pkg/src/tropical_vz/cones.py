"""Rational polyhedral cones inside the base orthant.

A cone lives in the coordinate subspace spanned by ``coords`` (the other
coordinates vanish on it) and is full dimensional there. It is stored both
by its facet normals and by its primitive extremal rays, all in integers.
Splitting by a hyperplane is one double-description step, so the two
descriptions never drift apart.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import sympy

from tropical_vz.errors import DomainError
from tropical_vz.linform import LinForm, Rational, as_fraction

IntVector = tuple[int, ...]


def dot(a: Sequence[Rational], b: Sequence[Rational]) -> Fraction:
    return sum((as_fraction(x) * as_fraction(y) for x, y in zip(a, b)), Fraction(0))


def primitive(vector: Sequence[Rational]) -> IntVector:
    fractions = [as_fraction(x) for x in vector]
    scale = math.lcm(1, *(x.denominator for x in fractions))
    ints = [int(x * scale) for x in fractions]
    divisor = math.gcd(*ints) or 1
    return tuple(x // divisor for x in ints)


def as_normal(form: LinForm | Sequence[Rational], dim: int) -> IntVector:
    if isinstance(form, LinForm):
        return form.integer_normal(dim)
    return primitive(form)


def _to_fraction(value: sympy.Expr) -> Fraction:
    rational = sympy.Rational(value)
    return Fraction(int(rational.p), int(rational.q))


def rank(vectors: Sequence[Sequence[Rational]]) -> int:
    if not vectors:
        return 0
    if len(vectors) == 1:
        return int(any(vectors[0]))
    return int(sympy.Matrix([[sympy.Rational(str(as_fraction(x))) for x in v] for v in vectors]).rank())


def determinant(rows: Sequence[Sequence[int]]) -> int:
    if len(rows) == 1:
        return int(rows[0][0])
    if len(rows) == 2:
        (a, b), (c, d) = rows
        return int(a * d - b * c)
    return int(sympy.Matrix(rows).det())


def _cross(a: Sequence[int], b: Sequence[int]) -> IntVector:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def kernel_vector(rows: Sequence[Sequence[int]], coords: Sequence[int], dim: int) -> IntVector | None:
    """Primitive vector on ``coords`` orthogonal to every row, if that kernel is a line."""
    restricted = [[int(r[c]) for c in coords] for r in rows]
    k = len(coords)
    candidate: Sequence[int] | None = None
    if k == 1:
        candidate = (1,) if all(r[0] == 0 for r in restricted) else None
    elif k == 2:
        nonzero = [r for r in restricted if any(r)]
        candidate = (-nonzero[0][1], nonzero[0][0]) if nonzero else None
    elif k == 3:
        for a, b in itertools.combinations(restricted, 2):
            if any(crossed := _cross(a, b)):
                candidate = crossed
                break
    else:
        space = sympy.Matrix(restricted).nullspace() if restricted else []
        if len(space) == 1:
            candidate = primitive([_to_fraction(x) for x in space[0]])
    if candidate is None or any(sum(x * y for x, y in zip(r, candidate)) for r in restricted):
        return None
    full = [0] * dim
    for c, x in zip(coords, primitive(candidate)):
        full[c] = x
    return tuple(full)


def in_lattice_basis(vector: Sequence[Rational], scale: Sequence[int] | None = None) -> tuple[Fraction, ...]:
    """Coordinates of a point in the basis k_i·e_i of the base lattice."""
    if scale is None:
        return tuple(as_fraction(x) for x in vector)
    return tuple(as_fraction(x) / k for x, k in zip(vector, scale))


def lattice_coefficients(
    form: LinForm, coords: Sequence[int], scale: Sequence[int] | None = None
) -> tuple[Fraction, ...]:
    """Coefficients of a form on the characters coordinate / k of the base lattice."""
    return tuple(form.coefficient(c) * (scale[c] if scale is not None else 1) for c in coords)


def quotient_order(vectors: Sequence[Sequence[Rational]]) -> int:
    """Index of ℤᵏ in the lattice spanned by ℤᵏ and the given rational vectors."""
    reduced = {tuple(as_fraction(x) % 1 for x in v) for v in vectors}
    if not reduced:
        return 1
    zero = tuple(Fraction(0) for _ in next(iter(reduced)))
    group, frontier = {zero}, [zero]
    while frontier:
        element = frontier.pop()
        for g in reduced:
            total = tuple((a + b) % 1 for a, b in zip(element, g))
            if total not in group:
                group.add(total)
                frontier.append(total)
    return len(group)


def _restrict(vector: Sequence[int], coords: Sequence[int], dim: int) -> IntVector:
    kept = set(coords)
    return primitive([vector[i] if i in kept else 0 for i in range(dim)])


@dataclass(frozen=True)
class Cone:
    dim: int
    coords: tuple[int, ...]
    inequalities: tuple[IntVector, ...]
    rays: tuple[IntVector, ...]

    @property
    def cone_dim(self) -> int:
        return len(self.coords)

    @classmethod
    def orthant(cls, dim: int, coords: Iterable[int] | None = None) -> Cone:
        chosen = tuple(sorted(coords)) if coords is not None else tuple(range(dim))
        units = tuple(tuple(int(i == c) for i in range(dim)) for c in chosen)
        return cls(dim, chosen, units, units)

    @classmethod
    def from_inequalities(
        cls, dim: int, normals: Iterable[LinForm | Sequence[Rational]], coords: Iterable[int] | None = None
    ) -> Cone:
        cone = cls.orthant(dim, coords)
        for form in normals:
            cone = cone.restrict(form)
        return cone

    @classmethod
    def from_rays(cls, dim: int, rays: Iterable[Sequence[int]], coords: Iterable[int] | None = None) -> Cone:
        """Convex hull of the given generators, facets found by brute force."""
        generators = list(dict.fromkeys(primitive(r) for r in rays if any(r)))
        chosen = tuple(sorted(coords)) if coords is not None else tuple(
            sorted({i for r in generators for i, x in enumerate(r) if x})
        )
        k = len(chosen)
        if rank(generators) != k:
            raise DomainError(f"{len(generators)} generators do not span a {k}-dimensional cone")
        if k == 1:
            return cls.orthant(dim, chosen)
        facets = []
        for combo in itertools.combinations(generators, k - 1):
            normal = kernel_vector(combo, chosen, dim)
            if normal is None:
                continue
            values = [dot(normal, r) for r in generators]
            if all(v >= 0 for v in values):
                facets.append(normal)
            elif all(v <= 0 for v in values):
                facets.append(tuple(-x for x in normal))
        return cls._pruned(dim, chosen, tuple(dict.fromkeys(facets)), tuple(generators), extremal_only=True)

    @classmethod
    def _pruned(
        cls,
        dim: int,
        coords: tuple[int, ...],
        inequalities: Sequence[IntVector],
        rays: Sequence[IntVector],
        extremal_only: bool = False,
    ) -> Cone:
        k = len(coords)
        kept, seen = [], set()
        for a in inequalities:
            a = _restrict(a, coords, dim)
            tight = frozenset(i for i, r in enumerate(rays) if dot(a, r) == 0)
            if tight in seen or len(tight) == len(rays) or not any(a):
                continue
            spans = len(tight) >= k - 1 if k <= 3 else rank([rays[i] for i in tight]) == k - 1
            if spans:
                seen.add(tight)
                kept.append(a)
        if extremal_only and k >= 2:
            rays = [
                r for r in rays
                if rank([a for a in kept if dot(a, r) == 0]) == k - 1
            ]
        return cls(dim, coords, tuple(kept), tuple(sorted(rays)))

    def contains(self, point: Sequence[Rational], strict: bool = False) -> bool:
        if any(point[i] for i in range(self.dim) if i not in self.coords):
            return False
        values = [dot(a, point) for a in self.inequalities]
        return all(v > 0 for v in values) if strict else all(v >= 0 for v in values)

    def ray_values(self, form: LinForm | Sequence[Rational]) -> list[Fraction]:
        if isinstance(form, LinForm):
            return [form.evaluate(r) for r in self.rays]
        return [dot(form, r) for r in self.rays]

    def cuts(self, form: LinForm | Sequence[Rational]) -> bool:
        values = self.ray_values(form)
        return any(v > 0 for v in values) and any(v < 0 for v in values)

    def sign(self, form: LinForm | Sequence[Rational]) -> int:
        """+1 or -1 when the form is one-signed and not identically zero, else 0."""
        values = self.ray_values(form)
        if any(v > 0 for v in values) and all(v >= 0 for v in values):
            return 1
        if any(v < 0 for v in values) and all(v <= 0 for v in values):
            return -1
        return 0

    @property
    def sample(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(sum(r[i] for r in self.rays)) for i in range(self.dim))

    def _tight(self) -> list[frozenset[int]]:
        return [
            frozenset(j for j, a in enumerate(self.inequalities) if dot(a, r) == 0)
            for r in self.rays
        ]

    def restrict(self, form: LinForm | Sequence[Rational]) -> Cone:
        """Intersection with the half-space where the form is nonnegative."""
        normal = as_normal(form, self.dim)
        values = [dot(normal, r) for r in self.rays]
        if all(v >= 0 for v in values):
            return self
        if all(v <= 0 for v in values):
            raise DomainError("the half-space meets the cone in a lower-dimensional face")
        k = self.cone_dim
        tight = self._tight()
        kept = [r for r, v in zip(self.rays, values) if v >= 0]
        plus = [i for i, v in enumerate(values) if v > 0]
        minus = [i for i, v in enumerate(values) if v < 0]
        for p, n in itertools.product(plus, minus):
            common = tight[p] & tight[n]
            if len(common) < k - 2:
                continue
            if any(common <= tight[j] for j in range(len(self.rays)) if j not in (p, n)):
                continue
            if k >= 4 and rank([self.inequalities[i] for i in common]) < k - 2:
                continue
            vp, vn = values[p], values[n]
            kept.append(primitive([vp * y - vn * x for x, y in zip(self.rays[p], self.rays[n])]))
        return Cone._pruned(
            self.dim, self.coords, (*self.inequalities, normal), tuple(dict.fromkeys(kept))
        )

    def split(self, form: LinForm | Sequence[Rational]) -> tuple[Cone, Cone]:
        normal = as_normal(form, self.dim)
        return self.restrict(normal), self.restrict(tuple(-x for x in normal))

    @property
    def is_simplicial(self) -> bool:
        return len(self.rays) == self.cone_dim

    def lattice_rays(self, scale: Sequence[int] | None = None) -> tuple[IntVector, ...]:
        """Primitive ray generators written in the basis k_i·e_i, in the order of ``rays``."""
        return tuple(primitive(in_lattice_basis(r, scale)) for r in self.rays)

    def lattice_index(self, scale: Sequence[int] | None = None) -> int | None:
        """Index of the ray generators in the lattice of a simplicial cone, None otherwise."""
        if not self.is_simplicial:
            return None
        rays = self.lattice_rays(scale)
        return abs(determinant([[r[c] for c in self.coords] for r in rays]))

    @property
    def index(self) -> int | None:
        return self.lattice_index()

    @property
    def is_smooth(self) -> bool:
        return self.index == 1

    def half_lattice_masks(self, scale: Sequence[int] | None = None) -> list[tuple[int, ...]]:
        """ε ∈ {0,1}ʳ, not all zero, with ½·Σεᵢrᵢ a lattice point."""
        rays = self.lattice_rays(scale)
        masks = []
        for mask in itertools.product((0, 1), repeat=len(rays)):
            total = [sum(e * r[i] for e, r in zip(mask, rays)) for i in range(self.dim)]
            if any(mask) and all(x % 2 == 0 for x in total):
                masks.append(mask)
        return masks

    def kummer_coordinates(self, scale: Sequence[int] | None = None) -> tuple[int, ...]:
        """Coordinates whose character needs a half for the rays to become a lattice basis.

        The forms taking integral values on the ray generators are spanned by
        the columns of the inverse ray matrix; a coordinate is listed when one
        of them has a non-integral coefficient on it.
        """
        if not self.is_simplicial:
            return ()
        rays = self.lattice_rays(scale)
        inverse = sympy.Matrix([[r[c] for c in self.coords] for r in rays]).inv()
        k = len(self.coords)
        return tuple(
            c
            for i, c in enumerate(self.coords)
            if any(_to_fraction(inverse[i, j]).denominator != 1 for j in range(k))
        )

    def is_face(self, rays: Iterable[Sequence[int]]) -> bool:
        """Whether the rays are exactly the ray generators of a nonzero face."""
        given = {primitive(r) for r in rays if any(r)}
        if not given or not given <= set(self.rays):
            return False
        tight = [a for a in self.inequalities if all(dot(a, r) == 0 for r in given)]
        return given == {r for r in self.rays if all(dot(a, r) == 0 for a in tight)}

    def facet_rays(self) -> list[frozenset[IntVector]]:
        return [
            frozenset(r for r in self.rays if dot(a, r) == 0) for a in self.inequalities
        ]

    def triangulate(self) -> list[tuple[IntVector, ...]]:
        """Pulling triangulation from the lexicographically first ray."""
        facets = [frozenset(i for i, r in enumerate(self.rays) if dot(a, r) == 0) for a in self.inequalities]
        return [
            tuple(self.rays[i] for i in simplex)
            for simplex in _pull(frozenset(range(len(self.rays))), self.cone_dim, facets, self.rays)
        ]

    def volume(self) -> Fraction:
        """Normalised volume of the slice where the active coordinates sum to one."""
        total = Fraction(0)
        for simplex in self.triangulate():
            det = abs(determinant([[r[c] for c in self.coords] for r in simplex]))
            scale = math.prod(sum(r[c] for c in self.coords) for r in simplex)
            total += Fraction(det, scale)
        return total


def _pull(
    face: frozenset[int], d: int, facets: Sequence[frozenset[int]], rays: Sequence[IntVector]
) -> list[tuple[int, ...]]:
    if len(face) == d:
        return [tuple(sorted(face))]
    apex = min(face)
    candidates = {face & f for f in facets} - {face}
    subfaces = [
        s for s in candidates
        if (len(s) if d - 1 <= 2 else rank([rays[i] for i in s])) == d - 1
        and not any(s < t for t in candidates)
    ]
    simplices = []
    for sub in subfaces:
        if apex in sub:
            continue
        simplices.extend((apex, *s) for s in _pull(sub, d - 1, facets, rays))
    return simplices


@dataclass(frozen=True)
class NonnegCertificate:
    """Why a form is nonnegative on a cone.

    ``ray_values`` are its values on the extremal rays; for simplicial cones
    ``multipliers`` writes the form as a nonnegative combination of the
    facet normals.
    """

    form: LinForm
    ray_values: tuple[Fraction, ...]
    multipliers: tuple[Fraction, ...] | None

    @property
    def holds(self) -> bool:
        return all(v >= 0 for v in self.ray_values) and all(
            m >= 0 for m in self.multipliers or ()
        )


def certify_nonnegative(cone: Cone, form: LinForm) -> NonnegCertificate:
    values = tuple(cone.ray_values(form))
    multipliers = None
    if cone.is_simplicial and len(cone.inequalities) == cone.cone_dim:
        found = []
        for a in cone.inequalities:
            opposite = [r for r in cone.rays if dot(a, r) != 0]
            if len(opposite) != 1:
                break
            found.append(form.evaluate(opposite[0]) / dot(a, opposite[0]))
        else:
            multipliers = tuple(found)
    return NonnegCertificate(form, values, multipliers)


def verify_certificate(cone: Cone, certificate: NonnegCertificate) -> bool:
    if tuple(cone.ray_values(certificate.form)) != certificate.ray_values:
        return False
    if certificate.multipliers is not None:
        combined = [
            sum((m * a[c] for m, a in zip(certificate.multipliers, cone.inequalities)), Fraction(0))
            for c in cone.coords
        ]
        if combined != [certificate.form.coefficient(c) for c in cone.coords]:
            return False
    return certificate.holds


def separating_normal(
    a: Cone, b: Cone, candidates: Iterable[Sequence[int]] = ()
) -> IntVector | None:
    """A normal nonnegative on ``a`` and nonpositive on ``b``, nonzero on both spans."""
    pool = [*candidates, *a.inequalities, *(tuple(-x for x in n) for n in b.inequalities)]
    for normal in pool:
        for h in (tuple(normal), tuple(-x for x in normal)):
            on_a = [dot(h, r) for r in a.rays]
            on_b = [dot(h, r) for r in b.rays]
            if all(v >= 0 for v in on_a) and all(v <= 0 for v in on_b) and any(on_a) and any(on_b):
                return primitive(h)
    return None
