"""Curve germs as subalgebras of truncated power-series rings.

The ambient ring is a product of branches, each either k⟦t⟧ (reduced) or
k⟦s, ε⟧/ε² (a ribbon). Everything is computed modulo terms of degree at
least the truncation order N, and every reported invariant is recomputed at
N + 1 and must agree.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from importlib import resources
from typing import Literal

import yaml
from beartype import beartype
from loguru import logger
from pydantic import BaseModel, ConfigDict
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from tropical_vz.errors import DomainError, TruncationError, create_truncation_error_message

DEFAULT_TRUNCATION = 12
BranchKind = Literal["reduced", "ribbon"]
Term = tuple[int, int, int]
Series = Mapping[Term, Fraction | int]
Vector = dict[int, Fraction]


def term(branch: int, power: int = 0, nilpotent: int = 0) -> dict[Term, Fraction]:
    """The monomial t^power (or s^power·ε^nilpotent) on one branch."""
    return {(branch, power, nilpotent): Fraction(1)}


def add(*series: Series) -> dict[Term, Fraction]:
    total: dict[Term, Fraction] = {}
    for s in series:
        for key, c in s.items():
            total[key] = total.get(key, Fraction(0)) + Fraction(c)
    return {k: c for k, c in total.items() if c}


def scale(series: Series, factor: Fraction | int) -> dict[Term, Fraction]:
    return {k: Fraction(c) * factor for k, c in series.items() if c}


@dataclass(frozen=True)
class TruncatedRing:
    branches: tuple[BranchKind, ...]
    order: int = DEFAULT_TRUNCATION

    @cached_property
    def monomials(self) -> tuple[Term, ...]:
        found = []
        for b, kind in enumerate(self.branches):
            for a in range(self.order):
                found.append((b, a, 0))
                if kind == "ribbon" and a + 1 < self.order:
                    found.append((b, a, 1))
        return tuple(found)

    @cached_property
    def index(self) -> dict[Term, int]:
        return {m: i for i, m in enumerate(self.monomials)}

    @property
    def dim(self) -> int:
        return len(self.monomials)

    def with_order(self, order: int) -> TruncatedRing:
        return TruncatedRing(self.branches, order)

    def vector(self, series: Series) -> Vector:
        found = {}
        for (b, a, e), c in series.items():
            if c and a + e < self.order:
                found[self.index[(b, a, e)]] = Fraction(c)
        return found

    def series(self, vector: Vector) -> dict[Term, Fraction]:
        return {self.monomials[i]: c for i, c in sorted(vector.items())}

    def one(self) -> Vector:
        return self.vector({(b, 0, 0): 1 for b in range(len(self.branches))})

    def multiply(self, x: Vector, y: Vector) -> Vector:
        product: Vector = {}
        for i, ci in x.items():
            bi, ai, ei = self.monomials[i]
            for j, cj in y.items():
                bj, aj, ej = self.monomials[j]
                if bi != bj or ei + ej > 1 or ai + aj + ei + ej >= self.order:
                    continue
                k = self.index[(bi, ai + aj, ei + ej)]
                product[k] = product.get(k, Fraction(0)) + ci * cj
        return {k: c for k, c in product.items() if c}

    def radical_generators(self) -> list[Vector]:
        found = []
        for b, kind in enumerate(self.branches):
            found.append(self.vector(term(b, 1)))
            if kind == "ribbon":
                found.append(self.vector(term(b, 0, 1)))
        return found

    def top_monomials(self) -> list[int]:
        return [i for i, (_, a, e) in enumerate(self.monomials) if a + e == self.order - 1]


class _Echelon:
    """Sparse row echelon form; each row is keyed by its leading index."""

    def __init__(self):
        self.rows: dict[int, Vector] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, vector: Vector) -> Vector:
        v = dict(vector)
        while True:
            hits = [k for k in v if k in self.rows]
            if not hits:
                return v
            pivot = min(hits)
            factor = v[pivot]
            for k, c in self.rows[pivot].items():
                value = v.get(k, Fraction(0)) - factor * c
                if value:
                    v[k] = value
                else:
                    v.pop(k, None)

    def add(self, vector: Vector) -> bool:
        reduced = self.reduce(vector)
        if not reduced:
            return False
        pivot = min(reduced)
        lead = reduced[pivot]
        self.rows[pivot] = {k: c / lead for k, c in reduced.items()}
        return True

    def contains(self, vector: Vector) -> bool:
        return not self.reduce(vector)


def _domain_matrix(rows: Sequence[Sequence[Fraction]], cols: int) -> DomainMatrix:
    entries = [[QQ(x.numerator, x.denominator) for x in row] for row in rows]
    return DomainMatrix(entries, (len(entries), cols), QQ)


def _nullspace(rows: Sequence[Sequence[Fraction]], cols: int) -> list[list[Fraction]]:
    if not rows:
        return [[Fraction(int(i == j)) for j in range(cols)] for i in range(cols)]
    basis = _domain_matrix(rows, cols).nullspace().to_Matrix()
    return [
        [Fraction(int(x.p), int(x.q)) for x in basis.row(r)]
        for r in range(basis.rows)
    ]


@dataclass(frozen=True)
class LocalAlgebra:
    ambient: TruncatedRing
    generators: tuple[Mapping[Term, Fraction], ...]
    name: str = "germ"

    @property
    def branch_count(self) -> int:
        return len(self.ambient.branches)

    @property
    def has_ribbon(self) -> bool:
        return "ribbon" in self.ambient.branches

    def at_order(self, order: int) -> LocalAlgebra:
        return LocalAlgebra(self.ambient.with_order(order), self.generators, self.name)

    @cached_property
    def generator_vectors(self) -> list[Vector]:
        return [self.ambient.vector(g) for g in self.generators]

    @cached_property
    def _closure(self) -> tuple[_Echelon, list[Vector]]:
        """Span of all products of generators, with the raw spanning products."""
        ring = self.ambient
        echelon = _Echelon()
        echelon.add(ring.one())
        raw: list[Vector] = []
        frontier = [g for g in self.generator_vectors if echelon.add(g)]
        raw.extend(frontier)
        while frontier:
            fresh = []
            for x, g in itertools.product(frontier, self.generator_vectors):
                product = ring.multiply(x, g)
                if product and echelon.add(product):
                    fresh.append(product)
            raw.extend(fresh)
            frontier = fresh
        return echelon, raw

    @property
    def basis(self) -> _Echelon:
        return self._closure[0]

    @property
    def maximal_ideal(self) -> list[Vector]:
        return self._closure[1]

    def contains(self, series: Series) -> bool:
        return self.basis.contains(self.ambient.vector(series))

    @cached_property
    def codimension(self) -> int:
        ring = self.ambient
        missing = [i for i in ring.top_monomials() if not self.basis.contains({i: Fraction(1)})]
        if missing:
            raise TruncationError(create_truncation_error_message("δ-invariant", ring.order))
        return ring.dim - len(self.basis)

    @cached_property
    def conductor_basis(self) -> list[Vector]:
        """Largest ideal of the ambient ring contained in the subalgebra."""
        ring = self.ambient
        residue = [self.basis.reduce({i: Fraction(1)}) for i in range(ring.dim)]
        quotient = sorted({k for r in residue for k in r})
        position = {k: q for q, k in enumerate(quotient)}
        rows = []
        for m in range(ring.dim):
            block = [[Fraction(0)] * ring.dim for _ in quotient]
            for j in range(ring.dim):
                product = ring.multiply({j: Fraction(1)}, {m: Fraction(1)})
                for k, c in product.items():
                    for q, value in residue[k].items():
                        block[position[q]][j] += c * value
            rows.extend(row for row in block if any(row))
        solutions = _nullspace(rows, ring.dim)
        echelon = _Echelon()
        kept = []
        for vector in solutions:
            sparse = {i: c for i, c in enumerate(vector) if c}
            if echelon.add(sparse):
                kept.append(sparse)
        return [echelon.rows[p] for p in sorted(echelon.rows)]

    @cached_property
    def socle_dimension(self) -> int:
        ring = self.ambient
        xi = _regular_element(self)
        ideal = _Echelon()
        for x in [ring.one(), *self.maximal_ideal]:
            product = ring.multiply(xi, x)
            if product:
                ideal.add(product)
        unknowns = self.maximal_ideal
        rows: dict[tuple[int, int], list[Fraction]] = {}
        for g_index, g in enumerate(self.generator_vectors):
            for u_index, u in enumerate(unknowns):
                residual = ideal.reduce(ring.multiply(u, g))
                for k, c in residual.items():
                    rows.setdefault((g_index, k), [Fraction(0)] * len(unknowns))[u_index] += c
        kernel = len(_nullspace(list(rows.values()), len(unknowns)))
        return kernel - len(ideal)


def _is_regular(ring: TruncatedRing, xi: Vector) -> bool:
    """ξ is a non-zero-divisor of the ambient ring: no branch kills it."""
    for b, kind in enumerate(ring.branches):
        parts = [ring.monomials[i] for i in xi if ring.monomials[i][0] == b]
        if kind == "reduced" and not parts:
            return False
        if kind == "ribbon" and not any(e == 0 for _, _, e in parts):
            return False
    return True


def _coefficient_patterns(count: int) -> list[list[int]]:
    alternating = [(1 if i % 2 == 0 else -1) * (i // 2 + 1) for i in range(count)]
    return [[1] * count, list(range(1, count + 1)), alternating]


def _regular_element(algebra: LocalAlgebra) -> Vector:
    ring = algebra.ambient
    for pattern in _coefficient_patterns(len(algebra.generator_vectors)):
        xi: Vector = {}
        for c, g in zip(pattern, algebra.generator_vectors):
            for k, value in g.items():
                xi[k] = xi.get(k, Fraction(0)) + c * value
        xi = {k: v for k, v in xi.items() if v}
        if xi and _is_regular(ring, xi):
            return xi
    raise DomainError(f"{algebra.name}: no regular element found among the tried combinations")


def _stable(algebra: LocalAlgebra, name: str, compute) -> int:
    here = compute(algebra)
    there = compute(algebra.at_order(algebra.ambient.order + 1))
    if here != there:
        raise TruncationError(create_truncation_error_message(name, algebra.ambient.order))
    return here


@beartype
def delta_invariant(algebra: LocalAlgebra) -> int:
    return _stable(algebra, "δ-invariant", lambda a: a.codimension)


@beartype
def genus(algebra: LocalAlgebra) -> int:
    if algebra.has_ribbon:
        raise DomainError(
            f"{algebra.name}: genus δ − m + 1 is only defined for reduced germs; "
            "use the Euler characteristic of the ribbon instead"
        )
    return delta_invariant(algebra) - algebra.branch_count + 1


def conductor_length(algebra: LocalAlgebra) -> int:
    return _stable(
        algebra, "conductor", lambda a: a.ambient.dim - len(a.conductor_basis)
    )


@beartype
def conductor(algebra: LocalAlgebra) -> list[dict[Term, Fraction]]:
    """Minimal generators of the conductor as an ideal of the ambient ring."""
    conductor_length(algebra)
    ring = algebra.ambient
    basis = algebra.conductor_basis
    spanned = _Echelon()
    for c in basis:
        for g in ring.radical_generators():
            product = ring.multiply(c, g)
            if product:
                spanned.add(product)
    generators = []
    for c in basis:
        if spanned.add(c):
            generators.append(ring.series(c))
    return generators


def ideal_span(ring: TruncatedRing, elements: Iterable[Series]) -> _Echelon:
    echelon = _Echelon()
    for element in elements:
        vector = ring.vector(element)
        for m in range(ring.dim):
            product = ring.multiply(vector, {m: Fraction(1)})
            if product:
                echelon.add(product)
    return echelon


def same_ideal(ring: TruncatedRing, left: Iterable[Series], right: Iterable[Series]) -> bool:
    a, b = ideal_span(ring, left), ideal_span(ring, right)
    return len(a) == len(b) and all(b.contains(row) for row in a.rows.values())


@beartype
def check_two_delta(algebra: LocalAlgebra) -> bool:
    return conductor_length(algebra) == 2 * delta_invariant(algebra)


@beartype
def gorenstein_check(algebra: LocalAlgebra) -> bool:
    """One-dimensional socle of the Artinian reduction by a regular element."""
    return _stable(algebra, "socle", lambda a: a.socle_dimension) == 1


@beartype
def decomposability_check(algebra: LocalAlgebra) -> bool:
    """Whether the maximal ideal splits along some bipartition of the branches."""
    ring = algebra.ambient
    count = algebra.branch_count
    for size in range(1, count):
        for part in itertools.combinations(range(count), size):
            if 0 not in part:
                continue
            chosen = set(part)
            if all(
                algebra.basis.contains(
                    {k: c for k, c in x.items() if ring.monomials[k][0] in chosen}
                )
                for x in algebra.maximal_ideal
            ):
                logger.debug(f"{algebra.name}: splits along branches {sorted(chosen)}")
                return True
    return False


def noether_degrees(noded_points: int) -> tuple[int, int]:
    """Degrees of ω on R_red and on a tail of a tailed ribbon with r noded points."""
    return -2 + (3 - noded_points) + noded_points, 0


GermKind = Literal[
    "node",
    "cusp",
    "tacnode",
    "A4",
    "typeI",
    "typeII",
    "elliptic",
    "ribbon_tail",
    "ribbon_line",
    "two_cusps",
]


def _germ(branches: Sequence[BranchKind], generators: Sequence[Series], name: str, order: int) -> LocalAlgebra:
    return LocalAlgebra(
        TruncatedRing(tuple(branches), order),
        tuple(add(g) for g in generators),
        name,
    )


def _type_one(m: int, order: int) -> LocalAlgebra:
    last = m - 1
    if m == 1:
        return _germ(["reduced"], [term(0, 2), term(0, 5)], "A4", order)
    gens = [add(term(i, 1), term(last, 3)) for i in range(last)]
    gens.append(term(last, 2))
    return _germ(["reduced"] * m, gens, f"typeI(m={m})", order)


def _type_two(m: int, order: int) -> LocalAlgebra:
    last = m - 1
    gens = [add(term(0, 1), term(last, 1))]
    gens.extend(add(term(i, 1), term(last, 2)) for i in range(1, last))
    if m == 2:
        gens.append(term(1, 3))
    return _germ(["reduced"] * m, gens, f"typeII(m={m})", order)


def _elliptic(m: int, order: int) -> LocalAlgebra:
    if m == 1:
        return _germ(["reduced"], [term(0, 2), term(0, 3)], "cusp", order)
    if m == 2:
        return _germ(["reduced"] * 2, [add(term(0, 1), term(1, 1)), term(1, 2)], "tacnode", order)
    last = m - 1
    gens = [add(term(i, 1), term(last, 1)) for i in range(last)]
    return _germ(["reduced"] * m, gens, f"elliptic(m={m})", order)


def _ribbon_tail(k: int, order: int) -> LocalAlgebra:
    gens = [add(term(0, 0, 1), term(i, 1)) for i in range(1, k + 1)]
    gens.append(term(0, 1))
    return _germ(["ribbon", *["reduced"] * k], gens, f"ribbon_tail(k={k})", order)


@beartype
def table_germ(kind: GermKind, m: int = 1, order: int = DEFAULT_TRUNCATION) -> LocalAlgebra:
    """A germ from the catalogue, parametrised branch by branch."""
    if m < 1:
        raise DomainError(f"{kind} needs at least one branch, got m={m}")
    if kind == "node":
        return _germ(["reduced"] * 2, [term(0, 1), term(1, 1)], "node", order)
    if kind == "cusp":
        return _elliptic(1, order)
    if kind == "tacnode":
        return _elliptic(2, order)
    if kind == "A4":
        return _type_one(1, order)
    if kind == "typeI":
        return _type_one(m, order)
    if kind == "typeII":
        if m < 2:
            raise DomainError("type II germs need m ≥ 2 branches")
        return _type_two(m, order)
    if kind == "elliptic":
        return _elliptic(m, order)
    if kind == "ribbon_tail":
        return _ribbon_tail(m, order)
    if kind == "ribbon_line":
        return _germ(["ribbon", "reduced"], [term(0, 1), term(0, 0, 1), term(1, 1)], "ribbon_line", order)
    if kind == "two_cusps":
        return _germ(
            ["reduced"] * 2,
            [term(0, 2), term(0, 3), term(1, 2), term(1, 3)],
            "two_cusps",
            order,
        )
    raise DomainError(f"unknown germ kind {kind}")


@dataclass(frozen=True)
class GermReport:
    name: str
    delta: int
    genus: int | None
    conductor_length: int
    two_delta: bool
    gorenstein: bool
    decomposable: bool

    def as_row(self) -> dict[str, object]:
        return {
            "name": self.name,
            "delta": self.delta,
            "genus": self.genus,
            "conductor_length": self.conductor_length,
            "two_delta": self.two_delta,
            "gorenstein": self.gorenstein,
            "decomposable": self.decomposable,
        }


@beartype
def germ_report(algebra: LocalAlgebra) -> GermReport:
    return GermReport(
        name=algebra.name,
        delta=delta_invariant(algebra),
        genus=None if algebra.has_ribbon else genus(algebra),
        conductor_length=conductor_length(algebra),
        two_delta=check_two_delta(algebra),
        gorenstein=gorenstein_check(algebra),
        decomposable=decomposability_check(algebra),
    )


class ExpectedInvariants(BaseModel):
    model_config = ConfigDict(extra="forbid")

    delta: int
    genus: int | None = None
    two_delta: bool
    gorenstein: bool
    decomposable: bool


class CorpusEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    kind: GermKind
    m: int = 1
    expected: ExpectedInvariants

    def algebra(self, order: int = DEFAULT_TRUNCATION) -> LocalAlgebra:
        return replace(table_germ(self.kind, self.m, order), name=self.name)

    def mismatches(self, report: GermReport) -> list[str]:
        found = []
        for key, want in self.expected.model_dump().items():
            got = getattr(report, key)
            if want is not None and got != want:
                found.append(f"{self.name}: {key} is {got}, expected {want}")
        return found


def load_corpus() -> list[CorpusEntry]:
    text = resources.files("tropical_vz").joinpath("data/germ_corpus.yaml").read_text()
    return [CorpusEntry.model_validate(entry) for entry in yaml.safe_load(text)["germs"]]
