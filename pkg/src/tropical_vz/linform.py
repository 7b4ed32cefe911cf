"""Linear forms on the coordinates of a base cone.

Edge lengths, λ-values and break positions are all LinForms in target edge
lengths. Coefficients are rationals whose denominator divides 4: a source edge
of expansion two has length ℓ/2, and the Kummer extension halves that again.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

from tropical_vz.errors import LatticeError

Rational = Fraction | int
ALLOWED_DENOMINATORS = (1, 2, 4)


def as_fraction(value: Rational | str) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def format_rational(value: Rational) -> str:
    q = as_fraction(value)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str | int) -> Fraction:
    return Fraction(text)


@dataclass(frozen=True)
class LinForm:
    terms: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self):
        for index, coeff in self.terms:
            if coeff.denominator not in ALLOWED_DENOMINATORS:
                raise LatticeError(
                    f"coefficient {coeff} of coordinate {index} leaves the quarter lattice"
                )

    @classmethod
    def of(cls, coeffs: Mapping[int, Rational] | None = None) -> LinForm:
        cleaned = {
            int(i): as_fraction(c) for i, c in (coeffs or {}).items() if c != 0
        }
        return cls(tuple(sorted(cleaned.items())))

    @classmethod
    def zero(cls) -> LinForm:
        return cls()

    @classmethod
    def coordinate(cls, index: int, coeff: Rational = 1) -> LinForm:
        return cls.of({index: coeff})

    @classmethod
    def from_vector(cls, vector: Sequence[Rational]) -> LinForm:
        return cls.of(dict(enumerate(vector)))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.terms)

    def coefficient(self, index: int) -> Fraction:
        return self.as_dict().get(index, Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.terms)

    @property
    def denominator(self) -> int:
        return math.lcm(1, *(c.denominator for _, c in self.terms))

    @property
    def is_integral(self) -> bool:
        return self.denominator == 1

    def _combine(self, other: LinForm, sign: int) -> LinForm:
        merged = self.as_dict()
        for index, coeff in other.terms:
            merged[index] = merged.get(index, Fraction(0)) + sign * coeff
        return LinForm.of(merged)

    def __add__(self, other: LinForm) -> LinForm:
        return self._combine(other, 1)

    def __sub__(self, other: LinForm) -> LinForm:
        return self._combine(other, -1)

    def __neg__(self) -> LinForm:
        return LinForm.of({i: -c for i, c in self.terms})

    def __mul__(self, scalar: Rational) -> LinForm:
        q = as_fraction(scalar)
        return LinForm.of({i: q * c for i, c in self.terms})

    __rmul__ = __mul__

    def __truediv__(self, scalar: Rational) -> LinForm:
        return self * (1 / as_fraction(scalar))

    def evaluate(self, point: Sequence[Rational]) -> Fraction:
        return sum((c * as_fraction(point[i]) for i, c in self.terms), Fraction(0))

    def vector(self, dim: int) -> tuple[Fraction, ...]:
        coeffs = self.as_dict()
        return tuple(coeffs.get(i, Fraction(0)) for i in range(dim))

    def integer_normal(self, dim: int) -> tuple[int, ...]:
        """Primitive integer vector positively proportional to this form."""
        vec = self.vector(dim)
        scale = math.lcm(1, *(c.denominator for c in vec))
        ints = [int(c * scale) for c in vec]
        divisor = math.gcd(*ints) or 1
        return tuple(i // divisor for i in ints)

    def render(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for index, coeff in self.terms:
            name = names[index] if index < len(names) else f"x{index}"
            sign = "-" if coeff < 0 else "+"
            magnitude = abs(coeff)
            body = name if magnitude == 1 else f"{magnitude}*{name}"
            parts.append(f"{sign} {body}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def to_json(self, names: Sequence[str]) -> dict[str, str]:
        return {names[i]: format_rational(c) for i, c in self.terms}

    @classmethod
    def from_json(cls, data: Mapping[str, str], names: Sequence[str]) -> LinForm:
        index = {name: i for i, name in enumerate(names)}
        return cls.of({index[k]: parse_rational(v) for k, v in data.items()})


def form_sum(forms: Iterable[LinForm]) -> LinForm:
    total = LinForm.zero()
    for form in forms:
        total = total + form
    return total
