"""
Elementary-matrix factorization over the residue Laurent polynomial ring F_q[u, u^{-1}].

Moves are transvections T(i, j, f) = I + f·E_ij, swaps S(i, j) and scalings
M(i, c·u^m).  factor_elementary returns moves whose ordered product is the
input matrix; lift_matrix carries a matrix back to the series ring
through u ↦ π^{a0} t^{b0}.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ..errors import InvalidInput, NoGrading, NotIntegral
from ..rings.coeff_ring import Coeff
from ..rings.residue_field import FieldElement, ResidueField
from ..rings.series_ring import PrecisionProfile, Series
from .series_matrix import SeriesMatrix

logger = logging.getLogger(__name__)


class LaurentPoly:
    """Finitely supported map exponent → nonzero field element."""

    __slots__ = ('field', 'terms')

    def __init__(self, field: ResidueField, terms: Optional[Dict[int, FieldElement]] = None):
        self.field = field
        self.terms = {int(m): tuple(c) for m, c in (terms or {}).items() if any(c)}

    @classmethod
    def monomial(cls, field: ResidueField, c: FieldElement, m: int = 0) -> 'LaurentPoly':
        return cls(field, {m: c})

    @classmethod
    def zero(cls, field: ResidueField) -> 'LaurentPoly':
        return cls(field)

    @classmethod
    def one(cls, field: ResidueField) -> 'LaurentPoly':
        return cls(field, {0: field.one})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    @property
    def low(self) -> int:
        return min(self.terms)

    @property
    def high(self) -> int:
        return max(self.terms)

    @property
    def span(self) -> int:
        return self.high - self.low

    def __add__(self, other: 'LaurentPoly') -> 'LaurentPoly':
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = self.field.add(terms[m], c) if m in terms else c
        return LaurentPoly(self.field, terms)

    def __neg__(self) -> 'LaurentPoly':
        return LaurentPoly(self.field, {m: self.field.neg(c) for m, c in self.terms.items()})

    def __sub__(self, other: 'LaurentPoly') -> 'LaurentPoly':
        return self + (-other)

    def __mul__(self, other: 'LaurentPoly') -> 'LaurentPoly':
        terms: Dict[int, FieldElement] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 + m2
                product = self.field.mul(c1, c2)
                terms[m] = self.field.add(terms[m], product) if m in terms else product
        return LaurentPoly(self.field, terms)

    def monomial_inverse(self) -> 'LaurentPoly':
        if not self.is_monomial:
            raise InvalidInput(f"{self} is not a unit of the Laurent ring")
        (m, c), = self.terms.items()
        return LaurentPoly(self.field, {-m: self.field.inv(c)})

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentPoly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.terms.items())))

    def __repr__(self) -> str:
        return f"LaurentPoly({self})"

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        return " + ".join(f"{self.field.format(c)}*u^({m})" for m, c in sorted(self.terms.items()))


class LaurentPolyMatrix:
    """Square matrix over F_q[u, u^{-1}]."""

    def __init__(self, field: ResidueField, entries: Sequence[Sequence[LaurentPoly]]):
        self.field = field
        self.entries = [list(row) for row in entries]
        self.n = len(self.entries)
        if any(len(row) != self.n for row in self.entries):
            raise InvalidInput("Laurent matrix must be square")

    @classmethod
    def identity(cls, field: ResidueField, n: int) -> 'LaurentPolyMatrix':
        return cls(field, [[LaurentPoly.one(field) if i == j else LaurentPoly.zero(field) for j in range(n)]
                           for i in range(n)])

    def __getitem__(self, index) -> LaurentPoly:
        i, j = index
        return self.entries[i][j]

    def __mul__(self, other: 'LaurentPolyMatrix') -> 'LaurentPolyMatrix':
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = LaurentPoly.zero(self.field)
                for k in range(n):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(acc)
            out.append(row)
        return LaurentPolyMatrix(self.field, out)

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentPolyMatrix) and self.entries == other.entries

    def __repr__(self) -> str:
        return "LaurentPolyMatrix([" + " ; ".join(", ".join(str(e) for e in row) for row in self.entries) + "])"

    def determinant(self) -> LaurentPoly:
        return _laplace(self.field, self.entries)

    def is_identity(self) -> bool:
        return self == LaurentPolyMatrix.identity(self.field, self.n)

    @classmethod
    def from_series_matrix(cls, m: SeriesMatrix) -> 'LaurentPolyMatrix':
        """Reduction modulo π with u = t; exponents must be integers."""
        field = m.profile.ring.field
        rows = []
        for row in m.entries:
            out = []
            for entry in row:
                terms = {}
                for exponent, residue in entry.reduce().terms.items():
                    if exponent.denominator != 1:
                        raise InvalidInput(f"exponent {exponent} is not an integer power of u")
                    terms[int(exponent)] = residue
                out.append(LaurentPoly(field, terms))
            rows.append(out)
        return cls(field, rows)


def _laplace(field: ResidueField, entries: List[List[LaurentPoly]]) -> LaurentPoly:
    n = len(entries)
    if n == 0:
        return LaurentPoly.one(field)
    if n == 1:
        return entries[0][0]
    total = LaurentPoly.zero(field)
    for j, entry in enumerate(entries[0]):
        if entry.is_zero:
            continue
        minor = [row[:j] + row[j + 1:] for row in entries[1:]]
        term = entry * _laplace(field, minor)
        total = total + term if j % 2 == 0 else total - term
    return total


@dataclass(frozen=True)
class NotUnit:
    """Marker returned when a determinant is not a monomial."""
    determinant: str = ''

    def __bool__(self) -> bool:
        return False


def laurent_det_unit(m: LaurentPolyMatrix) -> Union[Tuple[FieldElement, int], NotUnit]:
    det = m.determinant()
    if not det.is_monomial:
        return NotUnit(str(det))
    (power, c), = det.terms.items()
    return c, power


@dataclass(frozen=True)
class ElementaryMove:
    """kind 'T' (transvection), 'S' (swap) or 'M' (scale by c·u^m)."""
    kind: str
    i: int
    j: int = -1
    poly: Optional[LaurentPoly] = None
    c: Optional[FieldElement] = None
    m: int = 0

    def __post_init__(self):
        if self.kind in ('T', 'S') and self.i == self.j:
            raise InvalidInput(f"move {self.kind} needs distinct indices")
        if self.kind == 'M' and (self.c is None or not any(self.c)):
            raise InvalidInput("scaling needs a nonzero field element")

    @classmethod
    def transvection(cls, i: int, j: int, poly: LaurentPoly) -> 'ElementaryMove':
        return cls('T', i, j, poly=poly)

    @classmethod
    def swap(cls, i: int, j: int) -> 'ElementaryMove':
        return cls('S', i, j)

    @classmethod
    def scale(cls, i: int, c: FieldElement, m: int) -> 'ElementaryMove':
        return cls('M', i, c=tuple(c), m=m)

    def inverse(self, field: ResidueField) -> 'ElementaryMove':
        if self.kind == 'T':
            return ElementaryMove.transvection(self.i, self.j, -self.poly)
        if self.kind == 'S':
            return self
        return ElementaryMove.scale(self.i, field.inv(self.c), -self.m)

    def matrix(self, field: ResidueField, n: int) -> LaurentPolyMatrix:
        out = LaurentPolyMatrix.identity(field, n)
        rows = out.entries
        if self.kind == 'T':
            rows[self.i][self.j] = self.poly
        elif self.kind == 'S':
            rows[self.i][self.i] = LaurentPoly.zero(field)
            rows[self.j][self.j] = LaurentPoly.zero(field)
            rows[self.i][self.j] = LaurentPoly.one(field)
            rows[self.j][self.i] = LaurentPoly.one(field)
        else:
            rows[self.i][self.i] = LaurentPoly.monomial(field, self.c, self.m)
        return out

    def serialize(self, field: ResidueField) -> str:
        if self.kind == 'T':
            return f"T {self.i} {self.j} {self.poly}"
        if self.kind == 'S':
            return f"S {self.i} {self.j}"
        return f"M {self.i} {field.format(self.c)} {self.m}"


def moves_product(moves: Sequence[ElementaryMove], field: ResidueField, n: int) -> LaurentPolyMatrix:
    result = LaurentPolyMatrix.identity(field, n)
    for move in moves:
        result = result * move.matrix(field, n)
    return result


class ElementaryFactorizer:
    """Euclidean elimination on exponent span, column by column."""

    def __init__(self, field: ResidueField):
        self.field = field
        self.logger = logging.getLogger(__name__)

    def factor(self, m: LaurentPolyMatrix) -> List[ElementaryMove]:
        if isinstance(laurent_det_unit(m), NotUnit):
            raise InvalidInput("matrix is not invertible over the Laurent ring")
        field = self.field
        n = m.n
        work = [list(row) for row in m.entries]
        applied: List[ElementaryMove] = []

        def apply(move: ElementaryMove) -> None:
            if move.kind == 'T':
                work[move.i] = [a + move.poly * b for a, b in zip(work[move.i], work[move.j])]
            elif move.kind == 'S':
                work[move.i], work[move.j] = work[move.j], work[move.i]
            else:
                factor = LaurentPoly.monomial(field, move.c, move.m)
                work[move.i] = [factor * a for a in work[move.i]]
            applied.append(move)

        for col in range(n):
            while True:
                rows = [r for r in range(col, n) if not work[r][col].is_zero]
                if not rows:
                    raise InvalidInput(f"column {col} vanished during elimination")
                pivot = min(rows, key=lambda r: (work[r][col].span, r))
                others = [r for r in rows if r != pivot]
                if not others:
                    break
                for r in others:
                    p_entry = work[pivot][col]
                    while not work[r][col].is_zero and work[r][col].span >= p_entry.span:
                        top = work[r][col]
                        coefficient = field.mul(top.terms[top.high], field.inv(p_entry.terms[p_entry.high]))
                        quotient = LaurentPoly.monomial(field, field.neg(coefficient), top.high - p_entry.high)
                        apply(ElementaryMove.transvection(r, pivot, quotient))
            pivot_entry = work[pivot][col]
            if not pivot_entry.is_monomial:
                raise InvalidInput(f"pivot {pivot_entry} in column {col} is not a unit")
            if pivot != col:
                apply(ElementaryMove.swap(col, pivot))
            mono_inv = work[col][col].monomial_inverse()
            for r in range(col):
                if not work[r][col].is_zero:
                    apply(ElementaryMove.transvection(r, col, -(work[r][col] * mono_inv)))
            (power, c), = work[col][col].terms.items()
            if power != 0 or c != field.one:
                apply(ElementaryMove.scale(col, field.inv(c), -power))

        moves = [move.inverse(field) for move in applied]
        self.logger.debug(f"factored {n}x{n} Laurent matrix into {len(moves)} moves")
        return moves


def factor_elementary(m: LaurentPolyMatrix) -> List[ElementaryMove]:
    """Moves whose ordered product equals m."""
    return ElementaryFactorizer(m.field).factor(m)


def invert_moves(moves: Sequence[ElementaryMove], field: ResidueField) -> List[ElementaryMove]:
    """Moves whose product is the inverse of the product of moves."""
    return [move.inverse(field) for move in reversed(moves)]


# -- grading and lifting ----------------------------------------------

def grading_for(r_l: Fraction, profile: PrecisionProfile) -> Tuple[int, Fraction]:
    """Smallest (a0, b0) with π^{a0} t^{b0} of w_{r_l}-degree 0 and b0 < 0 in p^{-h}Z."""
    ring = profile.ring
    r_l = Fraction(r_l)
    if r_l <= 0:
        raise NoGrading(f"radius {r_l} must be positive")
    x = 1 / (ring.e * r_l)
    den = x.denominator
    k = 0
    while den % ring.p == 0:
        den //= ring.p
        k += 1
    a0 = den * ring.p ** max(0, k - profile.h)
    b0 = -a0 * x
    if a0 >= profile.cap_pi or not profile.admits(b0):
        raise NoGrading(f"u = π^{a0} t^{b0} is not representable at h={profile.h}, cap={profile.cap}",
                        r_l=r_l, h=profile.h)
    return a0, b0


def graded_part(x: Series, r_l: Fraction, grading: Tuple[int, Fraction]) -> LaurentPoly:
    """Degree-0 part of x for w_{r_l} written as a polynomial in u = π^{a0} t^{b0}."""
    a0, b0 = grading
    e = x.ring.e
    field = x.ring.field
    terms: Dict[int, FieldElement] = {}
    for exponent, c in x.terms.items():
        if Fraction(c.val, e) + r_l * exponent != 0:
            continue
        if c.val % a0:
            raise NotIntegral(f"π-power {c.val} is not a multiple of {a0}")
        power = c.val // a0
        terms[power] = c.spec.raw_residue(c.unit)
    return LaurentPoly(field, terms)


def graded_matrix(m: SeriesMatrix, r_l: Fraction, grading: Tuple[int, Fraction]) -> LaurentPolyMatrix:
    field = m.profile.ring.field
    return LaurentPolyMatrix(field, [[graded_part(entry, r_l, grading) for entry in row] for row in m.entries])


def lift_poly(poly: LaurentPoly, grading: Tuple[int, Fraction], profile: PrecisionProfile) -> Series:
    """Series image of poly under u ↦ π^{a0} t^{b0} with Teichmüller coefficients."""
    a0, b0 = grading
    ring = profile.ring
    terms = {}
    for m, c in poly.terms.items():
        exponent = b0 * m
        if not profile.admits(exponent):
            raise NoGrading(f"u^{m} lifts to exponent {exponent} outside p^-{profile.h}Z")
        terms[exponent] = Coeff.teichmuller(ring, c) * Coeff.pi(ring, a0 * m)
    return Series(profile, terms, strict=False)


def lift_matrix(m: LaurentPolyMatrix, grading: Tuple[int, Fraction], profile: PrecisionProfile) -> SeriesMatrix:
    """Entrywise lift of a Laurent matrix through u ↦ π^{a0} t^{b0}."""
    return SeriesMatrix(profile, [[lift_poly(entry, grading, profile) for entry in row] for row in m.entries])


def lift_to_series(move: ElementaryMove, grading: Tuple[int, Fraction], profile: PrecisionProfile,
                   n: int) -> SeriesMatrix:
    """Lift of one move's matrix through u ↦ π^{a0} t^{b0}."""
    return lift_matrix(move.matrix(profile.ring.field, n), grading, profile)
