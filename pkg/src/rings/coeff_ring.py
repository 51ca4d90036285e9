"""
Coefficient ring O' = W(F_{p^d})[π]/(π^e - p), truncated at p^N.

A nonzero Coeff is stored as π^val · u with u a unit of O'/π^{eN}.  The unit
is a raw tuple of e·d integers mod p^N, entry k·d + i holding the coefficient
of π^k w^i.  Zeros carry a floor: the π-adic precision below which they are
known to vanish.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy

from ..errors import DivisionByZeroPrecision, InvalidInput, NotIntegral, SpecMismatch
from .residue_field import FieldElement, ResidueField, polymul_mod, polypow_mod, residue_field

Raw = Tuple[int, ...]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AtLeast:
    """Valuation of a value known only to be zero to some precision."""
    bound: Fraction

    def __str__(self) -> str:
        return f">={self.bound}"


def p_valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class CoeffRingSpec:
    """Parameters (p, d, Φ, e, N) of the truncated coefficient ring."""

    p: int
    d: int
    phi: Tuple[int, ...]
    e: int = 1
    N: int = 8

    def __post_init__(self):
        if not sympy.isprime(self.p):
            raise InvalidInput(f"p={self.p} is not prime")
        if self.d < 1 or self.e < 1 or self.N < 1:
            raise InvalidInput("d, e and N must be positive")
        if len(self.phi) != self.d:
            raise InvalidInput(f"Φ has {len(self.phi)} coefficients, expected d={self.d}")
        object.__setattr__(self, 'phi', tuple(int(c) % self.p for c in self.phi))
        if not is_irreducible(self.p, self.phi):
            raise InvalidInput(f"Φ={self.phi} is not irreducible mod {self.p}")

    @property
    def modulus(self) -> int:
        return self.p ** self.N

    @property
    def q(self) -> int:
        return self.p ** self.d

    @property
    def precision(self) -> int:
        """Absolute precision in π-units."""
        return self.e * self.N

    @cached_property
    def field(self) -> ResidueField:
        return residue_field(self.p, self.phi)

    def check_same(self, other: 'CoeffRingSpec') -> None:
        if self != other:
            raise SpecMismatch(f"ring mismatch: {self} vs {other}")

    def describe(self) -> str:
        phi = ",".join(str(c) for c in self.phi)
        return f"p={self.p} d={self.d} phi={phi} e={self.e} N={self.N}"

    # -- Witt-vector level (tuples of d ints mod p^N) -----------------

    def w_one(self) -> Tuple[int, ...]:
        return (1,) + (0,) * (self.d - 1)

    def w_mul(self, a: Sequence[int], b: Sequence[int]) -> Tuple[int, ...]:
        return polymul_mod(a, b, self.phi, self.modulus)

    def w_inverse(self, a: Sequence[int]) -> Tuple[int, ...]:
        """Newton inverse of a unit of W/p^N."""
        residue = self.field.element(a)
        y = tuple(self.field.inv(residue))
        two = (2,) + (0,) * (self.d - 1)
        M = self.modulus
        for _ in range(self.N.bit_length() + 1):
            ay = self.w_mul(a, y)
            y = self.w_mul(y, tuple((t - s) % M for t, s in zip(two, ay)))
        return y

    @cached_property
    def _frobenius_tables(self) -> List[List[Tuple[int, ...]]]:
        """tables[k][i] = σ^k(w^i) in W/p^N."""
        M, d, p = self.modulus, self.d, self.p
        x = tuple(1 if i == 1 else 0 for i in range(d)) if d > 1 else ((-self.phi[0]) % M,)
        y = polypow_mod(x, p, self.phi, M)
        if d > 1:
            dphi = [(i + 1) * c for i, c in enumerate(self.phi[1:])] + [d]
            monic = list(self.phi) + [1]
            for _ in range(self.N + 1):
                value = _poly_eval(self, monic, y)
                slope = _poly_eval(self, dphi, y)
                correction = self.w_mul(value, self.w_inverse(slope))
                y = tuple((a - b) % M for a, b in zip(y, correction))
        tables = [[polypow_mod(x, i, self.phi, M) for i in range(d)]]
        image = y
        for _ in range(1, d):
            tables.append([polypow_mod(image, i, self.phi, M) for i in range(d)])
            image = _apply_table(tables[1], image, M)
        logger.debug(f"Frobenius tables built for {self.describe()}")
        return tables

    def w_frobenius(self, a: Sequence[int], power: int = 1) -> Tuple[int, ...]:
        power %= self.d
        if power == 0:
            return tuple(a)
        return _apply_table(self._frobenius_tables[power], a, self.modulus)

    # -- raw O'/π^{eN} elements ---------------------------------------

    def raw_zero(self) -> Raw:
        return (0,) * (self.e * self.d)

    def raw_one(self) -> Raw:
        return (1,) + (0,) * (self.e * self.d - 1)

    def components(self, raw: Raw) -> List[Tuple[int, ...]]:
        d = self.d
        return [raw[k * d:(k + 1) * d] for k in range(self.e)]

    def raw_from_components(self, comps: Sequence[Sequence[int]]) -> Raw:
        M = self.modulus
        return tuple(c % M for comp in comps for c in comp)

    def raw_add(self, a: Raw, b: Raw) -> Raw:
        M = self.modulus
        return tuple((x + y) % M for x, y in zip(a, b))

    def raw_neg(self, a: Raw) -> Raw:
        M = self.modulus
        return tuple((-x) % M for x in a)

    def raw_mul(self, a: Raw, b: Raw) -> Raw:
        e, M, p = self.e, self.modulus, self.p
        ca, cb = self.components(a), self.components(b)
        acc = [[0] * self.d for _ in range(e)]
        for k1, x in enumerate(ca):
            if not any(x):
                continue
            for k2, y in enumerate(cb):
                if not any(y):
                    continue
                w = self.w_mul(x, y)
                k = k1 + k2
                if k >= e:
                    k -= e
                    w = tuple(c * p for c in w)
                acc[k] = [(s + t) % M for s, t in zip(acc[k], w)]
        return self.raw_from_components(acc)

    def raw_pi_valuation(self, a: Raw) -> Optional[int]:
        best = None
        for k, comp in enumerate(self.components(a)):
            nonzero = [c for c in comp if c]
            if not nonzero:
                continue
            v = self.e * min(p_valuation(c, self.p) for c in nonzero) + k
            best = v if best is None else min(best, v)
        return best

    def raw_shift_up(self, a: Raw, m: int) -> Raw:
        """Multiply by π^m."""
        if m >= self.precision:
            return self.raw_zero()
        comps = self.components(a)
        M, p = self.modulus, self.p
        for _ in range(m):
            top = comps[-1]
            comps = [tuple((c * p) % M for c in top)] + comps[:-1]
        return self.raw_from_components(comps)

    def raw_shift_down(self, a: Raw, m: int) -> Raw:
        """Divide by π^m, assuming π^m divides a; lost high digits read as zero."""
        comps = self.components(a)
        p = self.p
        for _ in range(m):
            bottom = comps[0]
            comps = comps[1:] + [tuple(c // p for c in bottom)]
        return self.raw_from_components(comps)

    def raw_truncate(self, a: Raw, length: int) -> Raw:
        """Reduce modulo π^length."""
        if length >= self.precision:
            return a
        comps = []
        for k, comp in enumerate(self.components(a)):
            digits = -(-(length - k) // self.e)
            modulus = self.p ** digits if digits > 0 else 1
            comps.append(tuple(c % modulus for c in comp))
        return self.raw_from_components(comps)

    def raw_inverse(self, a: Raw) -> Raw:
        """Newton inverse of a unit."""
        y = tuple(self.w_inverse(self.components(a)[0])) + (0,) * (self.d * (self.e - 1))
        two = self.raw_add(self.raw_one(), self.raw_one())
        for _ in range(self.precision.bit_length() + 1):
            y = self.raw_mul(y, self.raw_add(two, self.raw_neg(self.raw_mul(a, y))))
        return y

    def raw_frobenius(self, a: Raw, power: int = 1) -> Raw:
        return self.raw_from_components([self.w_frobenius(c, power) for c in self.components(a)])

    def raw_residue(self, a: Raw) -> FieldElement:
        return self.field.element(self.components(a)[0])

    def teichmuller_raw(self, residue: FieldElement) -> Raw:
        return _teichmuller(self, tuple(residue))


def _poly_eval(spec: CoeffRingSpec, coefficients: Sequence[int], y: Sequence[int]) -> Tuple[int, ...]:
    M = spec.modulus
    acc = (0,) * spec.d
    for c in reversed(coefficients):
        acc = spec.w_mul(acc, y)
        acc = (acc[0] + c) % M, *acc[1:]
    return tuple(acc)


def _apply_table(table: Sequence[Sequence[int]], a: Sequence[int], modulus: int) -> Tuple[int, ...]:
    out = [0] * len(a)
    for coefficient, image in zip(a, table):
        if coefficient:
            for i, c in enumerate(image):
                out[i] += coefficient * c
    return tuple(c % modulus for c in out)


@lru_cache(maxsize=4096)
def _teichmuller(spec: CoeffRingSpec, residue: FieldElement) -> Raw:
    w = polypow_mod(residue, spec.q ** spec.N, spec.phi, spec.modulus)
    return tuple(w) + (0,) * (spec.d * (spec.e - 1))


def is_irreducible(p: int, phi: Sequence[int]) -> bool:
    x = sympy.Symbol('x')
    coeffs = [1] + [int(c) for c in reversed(phi)]
    return sympy.Poly(coeffs, x, modulus=p).is_irreducible


def default_defining_polynomial(p: int, d: int) -> Tuple[int, ...]:
    """Lexicographically smallest monic irreducible Φ of degree d over F_p."""
    if d == 1:
        return (0,)
    for index in range(p ** d):
        digits = []
        n = index
        for _ in range(d):
            n, digit = divmod(n, p)
            digits.append(digit)
        if digits[0] and is_irreducible(p, digits):
            return tuple(digits)
    raise InvalidInput(f"no irreducible polynomial of degree {d} over F_{p}")


def make_spec(p: int, d: int = 1, e: int = 1, N: int = 8, phi: Optional[Sequence[int]] = None) -> CoeffRingSpec:
    return CoeffRingSpec(p=p, d=d, phi=tuple(phi) if phi is not None else default_defining_polynomial(p, d), e=e, N=N)


Valuation = Union[Fraction, AtLeast]


class Coeff:
    """Element of O' with floating relative precision.

    A nonzero value knows its absolute precision ``prec`` in π-units: digits
    at π^prec and above are unknown and stored as zero.  Equality is tested
    modulo the coarser of the two precisions.
    """

    __slots__ = ('spec', 'val', 'unit', 'floor', 'prec')

    def __init__(self, spec: CoeffRingSpec, val: Optional[int], unit: Optional[Raw], floor: Optional[int] = None,
                 prec: Optional[int] = None):
        self.spec = spec
        self.val = val
        self.unit = unit
        self.floor = floor
        self.prec = None if unit is None else (val + spec.precision if prec is None else prec)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, spec: CoeffRingSpec, floor: Optional[int] = None) -> 'Coeff':
        return cls(spec, None, None, spec.precision if floor is None else floor)

    @classmethod
    def one(cls, spec: CoeffRingSpec) -> 'Coeff':
        return cls(spec, 0, spec.raw_one())

    @classmethod
    def pi(cls, spec: CoeffRingSpec, power: int = 1) -> 'Coeff':
        return cls(spec, power, spec.raw_one())

    @classmethod
    def _make(cls, spec: CoeffRingSpec, val: int, unit: Raw, prec: int) -> 'Coeff':
        """π^val·unit known modulo π^prec; drops the unknown high digits."""
        if val >= prec:
            return cls.zero(spec, prec)
        length = prec - val
        if length < spec.precision:
            unit = spec.raw_truncate(unit, length)
        return cls(spec, val, unit, prec=prec)

    @classmethod
    def from_raw(cls, spec: CoeffRingSpec, raw: Raw, val_offset: int = 0, prec: Optional[int] = None) -> 'Coeff':
        if prec is None:
            prec = val_offset + spec.precision
        k = spec.raw_pi_valuation(raw)
        if k is None or val_offset + k >= prec:
            return cls.zero(spec, prec)
        return cls._make(spec, val_offset + k, spec.raw_shift_down(raw, k), prec)

    @classmethod
    def from_int(cls, spec: CoeffRingSpec, n: int) -> 'Coeff':
        return cls.from_fraction(spec, Fraction(n))

    @classmethod
    def from_fraction(cls, spec: CoeffRingSpec, value: Fraction) -> 'Coeff':
        value = Fraction(value)
        if value == 0:
            return cls.zero(spec)
        num, den = value.numerator, value.denominator
        a, b = p_valuation(num, spec.p), p_valuation(den, spec.p)
        num //= spec.p ** a
        den //= spec.p ** b
        M = spec.modulus
        unit_int = (num * pow(den, -1, M)) % M
        raw = (unit_int,) + (0,) * (spec.e * spec.d - 1)
        return cls(spec, spec.e * (a - b), raw)

    @classmethod
    def from_digits(cls, spec: CoeffRingSpec, digits: Sequence[int], pi_power: int = 0) -> 'Coeff':
        """π^pi_power · (Σ digits[i] w^i) with integer digits."""
        comp = list(digits)[:spec.d] + [0] * max(0, spec.d - len(digits))
        raw = spec.raw_from_components([comp] + [[0] * spec.d] * (spec.e - 1))
        return cls.from_raw(spec, raw, pi_power)

    @classmethod
    def from_components(cls, spec: CoeffRingSpec, comps: Sequence[Sequence[int]], pi_power: int = 0) -> 'Coeff':
        return cls.from_raw(spec, spec.raw_from_components(comps), pi_power)

    @classmethod
    def teichmuller(cls, spec: CoeffRingSpec, residue: FieldElement) -> 'Coeff':
        if spec.field.is_zero(residue):
            return cls.zero(spec)
        return cls(spec, 0, spec.teichmuller_raw(residue))

    # -- predicates ---------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.unit is None

    @property
    def absolute_precision(self) -> int:
        """π-adic precision: the floor of a zero, prec otherwise."""
        return self.floor if self.is_zero else self.prec

    def valuation(self) -> Valuation:
        """p-adic valuation; AtLeast for zero-to-precision values."""
        if self.is_zero:
            return AtLeast(Fraction(self.floor, self.spec.e))
        return Fraction(self.val, self.spec.e)

    # -- arithmetic ---------------------------------------------------

    def _check(self, other: 'Coeff') -> None:
        if other.spec is not self.spec and other.spec != self.spec:
            raise SpecMismatch("coefficients over different rings")

    def __add__(self, other: 'Coeff') -> 'Coeff':
        self._check(other)
        spec = self.spec
        if self.is_zero and other.is_zero:
            return Coeff.zero(spec, min(self.floor, other.floor))
        if self.is_zero or other.is_zero:
            zero, value = (self, other) if self.is_zero else (other, self)
            return value.truncate(zero.floor)
        lo, hi = (self, other) if self.val <= other.val else (other, self)
        prec = min(lo.prec, hi.prec)
        gap = hi.val - lo.val
        if lo.val + gap >= prec:
            return lo.truncate(prec)
        raw = spec.raw_add(lo.unit, spec.raw_shift_up(hi.unit, gap))
        return Coeff.from_raw(spec, raw, lo.val, prec)

    def __neg__(self) -> 'Coeff':
        if self.is_zero:
            return self
        return Coeff._make(self.spec, self.val, self.spec.raw_neg(self.unit), self.prec)

    def __sub__(self, other: 'Coeff') -> 'Coeff':
        return self + (-other)

    def __mul__(self, other: 'Coeff') -> 'Coeff':
        self._check(other)
        if self.is_zero or other.is_zero:
            a = self.floor if self.is_zero else self.val
            b = other.floor if other.is_zero else other.val
            return Coeff.zero(self.spec, a + b)
        prec = min(self.prec + other.val, other.prec + self.val)
        return Coeff._make(self.spec, self.val + other.val, self.spec.raw_mul(self.unit, other.unit), prec)

    def inverse(self) -> 'Coeff':
        if self.is_zero:
            raise DivisionByZeroPrecision("inverse of an element that is zero to precision")
        length = self.prec - self.val
        return Coeff._make(self.spec, -self.val, self.spec.raw_inverse(self.unit), length - self.val)

    def __truediv__(self, other: 'Coeff') -> 'Coeff':
        return self * other.inverse()

    def __pow__(self, exponent: int) -> 'Coeff':
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = Coeff.one(self.spec)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def frobenius(self, power: int = 1) -> 'Coeff':
        """σ^power; σ fixes π and σ^{-1} = σ^{d-1}."""
        if self.is_zero or self.spec.d == 1:
            return self
        return Coeff._make(self.spec, self.val, self.spec.raw_frobenius(self.unit, power), self.prec)

    def reduce(self) -> FieldElement:
        """Image in the residue field; needs val ≥ 0."""
        field_ = self.spec.field
        if self.is_zero:
            return field_.zero
        if self.val < 0:
            raise NotIntegral(f"cannot reduce element of valuation {self.valuation()}")
        if self.val > 0:
            return field_.zero
        return self.spec.raw_residue(self.unit)

    def truncate(self, absolute: int) -> 'Coeff':
        """Reduce modulo π^absolute, keeping the own precision where it is smaller."""
        if self.is_zero:
            return Coeff.zero(self.spec, min(self.floor, absolute))
        if absolute >= self.prec:
            return self
        return Coeff._make(self.spec, self.val, self.unit, absolute)

    def mantissa_components(self) -> List[Tuple[int, Tuple[int, ...]]]:
        """Nonzero (π power, W digits) pairs summing to the element."""
        if self.is_zero:
            return []
        return [(self.val + k, tuple(comp)) for k, comp in enumerate(self.spec.components(self.unit)) if any(comp)]

    # -- comparison / display -----------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Coeff):
            return NotImplemented
        if self.spec != other.spec:
            return False
        return (self - other).is_zero

    def __hash__(self) -> int:
        # equality is modulo precision, so only the ring can be hashed
        return hash((self.spec.p, self.spec.d, self.spec.e))

    def __repr__(self) -> str:
        return f"Coeff({format_coeff(self)})"


def format_coeff(c: Coeff) -> str:
    """Literal form used by the instance format, without a t factor."""
    if c.is_zero:
        return "0"
    parts = []
    for power, digits in c.mantissa_components():
        parts.append(_format_component(c.spec, power, digits))
    return " + ".join(parts)


def _format_component(spec: CoeffRingSpec, power: int, digits: Sequence[int]) -> str:
    prefix = "" if power == 0 else f"pi^{power}*"
    if spec.d == 1:
        return f"{prefix}{digits[0]}"
    body = "+".join(
        str(c) if i == 0 else (f"{c}*w" if i == 1 else f"{c}*w^{i}")
        for i, c in enumerate(digits)
    )
    return f"{prefix}({body})"


def coeff_valuation(c: Coeff) -> Valuation:
    return c.valuation()


def embed_extension(spec: CoeffRingSpec, factor: int) -> Tuple[CoeffRingSpec, Dict[str, Raw]]:
    """Ring with residue degree d·factor plus the image of w under the embedding."""
    if factor < 1:
        raise InvalidInput("extension factor must be positive")
    big = make_spec(spec.p, spec.d * factor, spec.e, spec.N)
    if spec.d == 1:
        root = ((-spec.phi[0]) % big.modulus,) + (0,) * (big.d - 1)
        return big, {'w': root + (0,) * (big.d * (big.e - 1))}
    big_field = big.field
    phi_coeffs = [big_field.from_int(c) for c in spec.phi] + [big_field.one]
    residue_root = next((x for x in big_field.elements() if big_field.is_zero(big_field.evaluate(phi_coeffs, x))), None)
    if residue_root is None:
        raise InvalidInput(f"Φ has no root in F_{big.q}")
    M = big.modulus
    y = tuple(residue_root)
    monic = list(spec.phi) + [1]
    dphi = [(i + 1) * c for i, c in enumerate(spec.phi[1:])] + [spec.d]
    for _ in range(big.N + 1):
        value = _poly_eval(big, monic, y)
        slope = _poly_eval(big, dphi, y)
        correction = big.w_mul(value, big.w_inverse(slope))
        y = tuple((a - b) % M for a, b in zip(y, correction))
    logger.info(f"Embedded residue degree {spec.d} into {big.d}")
    return big, {'w': tuple(y) + (0,) * (big.d * (big.e - 1))}


def embed_coeff(c: Coeff, big: CoeffRingSpec, image: Dict[str, Raw]) -> Coeff:
    """Push a coefficient through the embedding returned by embed_extension."""
    if c.is_zero:
        return Coeff.zero(big, c.floor)
    w = image['w'][:big.d]
    powers = [big.w_one()]
    for _ in range(1, c.spec.d):
        powers.append(big.w_mul(powers[-1], w))
    comps = []
    for comp in c.spec.components(c.unit):
        acc = [0] * big.d
        for coefficient, wp in zip(comp, powers):
            acc = [(s + coefficient * t) % big.modulus for s, t in zip(acc, wp)]
        comps.append(acc)
    return Coeff.from_components(big, comps, c.val).truncate(c.prec)


def transfer_coeff(c: Coeff, spec: CoeffRingSpec, exact: bool = False) -> Coeff:
    """Move c to a ring differing only in N.

    Narrowing reduces the digits; widening with exact=True reads the stored
    digits as exact, which is how instance literals are meant.
    """
    if (spec.p, spec.d, spec.e, spec.phi) != (c.spec.p, c.spec.d, c.spec.e, c.spec.phi):
        raise SpecMismatch(f"cannot transfer between {c.spec.describe()} and {spec.describe()}")
    if c.is_zero:
        return Coeff.zero(spec, min(c.floor, spec.precision))
    unit = tuple(x % spec.modulus for x in c.unit)
    prec = c.val + spec.precision
    if not exact:
        prec = min(prec, c.prec)
    return Coeff._make(spec, c.val, unit, prec)
