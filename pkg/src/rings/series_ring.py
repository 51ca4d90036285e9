"""
Truncated generalized Laurent series over the coefficient ring.

A Series is a finite map from exponents in p^{-h}Z (inside a window) to
Coeff values.  Terms leaving the window are dropped and set a sticky
truncation flag; terms whose coefficient valuation reaches the profile cap
are dropped silently, being zero at the stored precision.
"""

import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from ..errors import InvalidInput, NotIntegral, NotInvertible, ProfileViolation, SpecMismatch
from .coeff_ring import Coeff, CoeffRingSpec, format_coeff, make_spec, transfer_coeff
from .residue_field import FieldElement

logger = logging.getLogger(__name__)

INF = math.inf

Number = Union[int, Fraction]
Valuation = Union[Fraction, float]


def exponent_level(exponent: Fraction, p: int) -> Optional[int]:
    """Smallest h with exponent ∈ p^{-h}Z, or None when the denominator is not a p-power."""
    den = Fraction(exponent).denominator
    level = 0
    while den % p == 0:
        den //= p
        level += 1
    return level if den == 1 else None


@dataclass(frozen=True)
class PrecisionProfile:
    """Ring, exponent level h, exponent window and absolute valuation cap."""

    ring: CoeffRingSpec
    h: int = 0
    e_min: Fraction = Fraction(-8)
    e_max: Fraction = Fraction(8)
    cap: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, 'e_min', Fraction(self.e_min))
        object.__setattr__(self, 'e_max', Fraction(self.e_max))
        if self.cap is None:
            object.__setattr__(self, 'cap', Fraction(self.ring.N))
        else:
            object.__setattr__(self, 'cap', Fraction(self.cap))
        if self.h < 0:
            raise ProfileViolation(f"exponent level h={self.h} must be non-negative")
        if not self.e_min <= 0 <= self.e_max:
            raise ProfileViolation(f"window [{self.e_min}, {self.e_max}] must contain 0")

    @property
    def p(self) -> int:
        return self.ring.p

    @property
    def cap_pi(self) -> int:
        """Cap in π-units: coefficients with π-valuation at or above it are dropped."""
        return math.ceil(self.cap * self.ring.e)

    @property
    def step(self) -> Fraction:
        return Fraction(1, self.ring.p ** self.h)

    def admits(self, exponent: Fraction) -> bool:
        level = exponent_level(exponent, self.ring.p)
        return level is not None and level <= self.h

    def in_window(self, exponent: Fraction) -> bool:
        return self.e_min <= exponent <= self.e_max

    def with_h(self, h: int) -> 'PrecisionProfile':
        return replace(self, h=h)

    def with_cap(self, cap: Number) -> 'PrecisionProfile':
        return replace(self, cap=Fraction(cap))

    def with_ring(self, ring: CoeffRingSpec) -> 'PrecisionProfile':
        cap = self.cap if self.cap != self.ring.N else None
        return PrecisionProfile(ring, self.h, self.e_min, self.e_max, cap)

    def with_precision(self, extra: int) -> 'PrecisionProfile':
        """Same profile over the ring with N + extra, cap raised alike."""
        ring = make_spec(self.ring.p, self.ring.d, self.ring.e, self.ring.N + extra, self.ring.phi)
        return PrecisionProfile(ring, self.h, self.e_min, self.e_max, self.cap + extra)

    def check_same(self, other: 'PrecisionProfile') -> None:
        if self != other:
            raise SpecMismatch(f"profile mismatch: {self.describe()} vs {other.describe()}")

    def describe(self) -> str:
        text = f"{self.ring.describe()} h={self.h} window={self.e_min},{self.e_max}"
        if self.cap != self.ring.N:
            text += f" cap={self.cap}"
        return text


class Series:
    """Immutable truncated Laurent series."""

    __slots__ = ('profile', 'terms', 'truncated', 'precision_loss')

    def __init__(self, profile: PrecisionProfile, terms: Optional[Dict[Fraction, Coeff]] = None,
                 truncated: bool = False, precision_loss: bool = False, strict: bool = True):
        cleaned: Dict[Fraction, Coeff] = {}
        cap_pi = profile.cap_pi
        for exponent, c in (terms or {}).items():
            exponent = Fraction(exponent)
            if c.is_zero or c.val >= cap_pi:
                continue
            c = c.truncate(cap_pi)
            if not profile.admits(exponent):
                if strict:
                    raise ProfileViolation(f"exponent {exponent} not in p^-{profile.h}Z")
                truncated = True
                continue
            if not profile.in_window(exponent):
                truncated = True
                continue
            cleaned[exponent] = c
        self.profile = profile
        self.terms = cleaned
        self.truncated = truncated
        self.precision_loss = precision_loss

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, profile: PrecisionProfile) -> 'Series':
        return cls(profile)

    @classmethod
    def constant(cls, profile: PrecisionProfile, c: Union[Coeff, Number]) -> 'Series':
        return cls.monomial(profile, c, 0)

    @classmethod
    def one(cls, profile: PrecisionProfile) -> 'Series':
        return cls.constant(profile, Coeff.one(profile.ring))

    @classmethod
    def monomial(cls, profile: PrecisionProfile, c: Union[Coeff, Number], exponent: Number) -> 'Series':
        if not isinstance(c, Coeff):
            c = Coeff.from_fraction(profile.ring, Fraction(c))
        return cls(profile, {Fraction(exponent): c})

    @classmethod
    def from_values(cls, profile: PrecisionProfile, values: Dict[Number, Union[Coeff, Number]]) -> 'Series':
        """Build from {exponent: coefficient}, with integer or rational coefficients allowed."""
        result = cls.zero(profile)
        for exponent, c in values.items():
            result = result + cls.monomial(profile, c, exponent)
        return result

    # -- inspection ---------------------------------------------------

    @property
    def ring(self) -> CoeffRingSpec:
        return self.profile.ring

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def items(self) -> List[Tuple[Fraction, Coeff]]:
        return sorted(self.terms.items())

    def exponents(self) -> List[Fraction]:
        return sorted(self.terms)

    def coefficient(self, exponent: Number) -> Coeff:
        return self.terms.get(Fraction(exponent), Coeff.zero(self.ring))

    def is_constant(self) -> bool:
        return all(exponent == 0 for exponent in self.terms)

    def min_pi_valuation(self) -> Optional[int]:
        if not self.terms:
            return None
        return min(c.val for c in self.terms.values())

    def flags(self) -> Dict[str, bool]:
        return {'truncated': self.truncated, 'precision_loss': self.precision_loss}

    def _derive(self, terms: Dict[Fraction, Coeff], *others: 'Series', truncated: bool = False,
                profile: Optional[PrecisionProfile] = None, precision_loss: bool = False) -> 'Series':
        flag = truncated or self.truncated or any(o.truncated for o in others)
        loss = precision_loss or self.precision_loss or any(o.precision_loss for o in others)
        return Series(profile or self.profile, terms, flag, loss, strict=False)

    def _check(self, other: 'Series') -> None:
        if other.profile is not self.profile:
            self.profile.check_same(other.profile)

    # -- ring operations ----------------------------------------------

    def __add__(self, other: 'Series') -> 'Series':
        self._check(other)
        terms = dict(self.terms)
        for exponent, c in other.terms.items():
            terms[exponent] = terms[exponent] + c if exponent in terms else c
        return self._derive(terms, other)

    def __neg__(self) -> 'Series':
        return self._derive({i: -c for i, c in self.terms.items()})

    def __sub__(self, other: 'Series') -> 'Series':
        return self + (-other)

    def __mul__(self, other: Union['Series', Coeff]) -> 'Series':
        if isinstance(other, Coeff):
            return self.scale(other)
        self._check(other)
        profile = self.profile
        terms: Dict[Fraction, Coeff] = {}
        truncated = False
        for i, a in self.terms.items():
            for j, b in other.terms.items():
                k = i + j
                if not profile.in_window(k):
                    truncated = True
                    continue
                product = a * b
                terms[k] = terms[k] + product if k in terms else product
        return self._derive(terms, other, truncated=truncated)

    def scale(self, c: Coeff) -> 'Series':
        return self._derive({i: a * c for i, a in self.terms.items()})

    def shift_pi(self, power: int) -> 'Series':
        """Multiply by π^power (power may be negative)."""
        return self.scale(Coeff.pi(self.ring, power))

    def __pow__(self, exponent: int) -> 'Series':
        if exponent < 0:
            return series_invert(self) ** (-exponent)
        result = Series.one(self.profile)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        if self.ring != other.ring:
            return False
        support = set(self.terms) | set(other.terms)
        return all((self.coefficient(i) - other.coefficient(i)).is_zero for i in support)

    def __hash__(self) -> int:
        # equal series share their support
        return hash(tuple(sorted(self.terms)))

    def __repr__(self) -> str:
        return f"Series({format_series(self)})"

    def __str__(self) -> str:
        return format_series(self)

    # -- Frobenius and derivation -------------------------------------

    def frobenius(self, power: int = 1) -> 'Series':
        """σ^power: t ↦ t^{p^power}, coefficients through the Witt Frobenius."""
        if power < 0:
            raise InvalidInput("use inverse_frobenius for negative powers")
        factor = self.ring.p ** power
        return self._derive({i * factor: c.frobenius(power) for i, c in self.terms.items()})

    def inverse_frobenius(self) -> 'Series':
        """σ^{-1}: exponents divided by p; lives in the profile with h + 1."""
        profile = self.profile.with_h(self.profile.h + 1)
        p = self.ring.p
        return self._derive({i / p: c.frobenius(-1) for i, c in self.terms.items()}, profile=profile)

    def derivation(self) -> 'Series':
        """∂ = t·d/dt; multipliers with p in the denominator set the precision-loss flag."""
        terms: Dict[Fraction, Coeff] = {}
        loss = False
        for i, c in self.terms.items():
            if i == 0:
                continue
            if i.denominator % self.ring.p == 0:
                loss = True
            terms[i] = c * Coeff.from_fraction(self.ring, i)
        return self._derive(terms, precision_loss=loss)

    # -- valuations ---------------------------------------------------

    def term_valuation(self, exponent: Fraction, r: Number) -> Fraction:
        return self.terms[exponent].valuation() + Fraction(r) * exponent

    def gauss_val(self, r: Number = 0) -> Valuation:
        """val_r = min over terms of v(x_i) + r·i; +inf for the empty series."""
        if not self.terms:
            return INF
        return min(self.term_valuation(i, r) for i in self.terms)

    def dominant_terms(self, r: Number) -> List[Fraction]:
        value = self.gauss_val(r)
        return [i for i in sorted(self.terms) if self.term_valuation(i, r) == value]

    def is_semiunit(self, r: Number) -> bool:
        return len(self.dominant_terms(r)) == 1

    def in_gamma_r(self, r: Number) -> bool:
        """Truncated proxy for the limsup condition: every negative term has v(x_i) ≥ r·(−i)."""
        r = Fraction(r)
        return all(c.valuation() >= r * (-i) for i, c in self.terms.items() if i < 0)

    # -- precision management -----------------------------------------

    def coerce(self, profile: PrecisionProfile) -> 'Series':
        """Embed into a profile over the same ring with at least the current h."""
        self.ring.check_same(profile.ring)
        if profile.h < self.profile.h and any(not profile.admits(i) for i in self.terms):
            raise ProfileViolation(f"cannot coerce exponents of level {self.profile.h} to level {profile.h}")
        return self._derive(dict(self.terms), profile=profile)

    def round_to(self, profile: PrecisionProfile) -> 'Series':
        """Drop exponents outside profile's p^{-h}Z and coefficients at or above its cap."""
        self.ring.check_same(profile.ring)
        kept = {i: c for i, c in self.terms.items() if profile.admits(i)}
        return Series(profile, kept, self.truncated, self.precision_loss, strict=False)

    def transfer(self, profile: PrecisionProfile, exact: bool = False) -> 'Series':
        """Carry the terms to a profile whose ring differs only in N; see transfer_coeff."""
        terms = {i: transfer_coeff(c, profile.ring, exact) for i, c in self.terms.items()}
        return Series(profile, terms, self.truncated, self.precision_loss, strict=False)

    def with_flags(self, truncated: bool = False, precision_loss: bool = False) -> 'Series':
        return Series(self.profile, self.terms, self.truncated or truncated,
                      self.precision_loss or precision_loss, strict=False)

    def split_at_zero(self) -> Tuple['Series', 'Series', 'Series']:
        """(negative, constant, positive) parts."""
        neg = {i: c for i, c in self.terms.items() if i < 0}
        pos = {i: c for i, c in self.terms.items() if i > 0}
        const = {i: c for i, c in self.terms.items() if i == 0}
        return self._derive(neg), self._derive(const), self._derive(pos)

    # -- residue level ------------------------------------------------

    def reduce(self) -> 'ResidueSeries':
        """Reduction modulo π; all coefficients must be integral."""
        out: Dict[Fraction, FieldElement] = {}
        for i, c in self.terms.items():
            if c.val < 0:
                raise NotIntegral(f"coefficient at t^{i} has valuation {c.valuation()}")
            residue = c.reduce()
            if any(residue):
                out[i] = residue
        return ResidueSeries(self.profile, out)

    def leading_layer(self, k: int) -> 'ResidueSeries':
        """Residue of π^{-k}·x restricted to terms of π-valuation exactly k."""
        out = {i: c.reduce() for i, c in self.shift_pi(-k).terms.items() if c.val == 0}
        return ResidueSeries(self.profile, out)


class ResidueSeries:
    """Finite map exponent → F_{p^d} element with Series exponent rules."""

    __slots__ = ('profile', 'terms')

    def __init__(self, profile: PrecisionProfile, terms: Optional[Dict[Fraction, FieldElement]] = None):
        self.profile = profile
        self.terms = {Fraction(i): tuple(a) for i, a in (terms or {}).items() if any(a)}

    @property
    def field(self):
        return self.profile.ring.field

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def items(self) -> List[Tuple[Fraction, FieldElement]]:
        return sorted(self.terms.items())

    def __add__(self, other: 'ResidueSeries') -> 'ResidueSeries':
        terms = dict(self.terms)
        for i, a in other.terms.items():
            terms[i] = self.field.add(terms[i], a) if i in terms else a
        return ResidueSeries(self.profile, terms)

    def __neg__(self) -> 'ResidueSeries':
        return ResidueSeries(self.profile, {i: self.field.neg(a) for i, a in self.terms.items()})

    def __sub__(self, other: 'ResidueSeries') -> 'ResidueSeries':
        return self + (-other)

    def __eq__(self, other) -> bool:
        return isinstance(other, ResidueSeries) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.terms.items())))

    def lift(self) -> Series:
        """Teichmüller lift of every coefficient."""
        ring = self.profile.ring
        return Series(self.profile, {i: Coeff.teichmuller(ring, a) for i, a in self.terms.items()}, strict=False)


def series_invert(x: Series, max_iter: int = 64) -> Series:
    """Inverse of x by Newton iteration on x normalized by its leading monomial.

    The leading monomial c·t^{i0} is the minimal-exponent term among those of
    minimal π-valuation.  z = x·c^{-1}·t^{-i0} is 1 plus terms that are
    π-adically small or of positive exponent, so the correction 1 − z·y
    shrinks until it leaves the cap or the window.  The iteration runs in a
    window widened by the span of x so that shifting back loses nothing the
    profile could hold.
    """
    if x.is_zero:
        raise NotInvertible("series is zero to precision")
    v0 = x.min_pi_valuation()
    i0 = min(i for i, c in x.terms.items() if c.val == v0)
    lead_inverse = x.terms[i0].inverse()
    profile = x.profile
    margin = profile.e_max - profile.e_min + abs(i0)
    wide = replace(profile, e_min=profile.e_min - margin, e_max=profile.e_max + margin)
    z = Series(wide, {i - i0: c * lead_inverse for i, c in x.terms.items()}, strict=False)
    one = Series.one(wide)
    y = one
    truncated = x.truncated
    for iteration in range(max_iter):
        error = one - z * y
        truncated = truncated or error.truncated
        if error.is_zero:
            logger.debug(f"series inverse converged after {iteration} Newton steps")
            terms = {i - i0: c * lead_inverse for i, c in y.terms.items()}
            return Series(profile, terms, truncated, x.precision_loss, strict=False)
        y = y + y * error
    raise NotInvertible(f"inverse did not converge in {max_iter} Newton steps")


def series_arith(x: Series, y: Series, kind: str) -> Series:
    if kind == 'add':
        return x + y
    if kind == 'sub':
        return x - y
    if kind == 'mul':
        return x * y
    raise InvalidInput(f"unknown series operation {kind}")


def gauss_val(x: Series, r: Number = 0) -> Valuation:
    return x.gauss_val(r)


def format_exponent(exponent: Fraction) -> str:
    if exponent.denominator == 1:
        return f"t^({exponent.numerator})"
    return f"t^({exponent.numerator}/{exponent.denominator})"


def format_series(x: Series) -> str:
    """Canonical literal: one term per π-component, ascending exponent."""
    if x.is_zero:
        return "0"
    parts = []
    for exponent, c in x.items():
        for piece in format_coeff(c).split(" + "):
            parts.append(piece if exponent == 0 else f"{piece}*{format_exponent(exponent)}")
    return " + ".join(parts)


def format_valuation(value: Valuation) -> str:
    if value == INF:
        return "inf"
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"
