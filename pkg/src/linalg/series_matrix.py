"""
Matrices of Series sharing one precision profile.
"""

import logging
from typing import Any, Callable, Dict, Optional, Sequence, Union

from ..errors import InvalidInput, NotInvertible
from ..rings.coeff_ring import Coeff, embed_coeff
from ..rings.series_ring import INF, PrecisionProfile, Series, Valuation, series_invert

logger = logging.getLogger(__name__)


class SeriesMatrix:
    """Rectangular immutable matrix over the truncated series ring."""

    __slots__ = ('profile', 'rows', 'cols', 'entries')

    def __init__(self, profile: PrecisionProfile, entries: Sequence[Sequence[Series]]):
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        if any(len(row) != cols for row in entries):
            raise InvalidInput("matrix rows have different lengths")
        for row in entries:
            for entry in row:
                if entry.profile is not profile:
                    profile.check_same(entry.profile)
        self.profile = profile
        self.rows = rows
        self.cols = cols
        self.entries = [list(row) for row in entries]

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, profile: PrecisionProfile, rows: int, cols: Optional[int] = None) -> 'SeriesMatrix':
        cols = rows if cols is None else cols
        return cls(profile, [[Series.zero(profile) for _ in range(cols)] for _ in range(rows)])

    @classmethod
    def identity(cls, profile: PrecisionProfile, n: int) -> 'SeriesMatrix':
        return cls.diag(profile, [Coeff.one(profile.ring)] * n)

    @classmethod
    def diag(cls, profile: PrecisionProfile, values: Sequence[Union[Coeff, Series]]) -> 'SeriesMatrix':
        n = len(values)
        entries = [[Series.zero(profile) for _ in range(n)] for _ in range(n)]
        for i, value in enumerate(values):
            entries[i][i] = value if isinstance(value, Series) else Series.constant(profile, value)
        return cls(profile, entries)

    @classmethod
    def unit(cls, profile: PrecisionProfile, n: int, i: int, j: int, value: Series) -> 'SeriesMatrix':
        """value·E_ij."""
        return cls.zero(profile, n).with_entry(i, j, value)

    # -- inspection ---------------------------------------------------

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def truncated(self) -> bool:
        return any(entry.truncated for entry in self.iter_entries())

    @property
    def precision_loss(self) -> bool:
        return any(entry.precision_loss for entry in self.iter_entries())

    @property
    def is_zero(self) -> bool:
        return all(entry.is_zero for entry in self.iter_entries())

    def flags(self):
        return {'truncated': self.truncated, 'precision_loss': self.precision_loss}

    def __getitem__(self, index) -> Series:
        i, j = index
        return self.entries[i][j]

    def iter_entries(self):
        for row in self.entries:
            yield from row

    def with_entry(self, i: int, j: int, value: Series) -> 'SeriesMatrix':
        entries = [list(row) for row in self.entries]
        entries[i][j] = value
        return SeriesMatrix(self.profile, entries)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> 'SeriesMatrix':
        return SeriesMatrix(self.profile, [row[c0:c1] for row in self.entries[r0:r1]])

    def __eq__(self, other) -> bool:
        return isinstance(other, SeriesMatrix) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(tuple(tuple(row) for row in self.entries))

    def __repr__(self) -> str:
        rows = " ; ".join(", ".join(str(e) for e in row) for row in self.entries)
        return f"SeriesMatrix([{rows}])"

    # -- arithmetic ---------------------------------------------------

    def map(self, fn: Callable[[Series], Series], profile: Optional[PrecisionProfile] = None) -> 'SeriesMatrix':
        entries = [[fn(entry) for entry in row] for row in self.entries]
        if profile is None and entries and entries[0]:
            profile = entries[0][0].profile
        return SeriesMatrix(profile or self.profile, entries)

    def _check_shape(self, other: 'SeriesMatrix') -> None:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise InvalidInput(f"shape mismatch {self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    def __add__(self, other: 'SeriesMatrix') -> 'SeriesMatrix':
        self._check_shape(other)
        return SeriesMatrix(self.profile, [[a + b for a, b in zip(r, s)]
                                           for r, s in zip(self.entries, other.entries)])

    def __sub__(self, other: 'SeriesMatrix') -> 'SeriesMatrix':
        self._check_shape(other)
        return SeriesMatrix(self.profile, [[a - b for a, b in zip(r, s)]
                                           for r, s in zip(self.entries, other.entries)])

    def __neg__(self) -> 'SeriesMatrix':
        return self.map(lambda e: -e)

    def __mul__(self, other: Union['SeriesMatrix', Series, Coeff]) -> 'SeriesMatrix':
        if isinstance(other, (Series, Coeff)):
            return self.map(lambda e: e * other)
        if self.cols != other.rows:
            raise InvalidInput(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        profile = self.profile
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Series.zero(profile)
                for k in range(self.cols):
                    a, b = self.entries[i][k], other.entries[k][j]
                    if a.is_zero or b.is_zero:
                        if a.truncated or b.truncated:
                            acc = acc.with_flags(truncated=True)
                        continue
                    acc = acc + a * b
                row.append(acc)
            out.append(row)
        return SeriesMatrix(profile, out)

    def minus_identity(self) -> 'SeriesMatrix':
        return self - SeriesMatrix.identity(self.profile, self.rows)

    # -- Frobenius, derivation, valuations ----------------------------

    def frobenius(self, power: int = 1) -> 'SeriesMatrix':
        return self.map(lambda e: e.frobenius(power))

    def inverse_frobenius(self) -> 'SeriesMatrix':
        return self.map(lambda e: e.inverse_frobenius(), profile=self.profile.with_h(self.profile.h + 1))

    def derivation(self) -> 'SeriesMatrix':
        return self.map(lambda e: e.derivation())

    def gauss_val(self, r=0) -> Valuation:
        """Minimum of the entry valuations (the maximum-norm convention)."""
        return min((entry.gauss_val(r) for entry in self.iter_entries()), default=INF)

    def is_constant(self) -> bool:
        return all(entry.is_constant() for entry in self.iter_entries())

    def coerce(self, profile: PrecisionProfile) -> 'SeriesMatrix':
        return self.map(lambda e: e.coerce(profile), profile=profile)

    def round_to(self, profile: PrecisionProfile) -> 'SeriesMatrix':
        return self.map(lambda e: e.round_to(profile), profile=profile)

    def transfer(self, profile: PrecisionProfile, exact: bool = False) -> 'SeriesMatrix':
        return self.map(lambda e: e.transfer(profile, exact), profile=profile)

    def embed(self, profile: PrecisionProfile, image: Dict[str, Any]) -> 'SeriesMatrix':
        """Push into a profile over a larger unramified ring through an embed_extension image."""
        big = profile.ring
        return self.map(lambda e: Series(profile, {i: embed_coeff(c, big, image) for i, c in e.terms.items()},
                                         e.truncated, e.precision_loss, strict=False), profile=profile)

    # -- inversion ----------------------------------------------------

    def inverse(self) -> 'SeriesMatrix':
        """Gauss–Jordan inverse with minimal π-valuation pivots."""
        if not self.is_square:
            raise InvalidInput("inverse of a non-square matrix")
        n = self.rows
        profile = self.profile
        left = [list(row) for row in self.entries]
        right = [list(row) for row in SeriesMatrix.identity(profile, n).entries]
        for col in range(n):
            candidates = [(left[r][col].min_pi_valuation(), r) for r in range(col, n) if not left[r][col].is_zero]
            if not candidates:
                raise NotInvertible(f"no pivot in column {col}")
            _, pivot = min(candidates)
            left[col], left[pivot] = left[pivot], left[col]
            right[col], right[pivot] = right[pivot], right[col]
            inv = series_invert(left[col][col])
            left[col] = [inv * e for e in left[col]]
            right[col] = [inv * e for e in right[col]]
            for r in range(n):
                if r == col or left[r][col].is_zero:
                    continue
                factor = left[r][col]
                left[r] = [a - factor * b for a, b in zip(left[r], left[col])]
                right[r] = [a - factor * b for a, b in zip(right[r], right[col])]
        return SeriesMatrix(profile, right)

