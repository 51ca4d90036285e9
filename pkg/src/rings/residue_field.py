"""
Finite residue field F_{p^d} = F_p[w]/(Φ).

Elements are tuples of d integers in [0, p), lowest degree first.  The same
polynomial helpers serve the unramified Witt ring W/p^N in coeff_ring.
"""

import logging
from functools import lru_cache
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

FieldElement = Tuple[int, ...]

logger = logging.getLogger(__name__)


def polymul_mod(a: Sequence[int], b: Sequence[int], phi: Sequence[int], modulus: int) -> Tuple[int, ...]:
    """Multiply two residues modulo the monic polynomial w^d + phi[d-1] w^{d-1} + ... + phi[0]."""
    d = len(phi)
    prod = [0] * (2 * d - 1)
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if bj:
                prod[i + j] += ai * bj
    for k in range(2 * d - 2, d - 1, -1):
        top = prod[k] % modulus
        if top:
            for i in range(d):
                prod[k - d + i] -= top * phi[i]
    return tuple(c % modulus for c in prod[:d])


def polypow_mod(a: Sequence[int], exponent: int, phi: Sequence[int], modulus: int) -> Tuple[int, ...]:
    d = len(phi)
    result = tuple([1 % modulus] + [0] * (d - 1))
    base = tuple(a)
    while exponent:
        if exponent & 1:
            result = polymul_mod(result, base, phi, modulus)
        base = polymul_mod(base, base, phi, modulus)
        exponent >>= 1
    return result


class ResidueField:
    """Arithmetic in F_{p^d} for a fixed defining polynomial."""

    def __init__(self, p: int, phi: Sequence[int]):
        self.p = p
        self.phi = tuple(c % p for c in phi)
        self.d = len(self.phi)
        self.q = p ** self.d
        self.zero: FieldElement = (0,) * self.d
        self.one: FieldElement = (1,) + (0,) * (self.d - 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, ResidueField) and (self.p, self.phi) == (other.p, other.phi)

    def __hash__(self) -> int:
        return hash((self.p, self.phi))

    def __repr__(self) -> str:
        return f"ResidueField(p={self.p}, phi={self.phi})"

    # -- construction -------------------------------------------------

    def element(self, digits: Sequence[int]) -> FieldElement:
        digits = list(digits)[:self.d] + [0] * max(0, self.d - len(digits))
        return tuple(c % self.p for c in digits)

    def from_int(self, n: int) -> FieldElement:
        return self.element([n])

    @property
    def generator(self) -> FieldElement:
        if self.d == 1:
            return ((-self.phi[0]) % self.p,)
        return (0, 1) + (0,) * (self.d - 2)

    def elements(self) -> Iterator[FieldElement]:
        for index in range(self.q):
            digits = []
            for _ in range(self.d):
                index, digit = divmod(index, self.p)
                digits.append(digit)
            yield tuple(digits)

    # -- arithmetic ---------------------------------------------------

    def is_zero(self, a: FieldElement) -> bool:
        return not any(a)

    def add(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def sub(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return tuple((x - y) % self.p for x, y in zip(a, b))

    def neg(self, a: FieldElement) -> FieldElement:
        return tuple((-x) % self.p for x in a)

    def mul(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return polymul_mod(a, b, self.phi, self.p)

    def pow(self, a: FieldElement, exponent: int) -> FieldElement:
        if exponent < 0:
            return self.pow(self.inv(a), -exponent)
        return polypow_mod(a, exponent, self.phi, self.p)

    def inv(self, a: FieldElement) -> FieldElement:
        if self.is_zero(a):
            raise ZeroDivisionError("inverse of zero in residue field")
        return polypow_mod(a, self.q - 2, self.phi, self.p)

    def frobenius(self, a: FieldElement, power: int = 1) -> FieldElement:
        """a ↦ a^{p^power}; negative powers use σ^d = id."""
        power %= self.d
        if power == 0:
            return a
        return polypow_mod(a, self.p ** power, self.phi, self.p)

    def evaluate(self, coefficients: Sequence[FieldElement], x: FieldElement) -> FieldElement:
        """Horner evaluation of a polynomial with field coefficients, lowest degree first."""
        acc = self.zero
        for c in reversed(coefficients):
            acc = self.add(self.mul(acc, x), c)
        return acc

    # -- F_p-linear algebra -------------------------------------------

    def solve_linear(self, linear_map: Callable[[FieldElement], FieldElement],
                     rhs: FieldElement) -> Optional[FieldElement]:
        """Solve linear_map(c) = rhs for an F_p-linear map on F_{p^d}; None if inconsistent."""
        d, p = self.d, self.p
        basis = [tuple(1 if i == k else 0 for i in range(d)) for k in range(d)]
        matrix = np.zeros((d, d + 1), dtype=np.int64)
        for col, b in enumerate(basis):
            matrix[:, col] = linear_map(b)
        matrix[:, d] = rhs
        solution = _solve_mod_p(matrix, p)
        if solution is None:
            logger.debug(f"F_{p}-linear system inconsistent for rhs {rhs}")
            return None
        return tuple(int(c) for c in solution)

    def format(self, a: FieldElement) -> str:
        if self.d == 1:
            return str(a[0])
        return "(" + "+".join(f"{c}*w^{i}" if i > 1 else (f"{c}*w" if i == 1 else str(c))
                              for i, c in enumerate(a)) + ")"


def _solve_mod_p(augmented: np.ndarray, p: int) -> Optional[List[int]]:
    """Gaussian elimination over F_p on an augmented matrix; free variables set to 0."""
    rows, cols = augmented.shape
    n = cols - 1
    m = augmented.copy() % p
    pivot_cols = []
    row = 0
    for col in range(n):
        candidates = [r for r in range(row, rows) if m[r, col] % p]
        if not candidates:
            continue
        pivot = candidates[0]
        m[[row, pivot]] = m[[pivot, row]]
        inv = pow(int(m[row, col]), p - 2, p)
        m[row] = (m[row] * inv) % p
        for r in range(rows):
            if r != row and m[r, col]:
                m[r] = (m[r] - m[r, col] * m[row]) % p
        pivot_cols.append(col)
        row += 1
        if row == rows:
            break
    for r in range(row, rows):
        if m[r, n] % p:
            return None
    solution = [0] * n
    for r, col in enumerate(pivot_cols):
        solution[col] = int(m[r, n])
    return solution


@lru_cache(maxsize=None)
def residue_field(p: int, phi: Tuple[int, ...]) -> ResidueField:
    return ResidueField(p, phi)
