"""
Seeded instance generators for the shipped families.
"""

import logging
import random
from fractions import Fraction
from typing import List, Optional

from ..errors import InvalidInput
from ..linalg.series_matrix import SeriesMatrix
from ..rings.coeff_ring import Coeff, make_spec
from ..rings.series_ring import PrecisionProfile, Series
from .instance_format import InstanceFile

logger = logging.getLogger(__name__)

KINDS = ('prop4', 'first', 'second', 'mixed', 'nabla')


def random_unit(rng: random.Random, profile: PrecisionProfile) -> Coeff:
    ring = profile.ring
    while True:
        value = rng.randrange(1, ring.p ** 2 + 1)
        if value % ring.p:
            return Coeff.from_int(ring, value)


def random_positive_series(rng: random.Random, profile: PrecisionProfile, max_terms: int = 2,
                           max_exponent: int = 3) -> Series:
    """Series with integer coefficients at strictly positive exponents."""
    ring = profile.ring
    values = {}
    for _ in range(rng.randint(0, max_terms)):
        exponent = Fraction(rng.randint(1, max_exponent))
        if exponent > profile.e_max:
            continue
        values[exponent] = rng.randrange(0, ring.p ** 2)
    return Series.from_values(profile, values)


def random_laurent_series(rng: random.Random, profile: PrecisionProfile, max_terms: int = 2) -> Series:
    """Series with integer coefficients at exponents in [-2, 2]."""
    ring = profile.ring
    values = {Fraction(rng.randint(-2, 2)): rng.randrange(0, ring.p ** 2) for _ in range(rng.randint(0, max_terms))}
    return Series.from_values(profile, values)


def random_integral_matrix(rng: random.Random, profile: PrecisionProfile, n: int) -> SeriesMatrix:
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            row.append(random_laurent_series(rng, profile))
        rows.append(row)
    return SeriesMatrix(profile, rows)


def prop4_instance(rng: random.Random, profile: PrecisionProfile, rank: int, delta: int) -> InstanceFile:
    """
    B = D·(I + π·E) with D ascending diagonal and E a full random matrix.

    Entries of E that couple equal valuations of D (the diagonal included)
    carry positive exponents only; every other entry draws exponents in [-2, 2].
    """
    ring = profile.ring
    pi = Coeff.pi(ring)
    vals = sorted([0] + [rng.randint(0, delta * ring.e) for _ in range(rank - 1)])
    diagonal = [Coeff.pi(ring, k) * random_unit(rng, profile) for k in vals]
    rows = []
    for i in range(rank):
        row = []
        for j in range(rank):
            if vals[i] == vals[j]:
                entry = random_positive_series(rng, profile)
            else:
                entry = random_laurent_series(rng, profile)
            row.append(entry * pi)
        rows.append(row)
    e_mat = SeriesMatrix(profile, rows)
    d_mat = SeriesMatrix.diag(profile, diagonal)
    b_mat = d_mat * (SeriesMatrix.identity(profile, rank) + e_mat)
    instance = InstanceFile(profile)
    instance.add('B', 'frobenius', b_mat)
    instance.add('D', 'diagonal', d_mat)
    return instance


def descent_instance(kind: str, rng: random.Random, profile: PrecisionProfile, rank: int) -> InstanceFile:
    """D = I and r = 1 families for the descent engine."""
    ring = profile.ring
    if rank < 2 and kind != 'first':
        raise InvalidInput(f"family {kind} needs rank at least 2")
    identity = SeriesMatrix.identity(profile, rank)
    p_inv = Coeff.from_fraction(ring, Fraction(1, ring.p))
    second = identity.with_entry(0, 1, Series.monomial(profile, p_inv, 4))
    first_entry = rank - 1 if kind == 'mixed' else 0
    first = identity.with_entry(first_entry, first_entry,
                                Series.one(profile) + Series.monomial(profile, random_unit(rng, profile), 3))
    if kind == 'first':
        a = first
    elif kind == 'second':
        a = second
    else:
        a = second * first
    instance = InstanceFile(profile)
    instance.add('A', 'frobenius', a)
    instance.add('D', 'diagonal', identity)
    instance.params['r'] = Fraction(1)
    return instance


def nabla_instance(profile: PrecisionProfile) -> InstanceFile:
    ring = profile.ring
    a = SeriesMatrix.diag(profile, [Coeff.one(ring), Coeff.from_int(ring, ring.p)])
    g = SeriesMatrix.unit(profile, 2, 0, 1, Series.one(profile))
    instance = InstanceFile(profile)
    instance.add('A', 'frobenius', a)
    instance.add('G', 'connection', g)
    return instance


def generate(kind: str, seed: int = 0, rank: int = 2, delta: int = 1, p: int = 2, d: int = 1,
             e: int = 1, N: int = 8, h: int = 0, window: Optional[List[Fraction]] = None) -> InstanceFile:
    if kind not in KINDS:
        raise InvalidInput(f"unknown instance family {kind}; choose from {', '.join(KINDS)}")
    if rank < 1:
        raise InvalidInput("rank must be positive")
    window = window or [Fraction(-8), Fraction(8)]
    rng = random.Random(seed)
    profile = PrecisionProfile(make_spec(p, d, e, N), h, window[0], window[1])
    if kind == 'prop4':
        instance = prop4_instance(rng, profile, rank, delta)
    elif kind == 'nabla':
        instance = nabla_instance(profile)
    else:
        instance = descent_instance(kind, rng, profile, rank)
    instance.params['seed'] = Fraction(seed)
    logger.info(f"Generated {kind} instance of rank {rank} with seed {seed}")
    return instance
