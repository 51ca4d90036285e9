"""
Randomised invariant suite behind the `verify` command.

Each check runs a number of seeded trials and counts failures; the summary
is a pandas DataFrame rendered as a pass/fail table.
"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List

import pandas as pd

from ..errors import SlopeforgeError
from ..linalg.series_matrix import SeriesMatrix
from ..linalg.sigma_linear import newton_polygon_generic
from ..rings.coeff_ring import Coeff
from ..rings.series_ring import PrecisionProfile, Series, series_invert
from ..services.fnabla_service import FNablaModule, FNablaService
from .generator import random_integral_matrix, random_unit

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    trials: int
    failures: int
    note: str = ''

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _random_coeff(rng: random.Random, profile: PrecisionProfile) -> Coeff:
    ring = profile.ring
    digits = [rng.randrange(0, ring.modulus) for _ in range(ring.d)]
    return Coeff.from_digits(ring, digits, rng.randint(0, ring.e))


def _agree(x: Coeff, y: Coeff, precision: int) -> bool:
    """Equality modulo π^precision; cancellation leaves unknown digits above it."""
    return x.truncate(precision) == y.truncate(precision)


def _random_series(rng: random.Random, profile: PrecisionProfile, low: int = -3, high: int = 3) -> Series:
    terms = {}
    for _ in range(rng.randint(1, 3)):
        exponent = Fraction(rng.randint(low, high))
        if profile.in_window(exponent):
            terms[exponent] = _random_coeff(rng, profile)
    return Series(profile, terms, strict=False)


class VerifySuite:
    """Runs the invariant checks against one precision profile."""

    def __init__(self, profile: PrecisionProfile, seed: int = 0, trials: int = 10):
        self.profile = profile
        self.seed = seed
        self.trials = trials
        self.logger = logging.getLogger(__name__)

    def _run(self, name: str, trial: Callable[[random.Random], bool]) -> CheckResult:
        rng = random.Random(f"{self.seed}:{name}")
        failures = 0
        note = ''
        for _ in range(self.trials):
            try:
                if not trial(rng):
                    failures += 1
            except SlopeforgeError as e:
                failures += 1
                note = type(e).__name__
        if failures:
            self.logger.warning(f"Check {name} failed {failures}/{self.trials} trials")
        return CheckResult(name, self.trials, failures, note)

    def ring_axioms(self, rng: random.Random) -> bool:
        a, b, c = (_random_coeff(rng, self.profile) for _ in range(3))
        precision = self.profile.ring.precision
        return _agree((a * b) * c, a * (b * c), precision) and _agree(a * (b + c), a * b + a * c, precision)

    def frobenius_homomorphism(self, rng: random.Random) -> bool:
        # exponents small enough that σ(x)·σ(y) stays inside the window termwise
        bound = int(min(-self.profile.e_min, self.profile.e_max) // (2 * self.profile.p))
        x, y = _random_series(rng, self.profile, -bound, bound), _random_series(rng, self.profile, -bound, bound)
        return (x + y).frobenius() == x.frobenius() + y.frobenius() and \
            (x * y).frobenius() == x.frobenius() * y.frobenius()

    def leibniz(self, rng: random.Random) -> bool:
        x, y = _random_series(rng, self.profile), _random_series(rng, self.profile)
        return (x * y).derivation() == x.derivation() * y + x * y.derivation()

    def derivation_frobenius(self, rng: random.Random) -> bool:
        x = _random_series(rng, self.profile)
        p = Coeff.from_int(self.profile.ring, self.profile.ring.p)
        return x.frobenius().derivation() == x.derivation().frobenius() * p

    def inversion(self, rng: random.Random) -> bool:
        x = Series.one(self.profile) + _random_series(rng, self.profile, 1, 3).shift_pi(1)
        return x * series_invert(x) == Series.one(self.profile)

    def conjugation_invariance(self, rng: random.Random) -> bool:
        ring = self.profile.ring
        n = 2
        a = SeriesMatrix.diag(self.profile, [Coeff.one(ring), Coeff.pi(ring, rng.randint(1, ring.e))])
        v = SeriesMatrix.identity(self.profile, n).with_entry(
            0, 1, Series.constant(self.profile, random_unit(rng, self.profile)))
        conjugated = v.inverse() * a * v.frobenius()
        return newton_polygon_generic(a) == newton_polygon_generic(conjugated)

    def unipotent_compatibility(self, rng: random.Random) -> bool:
        ring = self.profile.ring
        a = SeriesMatrix.diag(self.profile, [Coeff.one(ring), Coeff.from_int(ring, ring.p)])
        g = SeriesMatrix.unit(self.profile, 2, 0, 1, Series.constant(self.profile, random_unit(rng, self.profile)))
        return FNablaService().check_compatibility(FNablaModule(a, g)).is_zero

    def contraction(self, rng: random.Random) -> bool:
        n = 2
        r0 = random_integral_matrix(rng, self.profile, n)
        identity = SeriesMatrix.identity(self.profile, n)
        result = FNablaService().contraction_vanishing(r0, identity, identity, self.profile.ring.N + 1)
        return result.vanished and result.strictly_increasing

    def run(self) -> pd.DataFrame:
        checks = [
            ('ring axioms', self.ring_axioms),
            ('frobenius homomorphism', self.frobenius_homomorphism),
            ('leibniz rule', self.leibniz),
            ('derivation vs frobenius', self.derivation_frobenius),
            ('series inversion', self.inversion),
            ('newton polygon conjugation', self.conjugation_invariance),
            ('unipotent compatibility', self.unipotent_compatibility),
            ('contraction vanishing', self.contraction),
        ]
        results: List[CheckResult] = [self._run(name, trial) for name, trial in checks]
        return pd.DataFrame([{
            'check': r.name,
            'trials': r.trials,
            'failures': r.failures,
            'status': 'PASS' if r.passed else 'FAIL',
            'note': r.note
        } for r in results])


def run_verify_suite(profile: PrecisionProfile, seed: int = 0, trials: int = 10) -> pd.DataFrame:
    return VerifySuite(profile, seed, trials).run()
