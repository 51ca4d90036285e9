"""
Frobenius-semilinear algebra over the truncated series ring.

Twisted products, elementary-divisor valuations, generic Newton polygons,
the scalar equation w − λ·σ(w) = v and the diagonalization iteration for
matrices congruent to a diagonal D modulo π.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..errors import (InvalidInput, InvariantViolated, NonConvergent, NotStabilized,
                      PrecisionExhausted, ResidueUnsolvable)
from ..rings.coeff_ring import Coeff, transfer_coeff
from ..rings.residue_field import FieldElement
from ..rings.series_ring import INF, PrecisionProfile, ResidueSeries, Series, series_invert
from .series_matrix import SeriesMatrix

logger = logging.getLogger(__name__)


@dataclass
class DiagonalData:
    """Diagonal entries D_ii of an invertible diagonal matrix."""
    entries: List[Coeff]

    def __post_init__(self):
        if any(c.is_zero for c in self.entries):
            raise InvalidInput("diagonal entries must be nonzero to precision")

    @property
    def rank(self) -> int:
        return len(self.entries)

    @property
    def valuations(self) -> List[Fraction]:
        return [c.valuation() for c in self.entries]

    @property
    def delta(self) -> Fraction:
        """Δ = max over i, j of v(D_ii / D_jj)."""
        vals = self.valuations
        return max(vals) - min(vals)

    def matrix(self, profile: PrecisionProfile) -> SeriesMatrix:
        return SeriesMatrix.diag(profile, self.entries)

    def inverse_matrix(self, profile: PrecisionProfile) -> SeriesMatrix:
        return SeriesMatrix.diag(profile, [c.inverse() for c in self.entries])

    @classmethod
    def from_matrix(cls, m: SeriesMatrix) -> 'DiagonalData':
        if not m.is_square:
            raise InvalidInput("diagonal matrix must be square")
        entries = []
        for i in range(m.rows):
            for j in range(m.cols):
                entry = m[i, j]
                if i != j and not entry.is_zero:
                    raise InvalidInput(f"off-diagonal entry ({i},{j}) is nonzero")
                if i == j and not entry.is_constant():
                    raise InvalidInput(f"diagonal entry {i} is not a constant")
            entries.append(m[i, i].coefficient(0))
        return cls(entries)


@dataclass
class NewtonPolygon:
    """Slopes with multiplicities, slopes strictly increasing."""
    segments: List[Tuple[Fraction, int]]

    @classmethod
    def from_slopes(cls, slopes: Sequence[Fraction]) -> 'NewtonPolygon':
        segments: List[Tuple[Fraction, int]] = []
        for slope in sorted(slopes):
            if segments and segments[-1][0] == slope:
                segments[-1] = (slope, segments[-1][1] + 1)
            else:
                segments.append((Fraction(slope), 1))
        return cls(segments)

    @property
    def rank(self) -> int:
        return sum(m for _, m in self.segments)

    @property
    def slopes(self) -> List[Fraction]:
        return [s for s, m in self.segments for _ in range(m)]

    def lines(self) -> List[str]:
        return [f"slope {s.numerator}/{s.denominator} multiplicity {m}" for s, m in self.segments]

    def to_dict(self) -> Dict[str, Any]:
        return {'segments': [{'slope': str(s), 'multiplicity': m} for s, m in self.segments]}


# -- twisted products and elementary divisors -------------------------

def twisted_product(a: SeriesMatrix, n: int) -> SeriesMatrix:
    """A·σ(A)···σ^{n−1}(A)."""
    if not a.is_square:
        raise InvalidInput("twisted product needs a square matrix")
    if n < 1:
        raise InvalidInput("twisted product length must be at least 1")
    result = a
    for k in range(1, n):
        result = result * a.frobenius(k)
    return result


def smith_valuations(m: SeriesMatrix) -> List[Fraction]:
    """Valuations of the Smith form, pivoting on minimal π-valuation entries."""
    if not m.is_square:
        raise InvalidInput("Smith valuations need a square matrix")
    e = m.profile.ring.e
    work = [list(row) for row in m.entries]
    for row in work:
        for entry in row:
            if not entry.is_zero and entry.min_pi_valuation() < 0:
                raise InvalidInput("Smith valuations need an integral matrix")
    valuations: List[Fraction] = []
    while work:
        candidates = [(entry.min_pi_valuation(), r, c)
                      for r, row in enumerate(work) for c, entry in enumerate(row) if not entry.is_zero]
        if not candidates:
            raise PrecisionExhausted(f"no pivot left after {len(valuations)} elementary divisors",
                                     found=valuations)
        v, pr, pc = min(candidates)
        valuations.append(Fraction(v, e))
        pivot_inv = series_invert(work[pr][pc])
        pivot_row = work[pr]
        reduced = []
        for r, row in enumerate(work):
            if r == pr:
                continue
            if row[pc].is_zero:
                reduced.append([x for c, x in enumerate(row) if c != pc])
                continue
            factor = row[pc] * pivot_inv
            reduced.append([x - factor * y for c, (x, y) in enumerate(zip(row, pivot_row)) if c != pc])
        work = reduced
    return sorted(valuations)


def _lift_precision(a: SeriesMatrix, extra: Fraction) -> SeriesMatrix:
    """Read the entries of a as exact in a ring with ⌈extra⌉ more p-adic digits."""
    return a.transfer(a.profile.with_precision(math.ceil(extra)), exact=True)


def newton_polygon_generic(a: SeriesMatrix, n_max: Optional[int] = None) -> NewtonPolygon:
    """Generic Newton polygon from Smith valuations of twisted products.

    Products of length m0, 2·m0, ... with m0 = lcm(1..rank) are compared;
    two consecutive agreeing estimates are accepted.
    """
    if not a.is_square:
        raise InvalidInput("Newton polygon needs a square matrix")
    n = a.rows
    e = a.profile.ring.e
    shift = 0
    min_val = min((entry.min_pi_valuation() for entry in a.iter_entries() if not entry.is_zero), default=0)
    if min_val < 0:
        shift = -min_val
        a = a * Coeff.pi(a.profile.ring, shift)
    base = smith_valuations(a)
    total = sum(base)
    m0 = math.lcm(*range(1, n + 1))
    n_max = n_max if n_max is not None else 4 * m0
    partial: List[Tuple[int, List[Fraction]]] = []
    m = m0
    while m <= n_max:
        lifted = _lift_precision(a, m * total)
        vals = smith_valuations(twisted_product(lifted, m))
        slopes = [v / m - Fraction(shift, e) for v in vals]
        logger.info(f"Newton polygon estimate at length {m}: {[str(s) for s in slopes]}")
        if partial and partial[-1][1] == slopes:
            return NewtonPolygon.from_slopes(slopes)
        partial.append((m, slopes))
        m += m0
    raise NotStabilized(f"slopes did not stabilize up to length {n_max}", partial=partial)


# -- the scalar σ-linear equation -------------------------------------

@dataclass
class SigmaSolution:
    """w with w − λσ(w) = v − tail; tail collects what the profile cannot resolve."""
    solution: Series
    tail: Series
    regime: str
    layers: int = 0

    @property
    def exact(self) -> bool:
        return self.tail.is_zero


def _residue_sigma(x: ResidueSeries, profile: PrecisionProfile) -> ResidueSeries:
    field_ = x.field
    p = profile.ring.p
    return ResidueSeries(profile, {i * p: field_.frobenius(a, 1)
                                   for i, a in x.terms.items() if profile.in_window(i * p)})


def _residue_scale(x: ResidueSeries, c: FieldElement) -> ResidueSeries:
    field_ = x.field
    return ResidueSeries(x.profile, {i: field_.mul(a, c) for i, a in x.terms.items()})


def _residue_sigma_inverse(x: ResidueSeries, profile: PrecisionProfile) -> ResidueSeries:
    """σ^{-1} keeping only exponents admissible at level h."""
    field_ = x.field
    p = profile.ring.p
    return ResidueSeries(profile, {i / p: field_.frobenius(a, -1)
                                   for i, a in x.terms.items() if profile.admits(i / p)})


def _residue_mul(x: ResidueSeries, y: ResidueSeries, profile: PrecisionProfile) -> ResidueSeries:
    """Product of residue series, dropping exponents outside the window like Series does."""
    field_ = x.field
    terms: Dict[Fraction, FieldElement] = {}
    for i, a in x.terms.items():
        for j, b in y.terms.items():
            k = i + j
            if not profile.in_window(k):
                continue
            product = field_.mul(a, b)
            terms[k] = field_.add(terms[k], product) if k in terms else product
    return ResidueSeries(profile, terms)


class SigmaEquationSolver:
    """Solves w − λ·σ(w) = v over a fixed precision profile.

    λ with positive π-valuation is handled by the forward series, λ with
    negative π-valuation by the backward series over σ^{-1} (exponents kept at
    level h, the rest reported as tail), and a unit λ π-layer by π-layer
    through the residue equation.  A unit λ must reduce to a series without
    negative exponents.
    """

    def __init__(self, profile: PrecisionProfile):
        self.profile = profile
        self.logger = logging.getLogger(__name__)

    @property
    def _max_rounds(self) -> int:
        profile = self.profile
        slots = (profile.e_max - profile.e_min) * profile.p ** profile.h
        return int(slots) + profile.cap_pi + 64

    def solve(self, lam: Series, v: Series) -> SigmaSolution:
        if lam.is_zero:
            return SigmaSolution(v, Series.zero(self.profile), 'zero')
        val = lam.min_pi_valuation()
        if val > 0:
            w = self._forward(lam, v)
            regime = 'contracting'
            layers = 0
        elif val == 0:
            w, layers = self._layered(lam, v)
            regime = 'unit'
        else:
            w = self._backward(series_invert(lam), v)
            regime = 'expanding'
            layers = 0
        tail = v - (w - lam * w.frobenius())
        tail = Series(tail.profile, tail.terms, strict=False)
        if not tail.is_zero:
            self.logger.debug(f"σ-equation left an unresolved tail {tail}")
            w = w.with_flags(truncated=True)
        return SigmaSolution(w, tail, regime, layers)

    def _forward(self, lam: Series, v: Series) -> Series:
        """Σ λσ(λ)···σ^{n−1}(λ)σ^n(v), stopping once a term vanishes."""
        w = Series.zero(self.profile)
        term = v
        for _ in range(4 * self.profile.cap_pi + 64):
            if term.is_zero:
                return w
            w = w + term
            term = lam * term.frobenius()
        raise NonConvergent("forward σ-series did not terminate")

    def _backward(self, lam_inv: Series, v: Series) -> Series:
        """−Σ_{n≥1} σ^{-1}(λ^{-1}·term_{n−1}), exponents kept at level h."""
        w = Series.zero(self.profile)
        term = v
        for _ in range(4 * self.profile.cap_pi + 64):
            term = (lam_inv * term).inverse_frobenius().round_to(self.profile)
            if term.is_zero:
                return w
            w = w - term
        raise NonConvergent("backward σ-series did not terminate")

    def _layered(self, lam: Series, v: Series) -> Tuple[Series, int]:
        reduced = lam.reduce()
        if any(i < 0 for i in reduced.terms):
            raise InvalidInput("unit λ must reduce to a series without negative exponents")
        w = Series.zero(self.profile)
        residual = v
        layers = 0
        for _ in range(self.profile.cap_pi + 64):
            if residual.is_zero:
                break
            k = residual.min_pi_valuation()
            layer = residual.leading_layer(k)
            w_bar, tail = self.solve_residue(reduced, layer)
            wk = w_bar.lift().shift_pi(k)
            tail_lift = tail.lift().shift_pi(k)
            w = w + wk
            residual = residual - (wk - lam * wk.frobenius()) - tail_lift
            layers += 1
            if residual.min_pi_valuation() is not None and residual.min_pi_valuation() <= k:
                raise InvariantViolated(f"σ-equation layer {k} was not cleared")
        else:
            raise NonConvergent("layered σ-equation did not terminate")
        self.logger.debug(f"σ-equation solved in {layers} π-layers")
        return w, layers

    def solve_residue(self, lam_bar: Union[ResidueSeries, FieldElement],
                      r: ResidueSeries) -> Tuple[ResidueSeries, ResidueSeries]:
        """Solve w̄ − λ̄·σ(w̄) = r̄ over the residue series; returns (w̄, unresolved tail).

        λ̄ = c0 + μ with μ at positive exponents: the constant-coefficient
        equation is solved repeatedly with right-hand side μ·σ(last correction).
        """
        profile = self.profile
        field_ = profile.ring.field
        if not isinstance(lam_bar, ResidueSeries):
            lam_bar = ResidueSeries(profile, {Fraction(0): lam_bar})
        if any(i < 0 for i in lam_bar.terms):
            raise InvalidInput("λ̄ with negative exponents is not supported")
        c0 = lam_bar.terms.get(Fraction(0), field_.zero)
        mu = ResidueSeries(profile, {i: a for i, a in lam_bar.terms.items() if i > 0})

        w = ResidueSeries(profile)
        rhs = r
        for _ in range(self._max_rounds):
            if rhs.is_zero:
                break
            correction = self._solve_constant(c0, rhs)
            w = w + correction
            rhs = _residue_mul(mu, _residue_sigma(correction, profile), profile)
        else:
            raise NonConvergent("residue σ-equation did not terminate")

        image = w - _residue_mul(lam_bar, _residue_sigma(w, profile), profile)
        return w, r - image

    def _solve_constant(self, c0: FieldElement, r: ResidueSeries) -> ResidueSeries:
        profile = self.profile
        field_ = profile.ring.field
        positive = ResidueSeries(profile, {i: a for i, a in r.terms.items() if i > 0})
        negative = ResidueSeries(profile, {i: a for i, a in r.terms.items() if i < 0})
        constant = r.terms.get(Fraction(0))

        w = ResidueSeries(profile)
        term = positive
        while not term.is_zero:
            w = w + term
            term = _residue_scale(_residue_sigma(term, profile), c0)

        if not negative.is_zero:
            if field_.is_zero(c0):
                w = w + negative
            else:
                c0_inv = field_.inv(c0)
                term = negative
                while True:
                    term = _residue_sigma_inverse(_residue_scale(term, c0_inv), profile)
                    if term.is_zero:
                        break
                    w = w - term

        if constant is not None:
            solution = field_.solve_linear(
                lambda c: field_.sub(c, field_.mul(c0, field_.frobenius(c, 1))), constant)
            if solution is None:
                raise ResidueUnsolvable(
                    f"c − {field_.format(c0)}·σ(c) = {field_.format(constant)} has no solution in F_{field_.q}",
                    c0=c0, rhs=constant)
            w = w + ResidueSeries(profile, {Fraction(0): solution})
        return w


def solve_sigma_equation(lam: Series, v: Series) -> Series:
    """Solution w of w − λσ(w) = v; flagged truncated when a tail is left over."""
    return SigmaEquationSolver(v.profile).solve(lam, v).solution


# -- diagonalization --------------------------------------------------

@dataclass
class DiagonalizationReport:
    iterations: int
    residual: SeriesMatrix
    history: List[Any] = field(default_factory=list)
    converged: bool = True
    reason: str = ''

    @property
    def residual_valuation(self):
        return self.residual.gauss_val(0)

    def to_dict(self) -> Dict[str, Any]:
        value = self.residual_valuation
        return {
            'iterations': self.iterations,
            'converged': self.converged,
            'reason': self.reason,
            'residual_valuation': 'inf' if value == INF else str(value),
            'history': [str(h) for h in self.history],
            'flags': self.residual.flags()
        }


class FrobeniusDiagonalizer:
    """Successive approximation towards B·σ(U) = U·D.

    The iteration runs on B̃ = D^{-1}·B·σ(D), whose residual starts at
    D^{-1}B − I ≡ 0 mod π, with Ũ_{l+1} = Ũ_l(I + W) and target σ(D); the
    answer is U = D·Ũ·D^{-1}.  Entry (i, j) of the B̃-residual only matters
    below π-valuation cap + v(D_jj) − v(D_ii), and the work is done with 2Δ
    extra digits so that U is exact at the input precision.
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, workers)
        self.logger = logging.getLogger(__name__)

    def residual(self, u: SeriesMatrix, b: SeriesMatrix, d_inv: SeriesMatrix) -> SeriesMatrix:
        """U^{-1}·B·σ(U)·D^{-1} − I."""
        return (u.inverse() * b * u.frobenius() * d_inv).minus_identity()

    @staticmethod
    def _relevant(v: SeriesMatrix, thresholds: List[List[int]]) -> SeriesMatrix:
        rows = []
        for i, row in enumerate(v.entries):
            rows.append([Series(v.profile, {k: c.truncate(thresholds[i][j]) for k, c in entry.terms.items()},
                                entry.truncated, entry.precision_loss, strict=False)
                         for j, entry in enumerate(row)])
        return SeriesMatrix(v.profile, rows)

    def diagonalize(self, b: SeriesMatrix, d: DiagonalData, max_iter: int = 40) -> Tuple[SeriesMatrix, DiagonalizationReport]:
        profile = b.profile
        n = b.rows
        if not b.is_square or n != d.rank:
            raise InvalidInput("B and D must be square of the same rank")
        start = (d.inverse_matrix(profile) * b).minus_identity()
        if start.gauss_val(0) <= 0:
            raise InvalidInput("D^{-1}B must be congruent to the identity modulo π")

        work = profile.with_precision(math.ceil(2 * d.delta)) if d.delta else profile
        if work is not profile:
            b = b.transfer(work, exact=True)
            d = DiagonalData([transfer_coeff(c, work.ring, exact=True) for c in d.entries])
        d_mat, d_inv = d.matrix(work), d.inverse_matrix(work)
        sigma_d = DiagonalData([c.frobenius() for c in d.entries])
        b_tilde = d_inv * b * sigma_d.matrix(work)
        sigma_d_inv = sigma_d.inverse_matrix(work)
        lambdas = [[Series.constant(work, sigma_d.entries[i] * sigma_d.entries[j].inverse()) for j in range(n)]
                   for i in range(n)]
        thresholds = [[profile.cap_pi + d.entries[j].val - d.entries[i].val for j in range(n)] for i in range(n)]

        def finish(u: SeriesMatrix, full: SeriesMatrix, iterations: int, converged: bool = True,
                   reason: str = '') -> Tuple[SeriesMatrix, DiagonalizationReport]:
            original = d_mat * u * d_inv
            residual = d_mat * full * d_inv
            if work is not profile:
                original, residual = original.transfer(profile), residual.transfer(profile)
            return original, DiagonalizationReport(iterations, residual, history, converged, reason)

        solver = SigmaEquationSolver(work)
        u = SeriesMatrix.identity(work, n)
        history: List[Any] = []
        previous = None
        full = self.residual(u, b_tilde, sigma_d_inv)
        v = self._relevant(full, thresholds)
        for l in range(1, max_iter + 1):
            if v.is_zero:
                self.logger.info(f"Diagonalization converged after {l - 1} iterations")
                return finish(u, full, l - 1)
            current = min(entry.min_pi_valuation() for entry in v.iter_entries() if not entry.is_zero)
            history.append(Fraction(current, work.ring.e))
            self.logger.info(f"Diagonalization iteration {l}: residual π-valuation {current}")
            if not v.truncated and current < min(l, work.cap_pi):
                raise InvariantViolated(f"residual not congruent to 0 mod π^{l} at iteration {l}")
            if previous is not None and current <= previous:
                if v.truncated:
                    return finish(u, full, l - 1, converged=False, reason='unresolved tail at profile precision')
                raise NonConvergent(f"residual stuck at π-valuation {current}", history=history)
            previous = current

            cells = [(i, j) for i in range(n) for j in range(n)]
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                solutions = list(pool.map(lambda ij: solver.solve(lambdas[ij[0]][ij[1]], v[ij]).solution, cells))
            w = SeriesMatrix(work, [solutions[i * n:(i + 1) * n] for i in range(n)])
            u = u * (SeriesMatrix.identity(work, n) + w)
            full = self.residual(u, b_tilde, sigma_d_inv)
            v = self._relevant(full, thresholds)

        if v.is_zero:
            return finish(u, full, max_iter)
        return finish(u, full, max_iter, converged=False, reason='max_iter reached')


def genspec_diagonalize(b: SeriesMatrix, d: DiagonalData, max_iter: int = 40,
                        workers: int = 1) -> Tuple[SeriesMatrix, DiagonalizationReport]:
    return FrobeniusDiagonalizer(workers).diagonalize(b, d, max_iter)
