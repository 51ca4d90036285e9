"""
Descent service: conjugates a Frobenius matrix A towards D·(I + π·integral).

Each step looks at the residual R = D^{-1}·S·A·σ(S^{-1}) and removes its
smallest offending positive-index coefficient, either by a Teichmüller
monomial correction (first type) or by lifting the w_{r_l}-graded leading part
once its elementary factorization is verified (second type).  The ε-invariant
val_r(R − I) > r·s is checked after every accepted step.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from ..errors import (InvalidInput, InvariantViolated, MaxIterExceeded, NoGrading, ResidueUnsolvable,
                      RoundingTooCoarse)
from ..linalg.laurent_factor import (NotUnit, factor_elementary, graded_matrix, grading_for,
                                     laurent_det_unit, lift_matrix, moves_product)
from ..linalg.series_matrix import SeriesMatrix
from ..linalg.sigma_linear import DiagonalData
from ..rings.coeff_ring import Coeff, embed_coeff, embed_extension
from ..rings.series_ring import INF, PrecisionProfile, Series, format_valuation


def coefficient_matrix(m: SeriesMatrix, exponent: Fraction) -> List[List[Coeff]]:
    """Matrix of t^exponent coefficients."""
    return [[entry.coefficient(exponent) for entry in row] for row in m.entries]


def coefficient_valuation(coeffs: List[List[Coeff]]) -> Any:
    vals = [c.valuation() for row in coeffs for c in row if not c.is_zero]
    return min(vals) if vals else INF


def positive_indices(m: SeriesMatrix) -> List[Fraction]:
    return sorted({i for entry in m.iter_entries() for i in entry.terms if i > 0})


def unipotent_inverse(y: SeriesMatrix) -> SeriesMatrix:
    """Σ (I − Y)^k for Y − I supported on positive exponents."""
    if any(i <= 0 for entry in y.minus_identity().iter_entries() for i in entry.terms):
        raise InvalidInput("Y − I must be supported on positive exponents")
    nilpotent = -y.minus_identity()
    result = SeriesMatrix.identity(y.profile, y.rows)
    term = result
    while True:
        term = term * nilpotent
        if term.is_zero:
            return result
        result = result + term


def choose_parameters(d: DiagonalData, r: Fraction, profile: PrecisionProfile) -> Tuple[Fraction, Fraction]:
    """Smallest s in (1/e)p^{-h}Z with (p−1)·r·s − Δ > 1/e; returns (s, r·s)."""
    r = Fraction(r)
    if r <= 0:
        raise InvalidInput(f"radius r={r} must be positive")
    ring = profile.ring
    v = Fraction(1, ring.e)
    bound = (v + d.delta) / ((ring.p - 1) * r)
    step = Fraction(1, ring.e * ring.p ** profile.h)
    s = (math.floor(bound / step) + 1) * step
    return s, r * s


def round_to_profile(u: SeriesMatrix, target: PrecisionProfile, r: Fraction) -> SeriesMatrix:
    """V in the target profile with val_r(V·U − I) > 0 and val_r((V·U)^{-1} − I) > 0."""
    source = u.profile
    if source.h < target.h:
        u = u.coerce(source.with_h(target.h))
        source = u.profile
    v = u.inverse().round_to(target)
    vu = v.coerce(source) * u
    first = vu.minus_identity().gauss_val(r)
    if first <= 0:
        raise RoundingTooCoarse(f"val_r(VU − I) = {format_valuation(first)} after rounding", r=r)
    second = vu.inverse().minus_identity().gauss_val(r)
    if second <= 0:
        raise RoundingTooCoarse(f"val_r((VU)^-1 − I) = {format_valuation(second)} after rounding", r=r)
    return v


@dataclass
class StepClassification:
    kind: str
    j: Fraction
    r_l: Optional[Fraction] = None

    @property
    def type_number(self) -> int:
        return 1 if self.kind == 'first' else 2


def classify_step(residual: SeriesMatrix, r: Fraction, s: Fraction) -> Optional[StepClassification]:
    """Classify the next step, or None when every positive-index coefficient has val > 0."""
    deviation = residual.minus_identity()
    vals = {i: coefficient_valuation(coefficient_matrix(deviation, i)) for i in positive_indices(deviation)}
    offending = [i for i, v in sorted(vals.items()) if v <= 0]
    if not offending:
        return None
    j = offending[0]
    if vals[j] == 0:
        result = StepClassification('first', j)
    else:
        ratios = {i: -v / i for i, v in vals.items() if v < 0}
        r_l = max(ratios.values())
        j = min(i for i, ratio in ratios.items() if ratio == r_l)
        result = StepClassification('second', j, r_l)
    if result.j <= s:
        raise InvariantViolated(f"classified index j={result.j} does not exceed s={s}", j=result.j, s=s)
    return result


@dataclass
class StepRecord:
    l: int
    kind: int
    j: Fraction
    r_l: Optional[Fraction]
    val_r: Any

    def line(self) -> str:
        r_l = '-' if self.r_l is None else f"{self.r_l.numerator}/{self.r_l.denominator}"
        return (f"l={self.l} type={self.kind} j={self.j.numerator}/{self.j.denominator} "
                f"r_l={r_l} val_r={format_valuation(self.val_r)}")

    def to_dict(self) -> Dict[str, Any]:
        return {'l': self.l, 'type': self.kind, 'j': str(self.j),
                'r_l': None if self.r_l is None else str(self.r_l), 'val_r': format_valuation(self.val_r)}


@dataclass
class DescentState:
    """Current basis change and residual of a descent run."""
    a: SeriesMatrix
    d: DiagonalData
    s_mat: SeriesMatrix
    s_inv: SeriesMatrix
    r: Fraction
    s: Fraction
    eps: Fraction
    l: int = 0
    log: List[StepRecord] = field(default_factory=list)
    snapshots: List[SeriesMatrix] = field(default_factory=list)
    residual: Optional[SeriesMatrix] = None

    @property
    def profile(self) -> PrecisionProfile:
        return self.a.profile

    def recompute(self) -> SeriesMatrix:
        profile = self.profile
        self.residual = self.d.inverse_matrix(profile) * self.s_mat * self.a * self.s_inv.frobenius()
        return self.residual

    def apply(self, w: SeriesMatrix, v: SeriesMatrix) -> None:
        """S ← W·S and S^{-1} ← S^{-1}·V for V = W^{-1}."""
        self.s_mat = w * self.s_mat
        self.s_inv = self.s_inv * v
        self.recompute()

    def coerce(self, profile: PrecisionProfile) -> None:
        self.a = self.a.coerce(profile)
        self.s_mat = self.s_mat.coerce(profile)
        self.s_inv = self.s_inv.coerce(profile)
        self.snapshots = [snap.coerce(profile) for snap in self.snapshots]
        self.recompute()

    def embed(self, profile: PrecisionProfile, image: Dict[str, Any]) -> None:
        """Move the whole state to a profile over a larger unramified ring."""
        big = profile.ring
        self.a = self.a.embed(profile, image)
        self.d = DiagonalData([embed_coeff(c, big, image) for c in self.d.entries])
        self.s_mat = self.s_mat.embed(profile, image)
        self.s_inv = self.s_inv.embed(profile, image)
        self.snapshots = [snap.embed(profile, image) for snap in self.snapshots]
        self.recompute()


@dataclass
class EnvelopeData:
    grid: List[Tuple[Fraction, float, float]]
    delta: Fraction
    i0: Optional[Fraction]
    violations: List[Tuple[int, Fraction, float, float]] = field(default_factory=list)

    def bound(self, i: Fraction) -> float:
        for point, _, g in self.grid:
            if point >= i:
                return g
        return self.grid[-1][2] if self.grid else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'delta': str(self.delta),
            'i0': None if self.i0 is None else str(self.i0),
            'grid': [{'i': str(i), 'f': f, 'g': g} for i, f, g in self.grid],
            'violations': [{'l': l, 'i': str(i), 'size': size, 'bound': bound}
                           for l, i, size, bound in self.violations]
        }


@dataclass
class DescentReport:
    s_mat: SeriesMatrix
    s_inv: SeriesMatrix
    residual: SeriesMatrix
    log: List[StepRecord]
    s: Fraction
    eps: Fraction
    profile: PrecisionProfile
    monotonicity: List[Fraction] = field(default_factory=list)
    envelope: Optional[EnvelopeData] = None
    retries: List[str] = field(default_factory=list)

    def lines(self) -> List[str]:
        return [record.line() for record in self.log]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'profile': self.profile.describe(),
            's': str(self.s),
            'eps': str(self.eps),
            'steps': [record.to_dict() for record in self.log],
            'monotonicity': [str(x) for x in self.monotonicity],
            'retries': self.retries,
            'flags': self.residual.flags(),
            'envelope': self.envelope.to_dict() if self.envelope else None
        }


def envelope_from_sizes(points: List[Fraction], f_values: List[float], delta: Fraction,
                        p: int) -> List[Tuple[Fraction, float, float]]:
    """Discrete envelope in log_p units: g(i0) = f(i0), then
    g(next) = g(prev) + max(Δ·log_p(next/prev), f(next) − f(prev))."""
    grid = []
    g_prev = None
    for index, (i, f) in enumerate(zip(points, f_values)):
        if index == 0:
            g = f
        else:
            prev, f_prev = points[index - 1], f_values[index - 1]
            growth = float(delta) * math.log(float(i / prev), p)
            g = g_prev + max(growth, f - f_prev)
        grid.append((i, f, g))
        g_prev = g
    return grid


class DescentService:
    """Runs the two-phase descent with invariant checks and retries."""

    def __init__(self, max_iter: int = 40, retry_h: bool = True, retry_unramified: bool = True,
                 tolerance: float = 1e-9):
        self.max_iter = max_iter
        self.retry_h = retry_h
        self.retry_unramified = retry_unramified
        self.tolerance = tolerance
        self.logger = logging.getLogger(__name__)

    # -- steps --------------------------------------------------------

    def first_type_step(self, state: DescentState, step: StepClassification) -> Tuple[SeriesMatrix, SeriesMatrix]:
        """V = I + D·T̃_j·D^{-1}·t^j with T̃_j the Teichmüller lift of the reduced coefficient; W = V^{-1}."""
        profile = state.profile
        ring = profile.ring
        n = state.a.rows
        deviation = state.residual.minus_identity()
        coeffs = coefficient_matrix(deviation, step.j)
        lifted = []
        for row in coeffs:
            lifted.append([Series.monomial(profile, Coeff.teichmuller(ring, c.reduce()), step.j)
                           if not c.is_zero and c.val == 0 else Series.zero(profile) for c in row])
        correction = SeriesMatrix(profile, lifted)
        d_mat = state.d.matrix(profile)
        d_inv = state.d.inverse_matrix(profile)
        v = SeriesMatrix.identity(profile, n) + d_mat * correction * d_inv
        return v.inverse(), v

    def second_type_step(self, state: DescentState, step: StepClassification) -> Tuple[SeriesMatrix, SeriesMatrix]:
        """W = D·Y^{-1}·D^{-1} with Y the entrywise lift of the factored graded leading part.

        The graded part is a polynomial in u^{-1} with constant term I, so
        Y − I only carries positive exponents and Y is inverted by its
        Neumann series.
        """
        profile = state.profile
        field_ = profile.ring.field
        n = state.a.rows
        grading = grading_for(step.r_l, profile)
        graded = graded_matrix(state.residual, step.r_l, grading)
        if isinstance(laurent_det_unit(graded), NotUnit):
            raise InvariantViolated(f"graded part at r_l={step.r_l} is not invertible", graded=graded)
        moves = factor_elementary(graded)
        if moves_product(moves, field_, n) != graded:
            raise InvariantViolated(f"factorization of the graded part at r_l={step.r_l} does not multiply back")
        self.logger.debug(f"second-type step factored graded part into {len(moves)} moves")
        y = lift_matrix(graded, grading, profile)
        y_inv = unipotent_inverse(y)
        d_mat = state.d.matrix(profile)
        d_inv = state.d.inverse_matrix(profile)
        return d_mat * y_inv * d_inv, d_mat * y * d_inv

    # -- main loop ----------------------------------------------------

    def start(self, a: SeriesMatrix, d: DiagonalData, r: Fraction,
              u: Optional[SeriesMatrix] = None) -> DescentState:
        profile = a.profile
        n = a.rows
        if not a.is_square or n != d.rank:
            raise InvalidInput("A and D must be square of the same rank")
        r = Fraction(r)
        s, eps = choose_parameters(d, r, profile)
        if u is not None:
            s_mat = round_to_profile(u, profile, r)
            s_inv = s_mat.inverse()
        else:
            s_mat = SeriesMatrix.identity(profile, n)
            s_inv = SeriesMatrix.identity(profile, n)
        state = DescentState(a, d, s_mat, s_inv, r, s, eps)
        state.recompute()
        start_val = state.residual.minus_identity().gauss_val(r)
        if start_val <= eps:
            raise InvalidInput(f"val_r(D^-1 A − I) = {format_valuation(start_val)} must exceed r·s = {eps}")
        state.snapshots.append(state.residual)
        self.logger.info(f"Descent started: r={r} s={s} eps={eps} profile {profile.describe()}")
        return state

    def step(self, state: DescentState) -> Optional[StepRecord]:
        step = classify_step(state.residual, state.r, state.s)
        if step is None:
            return None
        if step.kind == 'first':
            w, v = self.first_type_step(state, step)
        else:
            w, v = self.second_type_step(state, step)
        before = state.residual
        state.apply(w, v)
        deviation = state.residual.minus_identity()
        val_r = deviation.gauss_val(state.r)
        if val_r <= state.eps:
            raise InvariantViolated(f"ε-invariant failed after step {state.l + 1}: "
                                    f"val_r = {format_valuation(val_r)} ≤ {state.eps}")
        if step.kind == 'first':
            old = coefficient_valuation(coefficient_matrix(before.minus_identity(), step.j))
            new = coefficient_valuation(coefficient_matrix(deviation, step.j))
            if new <= old:
                raise InvariantViolated(f"first-type step did not improve index {step.j}")
        elif deviation.gauss_val(step.r_l) <= 0:
            raise InvariantViolated(f"second-type step left val_{step.r_l} ≤ 0")
        state.l += 1
        record = StepRecord(state.l, step.type_number, step.j, step.r_l, val_r)
        state.log.append(record)
        state.snapshots.append(state.residual)
        self.logger.info(f"Descent step {record.line()}")
        return record

    def descend(self, a: SeriesMatrix, d: DiagonalData, r: Fraction, max_iter: Optional[int] = None,
                u: Optional[SeriesMatrix] = None) -> Tuple[SeriesMatrix, DescentReport]:
        max_iter = max_iter if max_iter is not None else self.max_iter
        state = self.start(a, d, r, u)
        retries: List[str] = []
        while True:
            if state.l >= max_iter:
                self.logger.error(f"Descent exceeded {max_iter} steps")
                raise MaxIterExceeded(f"descent did not finish in {max_iter} steps", log=state.log)
            try:
                record = self.step(state)
            except (NoGrading, ResidueUnsolvable) as e:
                self.enlarge(state, e, retries)
                continue
            if record is None:
                break
        report = DescentReport(
            s_mat=state.s_mat,
            s_inv=state.s_inv,
            residual=state.residual,
            log=state.log,
            s=state.s,
            eps=state.eps,
            profile=state.profile,
            monotonicity=[(state.r - rec.r_l) * rec.j for rec in state.log if rec.r_l is not None],
            retries=retries
        )
        report.envelope = self.monitor_envelope(state.a, state.d, state)
        self.logger.info(f"Descent finished after {state.l} steps, "
                         f"{len(report.envelope.violations)} envelope violations")
        return state.s_mat, report

    def enlarge(self, state: DescentState, error: Exception, retries: List[str]) -> None:
        """Retry once at h+1 (grading failures only) and once over d·2; re-raise when spent."""
        kinds = ('h', 'd') if isinstance(error, NoGrading) else ('d',)
        for kind in kinds:
            if any(retry.startswith(f"{kind}=") for retry in retries):
                continue
            if kind == 'h' and self.retry_h:
                profile = state.profile.with_h(state.profile.h + 1)
                self.logger.warning(f"{type(error).__name__} at h={state.profile.h}; retrying at h={profile.h}")
                retries.append(f"h={profile.h}")
                state.coerce(profile)
                return
            if kind == 'd' and self.retry_unramified:
                big, image = embed_extension(state.profile.ring, 2)
                self.logger.warning(f"{type(error).__name__} over d={state.profile.ring.d}; retrying over d={big.d}")
                retries.append(f"d={big.d}")
                state.embed(state.profile.with_ring(big), image)
                return
        self.logger.error(f"Error in descent step: {error}")
        raise error

    # -- diagnostics --------------------------------------------------

    def monitor_envelope(self, a: SeriesMatrix, d: DiagonalData, state: DescentState) -> EnvelopeData:
        """Check |B_{l,i}| ≤ g(i) for every recorded residual, in log_p units."""
        profile = a.profile
        p = profile.ring.p
        step = profile.step
        count = int(profile.e_max / step)
        points = [step * k for k in range(1, count + 1)]
        normalized = d.inverse_matrix(profile) * a
        sizes = []
        running = 0.0
        for i in points:
            val = coefficient_valuation(coefficient_matrix(normalized, i))
            if val != INF:
                running = max(running, float(-val))
            sizes.append(running)
        grid = envelope_from_sizes(points, sizes, d.delta, p)
        envelope = EnvelopeData(grid, d.delta, points[0] if points else None)
        for l, snapshot in enumerate(state.snapshots):
            for i, _, g in grid:
                val = coefficient_valuation(coefficient_matrix(snapshot, i))
                if val == INF:
                    continue
                size = float(-val)
                if size > g + self.tolerance:
                    envelope.violations.append((l, i, size, g))
        return envelope


def descend(a: SeriesMatrix, d: DiagonalData, r: Fraction, max_iter: int = 40,
            u: Optional[SeriesMatrix] = None) -> Tuple[SeriesMatrix, DescentReport]:
    return DescentService(max_iter=max_iter).descend(a, d, r, u=u)


def monitor_envelope(a: SeriesMatrix, d: DiagonalData, state: DescentState) -> EnvelopeData:
    return DescentService().monitor_envelope(a, d, state)
