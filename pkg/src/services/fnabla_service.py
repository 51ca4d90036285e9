"""
Frobenius–connection compatibility checks.

A module is given by its Frobenius matrix A and its connection matrix G with
respect to ∂ = t·d/dt.  ∇F = pF∇ becomes G·A + ∂(A) − p·A·σ(G) = 0.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..errors import InvalidInput, NotInvertible
from ..linalg.series_matrix import SeriesMatrix
from ..rings.coeff_ring import Coeff
from ..rings.series_ring import INF, PrecisionProfile, format_valuation


@dataclass
class FNablaModule:
    a: SeriesMatrix
    g: SeriesMatrix

    def __post_init__(self):
        if not (self.a.is_square and self.g.is_square and self.a.rows == self.g.rows):
            raise InvalidInput("Frobenius and connection matrices must be square of equal rank")
        self.a.profile.check_same(self.g.profile)

    @property
    def profile(self) -> PrecisionProfile:
        return self.a.profile

    @property
    def rank(self) -> int:
        return self.a.rows


@dataclass
class ContractionResult:
    vanished: bool
    valuations: List[Any] = field(default_factory=list)

    @property
    def strictly_increasing(self) -> bool:
        finite = [v for v in self.valuations if v != INF]
        return all(x < y for x, y in zip(finite, finite[1:]))


@dataclass
class UnipotentCertificate:
    blocks: List[Tuple[int, int]] = field(default_factory=list)
    nilpotency_degree: Optional[int] = None
    reasons: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'blocks': [list(b) for b in self.blocks],
            'nilpotency_degree': self.nilpotency_degree,
            'reasons': self.reasons
        }


class FNablaService:
    """Compatibility residuals, gauge changes and unipotence checks."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def check_compatibility(self, module: FNablaModule) -> SeriesMatrix:
        a, g = module.a, module.g
        p = Coeff.from_int(module.profile.ring, module.profile.ring.p)
        return g * a + a.derivation() - (a * g.frobenius()) * p

    def gauge_transform(self, module: FNablaModule, s: SeriesMatrix) -> FNablaModule:
        """(S·A·σ(S)^{-1}, S·G·S^{-1} − ∂(S)·S^{-1})."""
        s_inv = s.inverse()
        a = s * module.a * s.frobenius().inverse()
        g = s * module.g * s_inv - s.derivation() * s_inv
        return FNablaModule(a, g)

    def block_relation_residual(self, module: FNablaModule, split: int) -> SeriesMatrix:
        """R·X − p·Z·σ(R) for A = (X Y; 0 Z) and G = (P Q; R S) split at `split`."""
        n = module.rank
        if not 0 < split < n:
            raise InvalidInput(f"block split {split} outside 1..{n - 1}")
        x = module.a.block(0, split, 0, split)
        z = module.a.block(split, n, split, n)
        r = module.g.block(split, n, 0, split)
        p = Coeff.from_int(module.profile.ring, module.profile.ring.p)
        return r * x - (z * r.frobenius()) * p

    def contraction_vanishing(self, r0: SeriesMatrix, x: SeriesMatrix, z: SeriesMatrix,
                              n_steps: int) -> ContractionResult:
        """Iterate R ↦ p·Z·σ(R)·X^{-1} and report whether R reaches 0 at precision."""
        try:
            x_inv = x.inverse()
        except NotInvertible as e:
            self.logger.error(f"Error inverting X for contraction: {e}")
            raise
        if x_inv.gauss_val(0) < 0 or z.gauss_val(0) < 0:
            raise InvalidInput("contraction needs X^{-1} and Z integral")
        p = Coeff.from_int(r0.profile.ring, r0.profile.ring.p)
        current = r0
        valuations = [current.gauss_val(0)]
        for step in range(n_steps):
            if current.is_zero:
                break
            current = (z * current.frobenius() * x_inv) * p
            valuations.append(current.gauss_val(0))
            self.logger.debug(f"contraction step {step + 1}: val {format_valuation(valuations[-1])}")
        result = ContractionResult(current.is_zero, valuations)
        self.logger.info(f"Contraction {'vanished' if result.vanished else 'did not vanish'} "
                         f"after {len(valuations) - 1} steps")
        return result

    def verify_unipotent(self, a: SeriesMatrix, g: SeriesMatrix) -> Tuple[bool, UnipotentCertificate]:
        """Constant block upper-triangular A with scalar diagonal blocks and nilpotent block-strict G."""
        certificate = UnipotentCertificate()
        module = FNablaModule(a, g)
        n = module.rank
        if not a.is_constant():
            certificate.reasons.append("Frobenius matrix has non-constant entries")
            return False, certificate

        diagonal = [a[i, i].coefficient(0) for i in range(n)]
        blocks: List[Tuple[int, int]] = []
        start = 0
        for i in range(1, n + 1):
            if i == n or diagonal[i] != diagonal[start]:
                blocks.append((start, i))
                start = i
        certificate.blocks = blocks
        block_of = {i: k for k, (lo, hi) in enumerate(blocks) for i in range(lo, hi)}

        for i in range(n):
            if diagonal[i].is_zero:
                certificate.reasons.append(f"diagonal entry {i} vanishes")
            for j in range(n):
                entry = a[i, j]
                if block_of[i] > block_of[j] and not entry.is_zero:
                    certificate.reasons.append(f"A has a nonzero entry below the blocks at ({i},{j})")
                if block_of[i] == block_of[j] and i != j and not entry.is_zero:
                    certificate.reasons.append(f"diagonal block of A is not scalar at ({i},{j})")
                if block_of[i] >= block_of[j] and not g[i, j].is_zero:
                    certificate.reasons.append(f"G is not block-strictly upper-triangular at ({i},{j})")

        power = g
        for k in range(1, n + 1):
            if power.is_zero:
                certificate.nilpotency_degree = k
                break
            power = power * g
        if certificate.nilpotency_degree is None:
            certificate.reasons.append("connection matrix is not nilpotent")

        residual = self.check_compatibility(module)
        if not residual.is_zero:
            certificate.reasons.append(
                f"compatibility residual has valuation {format_valuation(residual.gauss_val(0))}")
        verdict = not certificate.reasons
        self.logger.info(f"Unipotent check {'passed' if verdict else 'failed'} with blocks {blocks}")
        return verdict, certificate


def check_compatibility(module: FNablaModule) -> SeriesMatrix:
    return FNablaService().check_compatibility(module)


def contraction_vanishing(r0: SeriesMatrix, x: SeriesMatrix, z: SeriesMatrix, n_steps: int) -> ContractionResult:
    return FNablaService().contraction_vanishing(r0, x, z, n_steps)


def verify_unipotent(a: SeriesMatrix, g: SeriesMatrix) -> Tuple[bool, UnipotentCertificate]:
    return FNablaService().verify_unipotent(a, g)
