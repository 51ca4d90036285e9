"""
Exception hierarchy for slopeforge.

Input errors map to CLI exit code 2, algorithmic failures to exit code 1.
"""

from typing import Any, Dict, List, Optional


class SlopeforgeError(Exception):
    """Base class for every error raised by the library."""

    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error': self.__class__.__name__,
            'message': str(self),
            'details': {k: str(v) for k, v in self.details.items()}
        }


class InputError(SlopeforgeError):
    """Malformed or inconsistent input."""
    exit_code = 2


class AlgorithmError(SlopeforgeError):
    """An algorithm could not finish at the available precision."""
    exit_code = 1


class ParseError(InputError):
    """Instance text does not follow the grammar."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})", line=line, column=column)
        self.line = line
        self.column = column


class ProfileViolation(InputError):
    """A value does not conform to its precision profile."""


class InvalidInput(InputError):
    """Arguments violate an operation's precondition."""


class SpecMismatch(InputError):
    """Operands live over different rings or profiles."""


class NotIntegral(InputError):
    """Residue reduction requested for a non-integral element."""


class DivisionByZeroPrecision(AlgorithmError):
    """Inversion of an element that is zero to the stored precision."""


class NotInvertible(AlgorithmError):
    """A series or matrix has no inverse at the stored precision."""


class PrecisionExhausted(AlgorithmError):
    """No usable pivot remains at the stored precision."""


class NotStabilized(AlgorithmError):
    """Newton polygon estimates did not stabilize before n_max."""

    def __init__(self, message: str, partial: Optional[List[Any]] = None):
        super().__init__(message, partial=partial)
        self.partial = partial or []


class ResidueUnsolvable(AlgorithmError):
    """The constant-term residue equation has no solution over F_{p^d}."""


class NonConvergent(AlgorithmError):
    """An iteration stopped improving its residual."""


class NoGrading(AlgorithmError):
    """No residue-ring generator exists for the requested radius."""


class RoundingTooCoarse(AlgorithmError):
    """Rounding to the target profile destroyed the approximation."""


class InvariantViolated(AlgorithmError):
    """An in-loop invariant assertion failed."""


class MaxIterExceeded(AlgorithmError):
    """An iteration ran out of its step budget."""

    def __init__(self, message: str, log: Optional[List[Any]] = None):
        super().__init__(message, steps=len(log or []))
        self.log = log or []
