"""Exception types shared across the library.

Every error raised by gapprob derives from GapProbError. Errors that can
occur mid-recurrence carry an optional ``step`` attribute naming the index
s at which the failure happened, so front ends can report it.
"""
from __future__ import annotations

__all__ = [
    "GapProbError",
    "SingularMatrix",
    "InvalidQ",
    "Divergent",
    "PoleInLowerParameter",
    "InvalidParameter",
    "UnknownFamily",
    "IndexOutOfRange",
    "DegenerateWeight",
    "TooLarge",
    "PoleHit",
    "ResidueViolation",
    "UnsupportedFamily",
    "EpsilonSingular",
    "DegenerateParameterization",
    "DPSingular",
    "RootNotFound",
    "DegenerateKappa",
    "MonotonicityViolation",
]


class GapProbError(Exception):
    """Base class for all gapprob errors."""

    def __init__(self, message: str = "", step: int | None = None):
        self.step = step
        if step is not None:
            message = f"{message} (at step s={step})" if message else f"step s={step}"
        super().__init__(message)


class SingularMatrix(GapProbError):
    """2x2 matrix inversion requested with |det| at or below the singular tolerance."""


class InvalidQ(GapProbError):
    """A base q outside (0, 1) was passed where a q-geometric base is required."""


class Divergent(GapProbError):
    """A hypergeometric series neither terminates nor converges."""


class PoleInLowerParameter(GapProbError):
    """A lower series parameter hits a pole before the series terminates."""


class InvalidParameter(GapProbError):
    """A family parameter lies outside its documented range."""


class UnknownFamily(GapProbError):
    """The requested family name is not registered."""


class IndexOutOfRange(GapProbError):
    """A lattice index beyond the family's support was requested."""


class DegenerateWeight(GapProbError):
    """A weight or norm that must be strictly positive is not; usually precision exhaustion."""


class TooLarge(GapProbError):
    """A brute-force enumeration would exceed the subset-count guard."""


class PoleHit(GapProbError):
    """Evaluation was requested within tolerance of a lattice pole."""


class ResidueViolation(GapProbError):
    """A Riemann-Hilbert residue condition failed beyond tolerance."""


class UnsupportedFamily(GapProbError):
    """The operation is defined only for a subset of families that excludes this one."""


class EpsilonSingular(GapProbError):
    """The step determinant epsilon_s vanished; retry at higher precision.

    The underlying matrix recurrence is always solvable for valid families,
    so this signals precision exhaustion or parameters outside the valid
    ranges rather than a true mathematical obstruction.
    """


class DegenerateParameterization(GapProbError):
    """The scalar (f, g) chart does not cover the current matrix state."""


class DPSingular(GapProbError):
    """A denominator in a discrete Painleve step vanished."""


class RootNotFound(GapProbError):
    """No admissible root of the off-diagonal entry was found."""


class DegenerateKappa(GapProbError):
    """kappa_1 = kappa_2 makes the nondegenerate q-difference reduction unusable."""


class MonotonicityViolation(GapProbError):
    """A gap-probability sequence decreased beyond tolerance; precision exhaustion."""
