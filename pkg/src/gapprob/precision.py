"""Precision context, 2x2 matrix algebra, and polynomial evaluation.

All real scalars in the library are mpmath floats governed by one global
binary precision (default 256 bits). Importing this module sets the default;
``set_precision`` changes it for everything downstream.

Tolerance conventions, used consistently across the package:

* ``tau()`` is 2**(-precision/2), the threshold separating numerical noise
  from structure at the active precision.
* Quantities expected to be exactly zero are compared against ``tau()``
  times a stated magnitude scale (absolute comparison).
* Quantities expected to be equal are compared with ``rel_diff`` (relative
  comparison).

Values are immutable and all operations here are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from mpmath import mp

from .errors import SingularMatrix

__all__ = [
    "DEFAULT_PRECISION",
    "Real",
    "set_precision",
    "get_precision",
    "real",
    "tau",
    "rel_diff",
    "Mat2",
    "mat2_identity",
    "mat2_add",
    "mat2_sub",
    "mat2_scale",
    "mat2_mul",
    "mat2_inv",
    "Poly",
    "monomial",
    "poly_eval",
    "poly_add",
    "poly_scale",
    "poly_mul",
    "poly_derivative",
]

DEFAULT_PRECISION = 256

mp.prec = DEFAULT_PRECISION

# The scalar type. mpmath binds mpf instances to the global context, so a
# plain alias is enough; ``real`` is the checked constructor.
Real = mp.mpf


def set_precision(bits: int) -> None:
    """Set the global working precision in bits (positive integer)."""
    if not isinstance(bits, int) or bits <= 0:
        raise ValueError(f"precision must be a positive integer, got {bits!r}")
    mp.prec = bits


def get_precision() -> int:
    """Return the active working precision in bits."""
    return mp.prec


def real(x: int | float | str | Real) -> Real:
    """Convert x to a Real at the working precision.

    Accepts ints and decimal strings (exact up to the working precision),
    floats (converted with their exact binary value), and Reals.
    """
    if isinstance(x, (int, float, str)) or isinstance(x, mp.mpf):
        return mp.mpf(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Real")


def tau() -> Real:
    """Default zero/singularity threshold at the active precision."""
    return mp.mpf(2) ** (-mp.mpf(mp.prec) / 2)


def rel_diff(a: Real, b: Real) -> Real:
    """|a - b| scaled by the larger magnitude; 0 when both vanish."""
    scale = max(abs(a), abs(b))
    if scale == 0:
        return mp.mpf(0)
    return abs(a - b) / scale


@dataclass(frozen=True)
class Mat2:
    """2x2 matrix of Reals."""

    a11: Real
    a12: Real
    a21: Real
    a22: Real

    def det(self) -> Real:
        return self.a11 * self.a22 - self.a12 * self.a21

    def trace(self) -> Real:
        return self.a11 + self.a22

    def norm(self) -> Real:
        """Max-entry norm; the magnitude scale for zero tests on entries."""
        return max(abs(self.a11), abs(self.a12), abs(self.a21), abs(self.a22))


def mat2_identity() -> Mat2:
    return Mat2(mp.mpf(1), mp.mpf(0), mp.mpf(0), mp.mpf(1))


def mat2_add(a: Mat2, b: Mat2) -> Mat2:
    return Mat2(a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22)


def mat2_sub(a: Mat2, b: Mat2) -> Mat2:
    return Mat2(a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22)


def mat2_scale(a: Mat2, c: Real) -> Mat2:
    return Mat2(c * a.a11, c * a.a12, c * a.a21, c * a.a22)


def mat2_mul(a: Mat2, b: Mat2) -> Mat2:
    """Matrix product a.b at working precision."""
    return Mat2(
        a.a11 * b.a11 + a.a12 * b.a21,
        a.a11 * b.a12 + a.a12 * b.a22,
        a.a21 * b.a11 + a.a22 * b.a21,
        a.a21 * b.a12 + a.a22 * b.a22,
    )


def mat2_inv(a: Mat2, tol: Real | None = None) -> Mat2:
    """Inverse of a.

    Raises SingularMatrix when |det| <= tol * norm(a)**2 (relative test;
    tol defaults to tau()), i.e. when the inverse would not be trustworthy
    at the working precision.
    """
    d = a.det()
    threshold = (tau() if tol is None else tol) * a.norm() ** 2
    if abs(d) <= threshold:
        raise SingularMatrix(f"matrix with |det| = {abs(d)} below threshold {threshold}")
    inv_d = 1 / d
    return Mat2(a.a22 * inv_d, -a.a12 * inv_d, -a.a21 * inv_d, a.a11 * inv_d)


@dataclass(frozen=True)
class Poly:
    """Dense real polynomial, coefficients in ascending degree order.

    The zero polynomial has an empty coefficient tuple and degree -1.
    """

    coeffs: tuple[Real, ...]

    @classmethod
    def of(cls, coeffs: Iterable[int | float | str | Real], strip_tol: Real | None = None) -> Poly:
        """Build a Poly, stripping trailing coefficients of magnitude <= strip_tol.

        strip_tol defaults to 0, i.e. only exact zeros are stripped; pass
        tau() when the coefficients come out of a rounded computation.
        """
        cs = [real(c) for c in coeffs]
        cut = real(0) if strip_tol is None else strip_tol
        while cs and abs(cs[-1]) <= cut:
            cs.pop()
        return cls(tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z: Real) -> Real:
        return poly_eval(self, z)


def monomial(n: int) -> Poly:
    """The polynomial z**n."""
    if n < 0:
        raise ValueError("monomial degree must be nonnegative")
    return Poly(tuple([mp.mpf(0)] * n + [mp.mpf(1)]))


def poly_eval(p: Poly, z: Real) -> Real:
    """Horner evaluation of p at z, at working precision."""
    acc = mp.mpf(0)
    for c in reversed(p.coeffs):
        acc = acc * z + c
    return acc


def poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p.coeffs), len(q.coeffs))
    cs = []
    for i in range(n):
        a = p.coeffs[i] if i < len(p.coeffs) else mp.mpf(0)
        b = q.coeffs[i] if i < len(q.coeffs) else mp.mpf(0)
        cs.append(a + b)
    return Poly.of(cs)


def poly_scale(p: Poly, c: Real) -> Poly:
    return Poly.of([c * ci for ci in p.coeffs])


def poly_mul(p: Poly, q: Poly) -> Poly:
    if not p.coeffs or not q.coeffs:
        return Poly(())
    out = [mp.mpf(0)] * (len(p.coeffs) + len(q.coeffs) - 1)
    for i, a in enumerate(p.coeffs):
        for j, b in enumerate(q.coeffs):
            out[i + j] += a * b
    return Poly.of(out)


def poly_derivative(p: Poly) -> Poly:
    if len(p.coeffs) <= 1:
        return Poly(())
    return Poly.of([i * c for i, c in enumerate(p.coeffs) if i >= 1])
