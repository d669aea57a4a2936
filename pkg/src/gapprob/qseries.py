"""Pochhammer symbols, q-shifted factorials, and (basic) hypergeometric sums.

A single entry point, ``hyp_sum``, evaluates both the classical series

    rFs(a_1..a_r; b_1..b_s; z) = sum_k  prod (a_i)_k / prod (b_j)_k * z**k / k!

and, when a base q is supplied, the basic series

    rPHIs(a_1..a_r; b_1..b_s; q, z)
        = sum_k  prod (a_i;q)_k / prod (b_j;q)_k
                 * ((-1)**k * q**binom(k,2))**(1+s-r) * z**k / (q;q)_k.

Terminating series (some upper parameter a nonpositive integer, or q**(-n))
are summed exactly with a running term recurrence in ratio form, which
avoids factorial overflow and repeated recomputation. Convergent series are
cut off once |term| < tol * |partial sum| holds for three consecutive terms,
guarding against an accidentally small single term.

All functions are pure and thread-safe.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp

from .errors import Divergent, InvalidQ, PoleInLowerParameter
from .precision import Real, real, rel_diff, tau

__all__ = [
    "HypSeriesSpec",
    "pochhammer",
    "q_pochhammer",
    "q_pochhammer_inf",
    "hyp_sum",
    "hyp_f",
    "hyp_phi",
]

_MAX_TERMS = 500_000


def pochhammer(a: Real, n: int) -> Real:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1), with (a)_0 = 1."""
    if n < 0:
        raise ValueError("pochhammer order must be nonnegative")
    a = real(a)
    out = mp.mpf(1)
    for j in range(n):
        out *= a + j
    return out


def q_pochhammer(a: Real, q: Real, n: int) -> Real:
    """q-shifted factorial (a;q)_n = prod_{j<n} (1 - a q**j), with (a;q)_0 = 1."""
    if n < 0:
        raise ValueError("q_pochhammer order must be nonnegative")
    a = real(a)
    q = real(q)
    out = mp.mpf(1)
    apow = a
    for _ in range(n):
        out *= 1 - apow
        apow *= q
    return out


def q_pochhammer_inf(a: Real, q: Real, tol: Real | None = None) -> Real:
    """Infinite product (a;q)_inf = prod_{l>=0} (1 - a q**l) for 0 < q < 1.

    The product is truncated once the remaining factors are provably within
    relative tol of 1: |a| q**l < tol * (1-q) / 4 bounds the tail of
    log-factors by tol/2. tol defaults to 2**(-precision).
    """
    q = real(q)
    if not (0 < q < 1):
        raise InvalidQ(f"q must lie in (0, 1), got {q}")
    a = real(a)
    if a == 0:
        return mp.mpf(1)
    if tol is None:
        tol = mp.mpf(2) ** (-mp.prec)
    threshold = tol * (1 - q) / 4
    out = mp.mpf(1)
    apow = a
    for _ in range(_MAX_TERMS):
        if abs(apow) < threshold:
            return out
        factor = 1 - apow
        if factor == 0:
            return mp.mpf(0)
        out *= factor
        apow *= q
    raise Divergent("q_pochhammer_inf failed to reach its truncation threshold")


@dataclass(frozen=True)
class HypSeriesSpec:
    """A (basic) hypergeometric series: upper/lower parameters, argument, optional base q."""

    upper: tuple[Real, ...]
    lower: tuple[Real, ...]
    argument: Real
    q: Real | None = None

    @classmethod
    def of(cls, upper, lower, argument, q=None) -> "HypSeriesSpec":
        return cls(
            tuple(real(a) for a in upper),
            tuple(real(b) for b in lower),
            real(argument),
            None if q is None else real(q),
        )


def _as_nonpositive_int(a: Real) -> int | None:
    """Return n >= 0 with a == -n when a is a nonpositive integer, else None."""
    n = mp.nint(a)
    if n <= 0 and abs(a - n) <= tau() * max(abs(a), mp.mpf(1)):
        return int(-n)
    return None


def _as_negative_q_power(a: Real, q: Real) -> int | None:
    """Return n >= 0 with a == q**(-n) when that holds, else None."""
    if a <= 0:
        return None
    n = mp.nint(-mp.log(a) / mp.log(q))
    if n < 0:
        return None
    if rel_diff(a, q ** (-n)) <= 16 * tau():
        return int(n)
    return None


def _termination_index(spec: HypSeriesSpec) -> int | None:
    stops = []
    for a in spec.upper:
        n = (
            _as_nonpositive_int(a)
            if spec.q is None
            else _as_negative_q_power(a, spec.q)
        )
        if n is not None:
            stops.append(n)
    return min(stops) if stops else None


def _lower_pole_index(spec: HypSeriesSpec) -> int | None:
    """Smallest m such that some lower-parameter factor vanishes at term m+1."""
    poles = []
    for b in spec.lower:
        m = (
            _as_nonpositive_int(b)
            if spec.q is None
            else _as_negative_q_power(b, spec.q)
        )
        if m is not None:
            poles.append(m)
    return min(poles) if poles else None


def hyp_sum(spec: HypSeriesSpec) -> Real:
    """Evaluate the series described by spec.

    Terminating series are summed exactly (up to rounding). Non-terminating
    series are summed when they converge (r <= s always; r = s+1 needs
    |argument| < 1); otherwise Divergent is raised. A lower parameter whose
    factor vanishes before termination raises PoleInLowerParameter.
    """
    if spec.q is not None and not (0 < spec.q < 1):
        raise InvalidQ(f"series base q must lie in (0, 1), got {spec.q}")
    r, s = len(spec.upper), len(spec.lower)
    k_stop = _termination_index(spec)
    pole = _lower_pole_index(spec)
    if pole is not None and (k_stop is None or pole < k_stop):
        raise PoleInLowerParameter(
            f"lower parameter factor vanishes at term {pole + 1} before termination"
        )
    if k_stop is None:
        if r > s + 1:
            raise Divergent(f"series with {r} upper and {s} lower parameters does not terminate")
        if r == s + 1 and abs(spec.argument) >= 1:
            raise Divergent(f"non-terminating balanced series needs |z| < 1, got |z| = {abs(spec.argument)}")

    # extra per-step factor ((-1) q**k)**(1+s-r) applies in the q-case only
    extra_exp = (1 + s - r) if spec.q is not None else 0
    tol = mp.mpf(2) ** (-mp.prec)
    term = mp.mpf(1)
    total = term
    qpow = mp.mpf(1) if spec.q is not None else None
    small_streak = 0
    k = 0
    while True:
        if k_stop is not None and k >= k_stop:
            return total
        if k >= _MAX_TERMS:
            raise Divergent(f"series did not converge within {_MAX_TERMS} terms")
        if spec.q is None:
            num = mp.mpf(1)
            for a in spec.upper:
                num *= a + k
            den = mp.mpf(1)
            for b in spec.lower:
                den *= b + k
            term *= num * spec.argument / (den * (k + 1))
        else:
            num = mp.mpf(1)
            for a in spec.upper:
                num *= 1 - a * qpow
            den = mp.mpf(1)
            for b in spec.lower:
                den *= 1 - b * qpow
            step = num * spec.argument / (den * (1 - spec.q * qpow))
            if extra_exp:
                step *= (-qpow) ** extra_exp
            term *= step
            qpow *= spec.q
        total += term
        k += 1
        if k_stop is None:
            if abs(term) < tol * abs(total):
                small_streak += 1
                if small_streak >= 3:
                    return total
            else:
                small_streak = 0


def hyp_f(upper, lower, z) -> Real:
    """Classical rFs sum."""
    return hyp_sum(HypSeriesSpec.of(upper, lower, z))


def hyp_phi(upper, lower, q, z) -> Real:
    """Basic rPHIs sum with base q."""
    return hyp_sum(HypSeriesSpec.of(upper, lower, z, q=q))
