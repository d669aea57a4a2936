"""Registry of the 14 discrete orthogonal polynomial families.

Each family is described by its lattice (the orthogonality set), a strictly
positive weight omega(x), and a pair of entire functions d1, d2 tied to the
weight by the ratio identity

    omega(x-1) / omega(x) = eta * d1(pi_x) / d2(pi_x),   1 <= x <= N,

where pi_x is the x-th lattice point, sigma is the affine map with
sigma(pi_{x+1}) = pi_x, and eta is its derivative. Families whose d1 and d2
are both linear support the scalar recurrence engines; the others are
registry + oracle only.

Weight values are produced incrementally from omega(0) through the ratio
omega(x)/omega(x-1), which keeps long lattice sums cheap and avoids huge
intermediate factorials. A global sign flip is applied when omega(0) < 0
(possible for the second Hahn parameter branch); the ensemble and all gap
probabilities are invariant under that flip. Parameters inside the classical
ranges give strictly positive weights; a few ranges are deliberately left
open (little q-Jacobi b, for instance), where the weight is signed but every
determinantal quantity downstream remains well defined.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping

from mpmath import mp

from .errors import (
    DegenerateWeight,
    IndexOutOfRange,
    InvalidParameter,
    UnknownFamily,
)
from .precision import Poly, Real, real, rel_diff

__all__ = [
    "LatticeKind",
    "LatticeSpec",
    "FamilySpec",
    "FAMILY_NAMES",
    "RECURRENCE_FAMILY_NAMES",
    "family_parameter_names",
    "family_description",
    "family_lattice_label",
    "make_family",
    "weight",
    "ratio_identity_residual",
    "check_ratio_identity",
    "x_coordinate",
    "density_value",
]


class LatticeKind(enum.Enum):
    """Shape of the orthogonality set."""

    LINEAR = "linear"                       # pi_x = x
    Q_GEOMETRIC_DECREASING = "q^x"          # pi_x = q**x, decreasing to 0
    Q_GEOMETRIC_INCREASING = "q^-x"         # pi_x = q**(-x), increasing


@dataclass(frozen=True)
class LatticeSpec:
    """Orthogonality set {pi_x} with its affine shift sigma.

    N is the largest index (size - 1); None means infinite. The shift
    satisfies sigma(pi_{x+1}) = pi_x and eta is its derivative, so that
    sigma(z1) - sigma(z2) = eta * (z1 - z2).
    """

    kind: LatticeKind
    q: Real | None = None
    N: int | None = None

    def point(self, x: int) -> Real:
        """The lattice point pi_x."""
        if self.kind is LatticeKind.LINEAR:
            return real(x)
        if self.kind is LatticeKind.Q_GEOMETRIC_DECREASING:
            return self.q**x
        return self.q ** (-x)

    def sigma(self, z: Real) -> Real:
        if self.kind is LatticeKind.LINEAR:
            return z - 1
        if self.kind is LatticeKind.Q_GEOMETRIC_DECREASING:
            return z / self.q
        return self.q * z

    def sigma_inv(self, z: Real) -> Real:
        if self.kind is LatticeKind.LINEAR:
            return z + 1
        if self.kind is LatticeKind.Q_GEOMETRIC_DECREASING:
            return self.q * z
        return z / self.q

    @property
    def eta(self) -> Real:
        if self.kind is LatticeKind.LINEAR:
            return real(1)
        if self.kind is LatticeKind.Q_GEOMETRIC_DECREASING:
            return 1 / self.q
        return self.q


@dataclass(frozen=True)
class FamilySpec:
    """A fully populated family descriptor.

    ordering records what the gap probability D_s means on this lattice:
    "increasing" lattices give D_s = Prob{max particle < pi_s}, "decreasing"
    ones give D_s = Prob{min particle > pi_s}.
    """

    name: str
    params: Mapping[str, Real]
    lattice: LatticeSpec
    d1: Poly
    d2: Poly
    supports_linear_recurrence: bool
    ordering: str
    _w0: Real = field(repr=False, compare=False)
    _increment: Callable[[int], Real] = field(repr=False, compare=False)
    _wcache: list = field(default_factory=list, repr=False, compare=False)

    @property
    def eta(self) -> Real:
        return self.lattice.eta

    def point(self, x: int) -> Real:
        return self.lattice.point(x)


def _req(params: dict, names: list[str], family: str) -> list[Real]:
    given = set(params)
    wanted = set(names)
    if given != wanted:
        missing = sorted(wanted - given)
        extra = sorted(given - wanted)
        bits = []
        if missing:
            bits.append(f"missing {missing}")
        if extra:
            bits.append(f"unexpected {extra}")
        raise InvalidParameter(f"{family} takes parameters {names}: " + ", ".join(bits))
    return [params[n] for n in names]


def _int_N(value: Real, family: str) -> int:
    n = int(mp.nint(value))
    if value != n or n < 1:
        raise InvalidParameter(f"{family} requires integer N >= 1, got {value}")
    return n


def _check_q(q: Real, family: str) -> None:
    if not (0 < q < 1):
        raise InvalidParameter(f"{family} requires 0 < q < 1, got q={q}")


@dataclass(frozen=True)
class _FamilyDef:
    description: str
    param_names: tuple[str, ...]
    build: Callable[[dict], tuple]


def _build_charlier(p: dict):
    (a,) = _req(p, ["a"], "charlier")
    if not a > 0:
        raise InvalidParameter(f"charlier requires a > 0, got a={a}")
    lat = LatticeSpec(LatticeKind.LINEAR)
    d1 = Poly.of([0, 1])
    d2 = Poly.of([a])
    return lat, d1, d2, real(1), lambda x: a / x


def _build_meixner(p: dict):
    beta, c = _req(p, ["beta", "c"], "meixner")
    if not beta > 0:
        raise InvalidParameter(f"meixner requires beta > 0, got beta={beta}")
    if not (0 < c < 1):
        raise InvalidParameter(f"meixner requires 0 < c < 1, got c={c}")
    lat = LatticeSpec(LatticeKind.LINEAR)
    d1 = Poly.of([0, 1])
    d2 = Poly.of([c * (beta - 1), c])
    return lat, d1, d2, real(1), lambda x: (beta + x - 1) * c / x


def _build_krawtchouk(p: dict):
    pp, Nr = _req(p, ["p", "N"], "krawtchouk")
    N = _int_N(Nr, "krawtchouk")
    if not (0 < pp < 1):
        raise InvalidParameter(f"krawtchouk requires 0 < p < 1, got p={pp}")
    lat = LatticeSpec(LatticeKind.LINEAR, N=N)
    scale = pp / (pp - 1)
    d1 = Poly.of([0, 1])
    d2 = Poly.of([-(N + 1) * scale, scale])
    w0 = (1 - pp) ** N
    return lat, d1, d2, w0, lambda x: (N - x + 1) * pp / (x * (1 - pp))


def _build_hahn(p: dict):
    alpha, beta, Nr = _req(p, ["alpha", "beta", "N"], "hahn")
    N = _int_N(Nr, "hahn")
    pos = alpha > -1 and beta > -1
    neg = alpha < -N and beta < -N
    if not (pos or neg):
        raise InvalidParameter(
            f"hahn requires alpha, beta > -1 or alpha, beta < -N, got alpha={alpha}, beta={beta}, N={N}"
        )
    lat = LatticeSpec(LatticeKind.LINEAR, N=N)
    d1 = Poly.of([0, -(beta + N + 1), 1])
    d2 = Poly.of([-(N + 1) * alpha, alpha - N - 1, 1])
    # omega(0) = binom(beta + N, N) = (beta+1)_N / N!
    w0 = real(1)
    for j in range(N):
        w0 *= (beta + 1 + j) / (j + 1)
    return lat, d1, d2, w0, lambda x: (alpha + x) * (N - x + 1) / (x * (beta + N - x + 1))


def _build_q_hahn(p: dict):
    alpha, beta, Nr, q = _req(p, ["alpha", "beta", "N", "q"], "q_hahn")
    N = _int_N(Nr, "q_hahn")
    _check_q(q, "q_hahn")
    pos = 0 < alpha < 1 / q and 0 < beta < 1 / q
    neg = alpha > q**-N and beta > q**-N
    if not (pos or neg):
        raise InvalidParameter(
            f"q_hahn requires 0 < alpha, beta < 1/q or alpha, beta > q**-N, got alpha={alpha}, beta={beta}"
        )
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_INCREASING, q=q, N=N)
    qN1 = q ** (-N - 1)
    d1 = Poly.of([alpha * qN1, -(alpha * beta + alpha * qN1), alpha * beta])
    d2 = Poly.of([alpha * qN1, -(alpha + qN1), 1])

    def inc(x: int) -> Real:
        return (
            (1 - alpha * q**x)
            * (1 - q ** (x - 1 - N))
            / ((1 - q**x) * (1 - q ** (x - 1 - N) / beta) * (alpha * beta * q))
        )

    return lat, d1, d2, real(1), inc


def _build_little_q_jacobi(p: dict):
    a, b, q = _req(p, ["a", "b", "q"], "little_q_jacobi")
    _check_q(q, "little_q_jacobi")
    if not (0 < a < 1 / q):
        raise InvalidParameter(f"little_q_jacobi requires 0 < a < 1/q, got a={a}")
    # b < 1/q gives a positive weight; larger b is accepted too (signed
    # weight, determinantal quantities stay well defined).
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_DECREASING, q=q)
    d1 = Poly.of([-1, 1])
    d2 = Poly.of([-a, a * b])
    return lat, d1, d2, real(1), lambda x: (1 - b * q**x) * a * q / (1 - q**x)


def _build_q_meixner(p: dict):
    b, c, q = _req(p, ["b", "c", "q"], "q_meixner")
    _check_q(q, "q_meixner")
    if not (0 < b < 1 / q):
        raise InvalidParameter(f"q_meixner requires 0 < b < 1/q, got b={b}")
    if not c > 0:
        raise InvalidParameter(f"q_meixner requires c > 0, got c={c}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_INCREASING, q=q)
    d1 = Poly.of([-b * c, b * c - 1, 1])
    d2 = Poly.of([-b * c, c])

    def inc(x: int) -> Real:
        return (1 - b * q**x) * c * q ** (x - 1) / ((1 - q**x) * (1 + b * c * q**x))

    return lat, d1, d2, real(1), inc


def _build_quantum_q_krawtchouk(p: dict):
    pp, Nr, q = _req(p, ["p", "N", "q"], "quantum_q_krawtchouk")
    N = _int_N(Nr, "quantum_q_krawtchouk")
    _check_q(q, "quantum_q_krawtchouk")
    if not pp > q**-N:
        raise InvalidParameter(f"quantum_q_krawtchouk requires p > q**-N, got p={pp}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_INCREASING, q=q, N=N)
    d1 = Poly.of([1, -(1 + pp * q ** (N + 1)), pp * q ** (N + 1)])
    d2 = Poly.of([1, -(q ** (N + 1))])
    # omega(0) = (-1)**N (pq;q)_N / (q;q)_N, positive on the valid range
    w0 = (-1) ** N
    for j in range(N):
        w0 = w0 * (1 - pp * q ** (j + 1)) / (1 - q ** (j + 1))

    def inc(x: int) -> Real:
        return -(1 - q ** (N - x + 1)) * q ** (x - 1) / ((1 - pp * q ** (N - x + 1)) * (1 - q**x))

    return lat, d1, d2, w0, inc


def _build_q_krawtchouk(p: dict):
    pp, Nr, q = _req(p, ["p", "N", "q"], "q_krawtchouk")
    N = _int_N(Nr, "q_krawtchouk")
    _check_q(q, "q_krawtchouk")
    if not pp > 0:
        raise InvalidParameter(f"q_krawtchouk requires p > 0, got p={pp}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_INCREASING, q=q, N=N)
    d1 = Poly.of([-pp, pp])
    d2 = Poly.of([q**-N, -q])

    def inc(x: int) -> Real:
        return (1 - q ** (x - 1 - N)) / ((1 - q**x) * (-pp))

    return lat, d1, d2, real(1), inc


def _build_affine_q_krawtchouk(p: dict):
    pp, Nr, q = _req(p, ["p", "N", "q"], "affine_q_krawtchouk")
    N = _int_N(Nr, "affine_q_krawtchouk")
    _check_q(q, "affine_q_krawtchouk")
    if not (0 < pp < 1 / q):
        raise InvalidParameter(f"affine_q_krawtchouk requires 0 < p < 1/q, got p={pp}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_INCREASING, q=q, N=N)
    d1 = Poly.of([-pp, pp])
    # d2 = (zeta - p)(1 - q**(N+1) zeta); this orientation is the one the
    # weight ratio identity fixes (the reversed second factor fails it by a
    # global sign).
    d2 = Poly.of([-pp, 1 + pp * q ** (N + 1), -(q ** (N + 1))])

    def inc(x: int) -> Real:
        return (1 - pp * q**x) * (1 - q ** (N - x + 1)) / ((1 - q**x) * pp * q)

    return lat, d1, d2, real(1), inc


def _build_little_q_laguerre(p: dict):
    a, q = _req(p, ["a", "q"], "little_q_laguerre")
    _check_q(q, "little_q_laguerre")
    if not (0 < a < 1 / q):
        raise InvalidParameter(f"little_q_laguerre requires 0 < a < 1/q, got a={a}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_DECREASING, q=q)
    d1 = Poly.of([-1, 1])
    d2 = Poly.of([-a])
    return lat, d1, d2, real(1), lambda x: a * q / (1 - q**x)


def _build_alternative_q_charlier(p: dict):
    a, q = _req(p, ["a", "q"], "alternative_q_charlier")
    _check_q(q, "alternative_q_charlier")
    if not a > 0:
        raise InvalidParameter(f"alternative_q_charlier requires a > 0, got a={a}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_DECREASING, q=q)
    d1 = Poly.of([-1, 1])
    d2 = Poly.of([0, -a / q])
    return lat, d1, d2, real(1), lambda x: a * q**x / (1 - q**x)


def _build_q_charlier(p: dict):
    a, q = _req(p, ["a", "q"], "q_charlier")
    _check_q(q, "q_charlier")
    if not a > 0:
        raise InvalidParameter(f"q_charlier requires a > 0, got a={a}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_INCREASING, q=q)
    d1 = Poly.of([-1, 1])
    d2 = Poly.of([a])
    return lat, d1, d2, real(1), lambda x: a * q ** (x - 1) / (1 - q**x)


def _build_al_salam_carlitz_ii(p: dict):
    a, q = _req(p, ["a", "q"], "al_salam_carlitz_ii")
    _check_q(q, "al_salam_carlitz_ii")
    if not a > 0:
        raise InvalidParameter(f"al_salam_carlitz_ii requires a > 0, got a={a}")
    lat = LatticeSpec(LatticeKind.Q_GEOMETRIC_INCREASING, q=q)
    d1 = Poly.of([a, -(1 + a), 1])
    d2 = Poly.of([a])

    def inc(x: int) -> Real:
        return q ** (2 * x - 1) * a / ((1 - q**x) * (1 - a * q**x))

    return lat, d1, d2, real(1), inc


_FAMILIES: dict[str, _FamilyDef] = {
    "charlier": _FamilyDef("Poisson-type weight a**x / x! on 0, 1, 2, ...", ("a",), _build_charlier),
    "meixner": _FamilyDef("negative-binomial weight (beta)_x c**x / x! on 0, 1, 2, ...", ("beta", "c"), _build_meixner),
    "krawtchouk": _FamilyDef("binomial weight on {0..N}", ("p", "N"), _build_krawtchouk),
    "hahn": _FamilyDef("product-of-binomials weight on {0..N}", ("alpha", "beta", "N"), _build_hahn),
    "q_hahn": _FamilyDef("q-deformed Hahn weight on {q**-x, x=0..N}", ("alpha", "beta", "N", "q"), _build_q_hahn),
    "little_q_jacobi": _FamilyDef("weight (bq;q)_x (aq)**x / (q;q)_x on {q**x}", ("a", "b", "q"), _build_little_q_jacobi),
    "q_meixner": _FamilyDef("q-deformed negative-binomial weight on {q**-x}", ("b", "c", "q"), _build_q_meixner),
    "quantum_q_krawtchouk": _FamilyDef("quantum q-binomial weight on {q**-x, x=0..N}", ("p", "N", "q"), _build_quantum_q_krawtchouk),
    "q_krawtchouk": _FamilyDef("q-binomial weight on {q**-x, x=0..N}", ("p", "N", "q"), _build_q_krawtchouk),
    "affine_q_krawtchouk": _FamilyDef("affine q-binomial weight on {q**-x, x=0..N}", ("p", "N", "q"), _build_affine_q_krawtchouk),
    "little_q_laguerre": _FamilyDef("weight (aq)**x / (q;q)_x on {q**x}", ("a", "q"), _build_little_q_laguerre),
    "alternative_q_charlier": _FamilyDef("weight a**x q**binom(x+1,2) / (q;q)_x on {q**x}", ("a", "q"), _build_alternative_q_charlier),
    "q_charlier": _FamilyDef("weight a**x q**binom(x,2) / (q;q)_x on {q**-x}", ("a", "q"), _build_q_charlier),
    "al_salam_carlitz_ii": _FamilyDef("weight q**(x**2) a**x / ((q;q)_x (aq;q)_x) on {q**-x}", ("a", "q"), _build_al_salam_carlitz_ii),
}

FAMILY_NAMES: tuple[str, ...] = tuple(_FAMILIES)

RECURRENCE_FAMILY_NAMES: tuple[str, ...] = (
    "charlier",
    "meixner",
    "krawtchouk",
    "q_charlier",
    "little_q_laguerre",
    "alternative_q_charlier",
    "little_q_jacobi",
    "q_krawtchouk",
)


def family_parameter_names(name: str) -> tuple[str, ...]:
    if name not in _FAMILIES:
        raise UnknownFamily(f"unknown family {name!r}")
    return _FAMILIES[name].param_names


def family_description(name: str) -> str:
    if name not in _FAMILIES:
        raise UnknownFamily(f"unknown family {name!r}")
    return _FAMILIES[name].description


_LATTICE_LABELS = {
    "charlier": "linear",
    "meixner": "linear",
    "krawtchouk": "linear",
    "hahn": "linear",
    "q_hahn": "q-geometric increasing (q**-x)",
    "little_q_jacobi": "q-geometric decreasing (q**x)",
    "q_meixner": "q-geometric increasing (q**-x)",
    "quantum_q_krawtchouk": "q-geometric increasing (q**-x)",
    "q_krawtchouk": "q-geometric increasing (q**-x)",
    "affine_q_krawtchouk": "q-geometric increasing (q**-x)",
    "little_q_laguerre": "q-geometric decreasing (q**x)",
    "alternative_q_charlier": "q-geometric decreasing (q**x)",
    "q_charlier": "q-geometric increasing (q**-x)",
    "al_salam_carlitz_ii": "q-geometric increasing (q**-x)",
}


def family_lattice_label(name: str) -> str:
    """Human-readable lattice kind for a family name, without parameters."""
    if name not in _FAMILIES:
        raise UnknownFamily(f"unknown family {name!r}")
    return _LATTICE_LABELS[name]


def make_family(name: str, params: Mapping[str, int | float | str | Real]) -> FamilySpec:
    """Build a validated FamilySpec; raises UnknownFamily / InvalidParameter."""
    if name not in _FAMILIES:
        raise UnknownFamily(f"unknown family {name!r}; known: {', '.join(FAMILY_NAMES)}")
    converted = {k: real(v) for k, v in dict(params).items()}
    lat, d1, d2, w0, inc = _FAMILIES[name].build(converted)
    supports = d1.degree <= 1 and d2.degree <= 1
    ordering = (
        "decreasing" if lat.kind is LatticeKind.Q_GEOMETRIC_DECREASING else "increasing"
    )
    return FamilySpec(
        name=name,
        params=converted,
        lattice=lat,
        d1=d1,
        d2=d2,
        supports_linear_recurrence=supports,
        ordering=ordering,
        _w0=w0,
        _increment=inc,
    )


def weight(f: FamilySpec, x: int) -> Real:
    """The weight omega(x), normalized so that omega(0) > 0.

    Strictly positive for parameters in the classical ranges; signed values
    can occur on the deliberately open ranges. Raises IndexOutOfRange beyond
    the lattice and DegenerateWeight if a weight vanishes exactly.
    """
    if x < 0 or (f.lattice.N is not None and x > f.lattice.N):
        raise IndexOutOfRange(f"x={x} outside lattice of {f.name} (N={f.lattice.N})")
    cache = f._wcache
    if not cache:
        w0 = f._w0
        if w0 == 0:
            raise DegenerateWeight(f"{f.name}: omega(0) = 0")
        cache.append(abs(w0))
    while len(cache) <= x:
        try:
            nxt = cache[-1] * f._increment(len(cache))
        except ZeroDivisionError:
            raise DegenerateWeight(
                f"{f.name}: weight ratio undefined at x={len(cache)}"
            ) from None
        if nxt == 0:
            raise DegenerateWeight(f"{f.name}: weight vanishes at x={len(cache)}")
        cache.append(nxt)
    return cache[x]


def ratio_identity_residual(f: FamilySpec, x_max: int) -> Real:
    """Worst relative deviation of omega(x-1)/omega(x) from eta*d1(pi_x)/d2(pi_x)."""
    if f.lattice.N is not None:
        x_max = min(x_max, f.lattice.N)
    worst = real(0)
    eta = f.eta
    for x in range(1, x_max + 1):
        pi = f.point(x)
        lhs = weight(f, x - 1) / weight(f, x)
        rhs = eta * f.d1(pi) / f.d2(pi)
        worst = max(worst, rel_diff(lhs, rhs))
    return worst


def check_ratio_identity(f: FamilySpec, x_max: int, tol: Real) -> bool:
    """True iff the weight/d1/d2 ratio identity holds to relative tol on 1..x_max."""
    return ratio_identity_residual(f, x_max) <= tol


def x_coordinate(f: FamilySpec, s: int) -> Real:
    """Plot abscissa for index s, following the per-family display conventions."""
    kind = f.lattice.kind
    q = f.lattice.q
    if f.name == "q_krawtchouk":
        N = f.lattice.N
        return N * (q**-s - 1) / (q**-N - 1)
    if f.name == "alternative_q_charlier":
        return q**-s
    if kind is LatticeKind.LINEAR:
        return real(s)
    if kind is LatticeKind.Q_GEOMETRIC_INCREASING:
        return q**-s
    return q**s


def density_value(f: FamilySpec, s: int, d_cur: Real, d_next: Real) -> Real:
    """Density at index s from consecutive gap probabilities D_s, D_{s+1}.

    Linear lattices use the plain difference; q-lattices use the q-derivative
    q**(+-s) * (D_{s+1} - D_s) / (1 - q); q_krawtchouk additionally carries
    the normalization matching its rescaled abscissa. alternative_q_charlier
    follows the increasing-lattice display convention.
    """
    diff = d_next - d_cur
    kind = f.lattice.kind
    q = f.lattice.q
    if f.name == "q_krawtchouk":
        N = f.lattice.N
        return (q**-N - 1) * q**s * diff / ((1 - q) * N)
    if f.name == "alternative_q_charlier":
        return q**s * diff / (1 - q)
    if kind is LatticeKind.LINEAR:
        return diff
    if kind is LatticeKind.Q_GEOMETRIC_INCREASING:
        return q**s * diff / (1 - q)
    return q**-s * diff / (1 - q)
