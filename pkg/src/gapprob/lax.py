"""General recurrence engine for gap probabilities.

Advances the connection data (A_s, C_s) of the discrete Lax pair by the
closed rational update formulas, tracks the scalar h_s (the value of the
upper-left entry of the local solution at its newest pole), and advances
the determinants D_s by the Fredholm recurrence, starting from the closed
initial data at s = k.

The engine covers every family whose second-equation matrix depends
linearly on the spectral variable, which is exactly the set flagged by
FamilySpec.supports_linear_recurrence.
"""
from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp

from .errors import (
    EpsilonSingular,
    IndexOutOfRange,
    InvalidParameter,
    MonotonicityViolation,
    ResidueViolation,
    UnsupportedFamily,
)
from .families import FamilySpec, density_value, weight, x_coordinate
from .oracle import build_ortho_basis, compute_Ak, compute_Mk_linear
from .precision import Mat2, Real, mat2_mul, real, tau

__all__ = [
    "LaxState",
    "GapRow",
    "GapTable",
    "init_state",
    "epsilon",
    "step_general",
    "fredholm_step",
    "run",
    "compatibility_residual",
]


@dataclass(frozen=True)
class LaxState:
    """Recurrence state at index s.

    (p, q, r) are the entries of the nilpotent residue matrix
    A_s = [[p, q], [r, -p]] and (c11, c12, c21, c22) the entries of the
    constant part C_s of M_s(zeta) = diag(kappa1, kappa2) zeta + C_s.
    h is m_s^{11}(pi_s); Dprev and Dcur hold D_s and D_{s+1}.
    """

    s: int
    p: Real
    q: Real
    r: Real
    c11: Real
    c12: Real
    c21: Real
    c22: Real
    kappa1: Real
    kappa2: Real
    h: Real
    Dprev: Real
    Dcur: Real

    def a_matrix(self) -> Mat2:
        return Mat2(self.p, self.q, self.r, -self.p)

    def m_matrix(self, zeta: Real) -> Mat2:
        return Mat2(
            self.kappa1 * zeta + self.c11,
            self.c12,
            self.c21,
            self.kappa2 * zeta + self.c22,
        )


@dataclass(frozen=True)
class GapRow:
    s: int
    x_coord: Real
    D: Real
    density: Real


@dataclass(frozen=True)
class GapTable:
    """Computed gap probabilities for one family, one k, one method."""

    rows: tuple[GapRow, ...]
    family: str
    params: dict
    k: int
    precision: int
    method: str


def _check_k(f: FamilySpec, k: int) -> None:
    if k < 1:
        raise InvalidParameter("k must be a positive integer")
    n = f.lattice.N
    if n is not None and k > n:
        raise InvalidParameter(f"k={k} exceeds the lattice size N={n}")


def init_state(f: FamilySpec, k: int) -> LaxState:
    """Initial recurrence state at s = k from the closed formulas."""
    if not f.supports_linear_recurrence:
        raise UnsupportedFamily(
            f"family {f.name!r} has no linear second-equation matrix"
        )
    _check_k(f, k)
    a = compute_Ak(f, k)
    lam, c = compute_Mk_linear(f, k)
    pts = [f.point(j) for j in range(k + 1)]
    h = mp.fprod(pts[k] - pts[j] for j in range(k))
    z = mp.fprod(build_ortho_basis(f, k - 1).norms)
    vandermonde = mp.fprod(
        (pts[i] - pts[j]) ** 2 for i in range(k) for j in range(i)
    )
    w_prod = mp.fprod(weight(f, x) for x in range(k))
    d_k = vandermonde * w_prod / z
    d_k1 = weight(f, k) / a.a12 * d_k * h**2
    return LaxState(
        s=k,
        p=a.a11,
        q=a.a12,
        r=a.a21,
        c11=c.a11,
        c12=c.a12,
        c21=c.a21,
        c22=c.a22,
        kappa1=lam.a11,
        kappa2=lam.a22,
        h=h,
        Dprev=d_k,
        Dcur=d_k1,
    )


def epsilon(st: LaxState, f: FamilySpec) -> Real:
    """Determinant of the linear system solved by one recurrence step."""
    pt = f.point(st.s + 1)
    ie = 1 / f.eta
    return (
        f.d1(pt) * f.d2(pt)
        + ie * st.kappa1 * (st.p * st.c22 - st.r * st.c12)
        - ie * st.kappa2 * (st.p * st.c11 + st.q * st.c21)
    )


def _u_value(st: LaxState) -> Real:
    ratio = st.p / st.q
    return (
        -st.kappa2 * st.c21
        + ratio * (st.kappa1 * st.c22 - st.kappa2 * st.c11)
        + ratio**2 * st.kappa1 * st.c12
    )


def fredholm_step(st: LaxState, f: FamilySpec) -> Real:
    """D_{s+2} from (D_s, D_{s+1}) and the state at s."""
    pt = f.point(st.s + 1)
    increment = (
        weight(f, st.s)
        * _u_value(st)
        * st.h**2
        / (f.eta * f.d1(pt) * f.d2(pt))
    )
    return st.Dcur * (st.Dcur / st.Dprev + increment)


def _project_nilpotent(p: Real, q: Real, r: Real, s: int) -> Real:
    """Return p, re-projected onto p*p = -q*r when rounding has drifted."""
    drift = abs(p * p + q * r)
    scale = max(abs(p), abs(q), abs(r)) ** 2
    if drift <= tau() * scale:
        return p
    if drift <= mp.sqrt(tau()) * scale and q * r < 0:
        return mp.sign(p) * mp.sqrt(-q * r)
    raise ResidueViolation(
        "nilpotency of the residue matrix lost beyond repair; "
        "retry at higher precision",
        step=s,
    )


def step_general(st: LaxState, f: FamilySpec) -> LaxState:
    """Advance the state from s to s+1 by the general closed formulas."""
    n = f.lattice.N
    if n is not None and st.s >= n:
        raise IndexOutOfRange(
            f"cannot step past the end of a finite lattice (s={st.s}, N={n})"
        )
    pt = f.point(st.s + 1)
    eta = f.eta
    ie = 1 / eta
    eps = epsilon(st, f)
    scale = (
        abs(f.d1(pt) * f.d2(pt))
        + abs(ie * st.kappa1 * st.p * st.c22)
        + abs(ie * st.kappa1 * st.r * st.c12)
        + abs(ie * st.kappa2 * st.p * st.c11)
        + abs(ie * st.kappa2 * st.q * st.c21)
    )
    if abs(eps) <= tau() * max(scale, real(1)):
        raise EpsilonSingular(
            "step determinant vanished to working precision; "
            "increase the precision and retry",
            step=st.s,
        )

    d_next = fredholm_step(st, f)

    t1 = st.p * st.c12 + st.q * st.c22 + st.kappa2 * pt * st.q
    t2 = st.r * st.c11 - st.p * st.c21 + st.kappa1 * pt * st.r
    p1 = -ie / (st.p * eps) * t1 * t2
    q1 = ie / (st.q * eps) * t1**2
    r1 = ie / (st.r * eps) * t2**2
    p1 = _project_nilpotent(p1, q1, r1, st.s + 1)

    c11 = st.c11 + ie * st.kappa1 * st.p - st.kappa1 * p1
    c12 = st.c12 + ie * st.kappa2 * st.q - st.kappa1 * q1
    c21 = st.c21 + ie * st.kappa1 * st.r - st.kappa2 * r1
    c22 = st.c22 - ie * st.kappa2 * st.p + st.kappa2 * p1

    mu12 = st.c12
    mu22 = st.kappa2 * pt + st.c22
    h1 = (mu22 + st.p / st.q * mu12) * st.h / f.d2(pt)

    return LaxState(
        s=st.s + 1,
        p=p1,
        q=q1,
        r=r1,
        c11=c11,
        c12=c12,
        c21=c21,
        c22=c22,
        kappa1=st.kappa1,
        kappa2=st.kappa2,
        h=h1,
        Dprev=st.Dcur,
        Dcur=d_next,
    )


def compatibility_residual(
    prev: LaxState, nxt: LaxState, f: FamilySpec, zeta: Real
) -> Real:
    """Residual of the compatibility condition linking two adjacent states.

    Evaluates both sides of
    (I + A_s/(sigma zeta - pi_s)) M_s(zeta) =
    M_{s+1}(zeta) (I + A_{s+1}/(zeta - pi_{s+1}))
    and returns the largest entrywise difference, scaled by the size of
    the two sides.
    """
    pole = f.point(prev.s + 1)
    denom = zeta - pole
    if abs(denom) <= tau() * (1 + abs(pole)):
        raise IndexOutOfRange("evaluation point coincides with the pole")
    ie = 1 / f.eta
    a_prev = prev.a_matrix()
    left_factor = Mat2(
        1 + ie * a_prev.a11 / denom,
        ie * a_prev.a12 / denom,
        ie * a_prev.a21 / denom,
        1 - ie * a_prev.a11 / denom,
    )
    lhs = mat2_mul(left_factor, prev.m_matrix(zeta))
    a_next = nxt.a_matrix()
    right_factor = Mat2(
        1 + a_next.a11 / denom,
        a_next.a12 / denom,
        a_next.a21 / denom,
        1 - a_next.a11 / denom,
    )
    rhs = mat2_mul(nxt.m_matrix(zeta), right_factor)
    diff = max(
        abs(lhs.a11 - rhs.a11),
        abs(lhs.a12 - rhs.a12),
        abs(lhs.a21 - rhs.a21),
        abs(lhs.a22 - rhs.a22),
    )
    return diff / max(lhs.norm(), rhs.norm(), real(1))


def weights_positive(f: FamilySpec, x_max: int) -> bool:
    """True when the weight is strictly positive for x = 0..x_max.

    A signed weight (reachable for little_q_jacobi with b > 1/q) still
    yields well-defined determinants, but D_s then loses its probability
    interpretation and the monotonicity and (0, 1] range checks no longer
    apply.
    """
    n = f.lattice.N
    upto = x_max if n is None else min(x_max, n)
    return all(weight(f, x) > 0 for x in range(upto + 1))


def _assemble_table(
    f: FamilySpec, k: int, s_max: int, d_of, method: str
) -> GapTable:
    n = f.lattice.N
    enforce = weights_positive(f, s_max + 16)
    rows = []
    prev_d = None
    for s in range(k, s_max + 1):
        d = d_of(s)
        if enforce and not (0 < d <= 1 + tau()):
            raise MonotonicityViolation(
                f"D_{s} = {mp.nstr(d, 10)} is outside (0, 1]", step=s
            )
        if (
            enforce
            and prev_d is not None
            and d < prev_d - tau() * max(prev_d, real(1))
        ):
            raise MonotonicityViolation(
                f"D_{s} decreased below D_{s - 1}", step=s
            )
        prev_d = d
        if n is not None and s == n + 1:
            density = real(0)
        else:
            density = density_value(f, s, d, d_of(s + 1))
        rows.append(GapRow(s=s, x_coord=x_coordinate(f, s), D=d, density=density))
    return GapTable(
        rows=tuple(rows),
        family=f.name,
        params=dict(f.params),
        k=k,
        precision=mp.prec,
        method=method,
    )


def run(f: FamilySpec, k: int, s_max: int) -> GapTable:
    """Gap probabilities D_s for s = k..s_max by the general recurrence."""
    _check_k(f, k)
    if s_max < k:
        raise InvalidParameter(f"s_max={s_max} is below k={k}")
    n = f.lattice.N
    if n is not None and s_max > n + 1:
        raise IndexOutOfRange(f"s_max={s_max} exceeds N+1={n + 1}")
    st = init_state(f, k)
    dvals = {k: st.Dprev, k + 1: st.Dcur}
    while st.s < s_max and (n is None or st.s <= n - 2):
        st = step_general(st, f)
        dvals[st.s + 1] = st.Dcur

    def d_of(s: int) -> Real:
        if n is not None and s == n + 1:
            return real(1)
        return dvals[s]

    return _assemble_table(f, k, s_max, d_of, "general")
